// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is nonzero only when a criterion fails that is not listed in kExpectedFail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pamlab/runner.hpp"

using namespace pamlab;
namespace fs = std::filesystem;

#ifndef PAMLAB_CLI
#define PAMLAB_CLI "pamlab"
#endif

namespace {

// |H(1e-3) - Upsilon(0)| <= 1e-4 Upsilon(0) cannot hold: H(0) - H(t) = int_0^t k >= t k(t),
// and for the Gaussian kernel t k(t) / Upsilon(0) is about 5e-4 at t = 1e-3.
const std::set<int> kExpectedFail{2};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

fs::path workdir(const std::string& name) {
  auto p = fs::temp_directory_path() / "pamlab_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json run_cli_subcommand(const std::string& sub, const std::string& text, const fs::path& dir, int* code) {
  RunOptions o;
  o.out_dir = dir;
  o.config_text = text;
  Json summary;
  *code = run_subcommand(sub, parse_config(text), o, &summary);
  return summary;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const SpectralMeasure gauss(GaussianSpectral{1.0});

// ---------------------------------------------------------------- 1

Verdict c1() {
  const double p = std::pow(M_PI, 1.5);
  const double u = upsilon(gauss, 3, 0.0).value, k0 = covariance_k(gauss, 3, 0.0).value,
               h3 = covariance_H(gauss, 3, 3.0).value;
  const double ue = 1 / (4 * p), ke = 1 / (8 * p), he = 0.5 / (4 * p);
  const double worst = std::max({rel(u, ue), rel(k0, ke), rel(h3, he)});
  return {worst <= 1e-6, "Upsilon(0)=" + fmt(u, 9) + " k(0)=" + fmt(k0, 9) + " H(3)=" + fmt(h3, 9) +
                             " max rel err " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 2

Verdict c2() {
  const double u = upsilon(gauss, 3, 0.0).value, h = covariance_H(gauss, 3, 1e-3).value;
  const double gap = std::abs(h - u) / u;
  std::vector<std::pair<std::string, SpectralMeasure>> menu{
      {"white", SpectralMeasure(White{})},
      {"gaussian:1", gauss},
      {"bessel_corr:2", SpectralMeasure(BesselAsCorrelation{2.0})},
      {"bessel_spec:2.5", SpectralMeasure(BesselAsSpectral{2.5})},
      {"riesz:1.5,2.5", SpectralMeasure(RieszType{1.5, 2.5})},
      {"bump:1", SpectralMeasure(bump_mollifier(1.0))}};
  bool monotone = true;
  std::string checked;
  for (const auto& [id, m] : menu) {
    if (!upsilon(m, 3, 0.0).finite()) continue;
    double prev = INFINITY;
    for (int i = 0; i < 50; ++i) {
      const double t = std::pow(10.0, -3.0 + 6.0 * i / 49.0);
      const double v = covariance_H(m, 3, t).value;
      if (!(v < prev)) monotone = false;
      prev = v;
    }
    checked += (checked.empty() ? "" : ",") + id;
  }
  const double mass = h - covariance_H(gauss, 3, 2e-3).value;
  return {gap <= 1e-4 && monotone,
          "|H(1e-3)-Upsilon(0)|/Upsilon(0)=" + fmt(gap, 4) + " (gate 1e-4; int_0^1e-3 k ~ " +
              fmt(mass / u, 3) + " Upsilon(0) per 1e-3 step); H strictly decreasing on 50 points for [" + checked +
              "]: " + (monotone ? "yes" : "no")};
}

// ---------------------------------------------------------------- 3

Verdict c3() {
  bool ok = true;
  std::string bad;
  for (double s : {0.5, 1.5, 2.5, 3.5}) {
    SpectralMeasure m(BesselAsCorrelation{s});
    bool dalang = upsilon(m, 3, 1.0).finite(), u0 = upsilon(m, 3, 0.0).finite();
    if (dalang != (s > 1) || u0 != (s > 1)) ok = false, bad += " bessel s=" + fmt(s);
  }
  for (double s : {1.0, 3.0, 3.5, 4.0}) {
    SpectralMeasure m(BesselAsCorrelation{s});
    if (trace_value(m, 3).finite() != (s > 3)) ok = false, bad += " trace s=" + fmt(s);
  }
  int cells = 0;
  for (double s1 : {0.5, 1.0, 1.5, 2.5})
    for (double s2 : {0.5, 1.5, 2.0, 2.5}) {
      ++cells;
      if (upsilon(SpectralMeasure(RieszType{s1, s2}), 3, 0.0).finite() != (s1 > 1 && s2 > 2))
        ok = false, bad += " riesz(" + fmt(s1) + "," + fmt(s2) + ")";
    }
  return {ok, "Bessel s in {0.5,1.5,2.5,3.5}, trace s in {1,3,3.5,4}, Riesz " + std::to_string(cells) +
                  " cells" + (bad.empty() ? "" : "; mismatches:" + bad)};
}

// ---------------------------------------------------------------- 4

Verdict c4() {
  const TorusGrid g(3, 8.0, 16);
  const double dt = 0.01;
  const std::vector<std::vector<int>> lags{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {1, 1, 1}, {3, 0, 2}};
  double worst = 0;
  std::string parts;
  for (const auto& [id, m] : std::vector<std::pair<std::string, SpectralMeasure>>{{"white", SpectralMeasure(White{})},
                                                                                  {"gaussian:1", gauss}}) {
    auto spec = build_noise_spec(m, g, ZeroMode::Keep);
    auto probes = noise_covariance_check(spec, dt, lags, 10000, 4, 0);
    double z = 0;
    for (const auto& p : probes) z = std::max(z, p.z_score());
    std::vector<double> v(g.sites(), 0.0);
    for (std::size_t x = 0; x < v.size(); ++x) v[x] = std::exp(-0.5 * g.radius2(x));
    auto iso = ito_isometry_check(spec, dt, v, 10000, 5);
    z = std::max(z, iso.z_score);
    worst = std::max(worst, z);
    parts += " " + id + ": max z " + fmt(z, 3) + " (isometry rel err " + fmt(iso.relative_error, 3) + ")";
  }
  return {worst <= 5.0, "10^4 draws, 16^3;" + parts};
}

// ---------------------------------------------------------------- 5, 6

Json bound_summary;
int bound_code = -1;

std::string bound_config() {
  return "dimension = 3\nL = 8\nn = 16\nkernel = \"gaussian:a=1\"\ncoefficient = pam\nlambda = 1\n"
         "mu = \"flat:1\"\nT = 1\nreplicates = 1000\nseed = 2024\n";
}

Verdict c5() {
  bound_summary = run_cli_subcommand("bound-check", bound_config(), workdir("bound"), &bound_code);
  const auto& row = bound_summary["moment_pde"].back();
  const double mean = row["mean"], se = row["se"], pde = row["pde"], r = row["rel_error"];
  const double tol = 0.05 + 3 * se / pde;
  return {r <= tol, "E^[u^2](1)=" + fmt(mean) + " +- " + fmt(se, 3) + " vs M_PDE(1)=" + fmt(pde) + ": rel err " +
                        fmt(r, 3) + " <= " + fmt(tol, 3) + " (1000 replicates, 16^3, L=8, lambda=1)"};
}

Verdict c6() {
  const double uh = bound_summary["upsilon_h0"];
  std::ifstream in(fs::temp_directory_path() / "pamlab_acceptance" / "bound" / "bound_check.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0, bad = 0;
  double worst = -INFINITY;
  const double bound = 1.0 / (1.0 - 4.0 * uh);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> c;
    std::string x;
    while (std::getline(ss, x, ',')) c.push_back(x);
    const double lhs = std::stod(c[2]) - 3 * std::stod(c[3]);
    worst = std::max(worst, lhs);
    ++rows;
    if (!(lhs <= bound)) ++bad;
  }
  return {rows > 0 && bad == 0, std::to_string(rows) + " probes; max E^[u^2]-3SE=" + fmt(worst) +
                                    " vs 1/(1-4 lambda^2 Upsilon_h(0))=" + fmt(bound) + " (Upsilon_h(0)=" +
                                    fmt(uh, 5) + ")"};
}

// ---------------------------------------------------------------- 7

Verdict c7() {
  int code = 0;
  auto s = run_cli_subcommand(
      "lyapunov-sweep",
      "dimension = 3\nL = 16\nn = 32\nkernel = \"gaussian:a=1\"\nlambdas = [0.25, 0.5, 1, 2, 4, 8]\nphase_T = 20\n",
      workdir("sweep"), &code);
  std::string cls;
  for (const auto& r : s["rows"]) cls += " " + fmt(r["lambda"].get<double>()) + ":" + r["class"].get<std::string>();
  std::string br = s["bracket"].is_null() ? "none"
                                          : "(" + fmt(s["bracket"][0].get<double>()) + ", " +
                                                fmt(s["bracket"][1].get<double>()) + ")";
  return {code == kExitPass, "32^3, L=16;" + cls + "; crossover bracket " + br};
}

// ---------------------------------------------------------------- 8

Verdict c8() {
  int code = 0;
  auto s = run_cli_subcommand("cauchy",
                              "dimension = 3\nL = 8\nn = 16\nkernel = \"gaussian:a=1\"\nlambda = 1\nmu = \"flat:1\"\n"
                              "dt = 0.02\nK_list = [1, 2, 4, 8]\nreplicates = 1000\nseed = 8\n",
                              workdir("cauchy"), &code);
  std::string rows;
  for (const auto& r : s["rows"])
    rows += " K=" + fmt(r["K"].get<double>()) + ":J=" + fmt(r["J"].get<double>(), 4) + "/env=" +
            fmt(r["envelope"].get<double>(), 4);
  return {code == kExitPass, "strictly decreasing " + std::string(s["strictly_decreasing"] ? "yes" : "no") +
                                 ", J(8)/J(1)=" + fmt(s["ratio_last_first"].get<double>(), 4) + ", below 2x envelope " +
                                 (s["below_twice_envelope"] ? "yes" : "no") + ";" + rows};
}

// ---------------------------------------------------------------- 9

Verdict c9() {
  int code = 0;
  const std::string flat = format_double(std::pow(2 * M_PI, -3));
  const std::string L = format_double(4 * M_PI);
  auto s = run_cli_subcommand("uniqueness",
                              "dimension = 3\nL = " + L + "\nn = 16\nkernel = \"gaussian:a=1\"\nlambda = 1\nmu = \"flat:" +
                                  flat + "\"\nmu2 = \"comb:truncation=10\"\nT = 4\nsnapshot_times = [1, 2, 4]\n"
                                         "replicates = 400\nseed = 9\n",
                              workdir("uniqueness"), &code);
  std::string rows;
  for (const auto& r : s["rows"])
    rows += " t=" + fmt(r["t"].get<double>()) + ":msd=" + fmt(r["msd"].get<double>(), 4) + "/env=" +
            fmt(r["envelope"].get<double>(), 4);
  return {code == kExitPass, "L=4pi, 16^3, 400 replicates, C=" + fmt(s["C"].get<double>(), 4) + ";" + rows};
}

// ---------------------------------------------------------------- 10

Verdict c10() {
  int code = 0;
  auto s = run_cli_subcommand("gronwall-verify", "dimension = 3\nbeta = 0.4\nvolterra_T = 40\n", workdir("gronwall"),
                              &code);
  return {code == kExitPass, s.dump()};
}

// ---------------------------------------------------------------- 11

Verdict c11() {
  int code = 0;
  auto s = run_cli_subcommand("bridge-verify", "samples = 100000\npath_n = 64\nalphas = [0.25, 0.5, 1]\n",
                              workdir("bridge"), &code);
  std::string parts;
  for (const auto& c : s["checks"])
    parts += " " + c["check"].get<std::string>() + "=" + (c["pass"].get<bool>() ? "ok" : "FAIL");
  return {code == kExitPass, parts};
}

// ---------------------------------------------------------------- 12

Verdict c12() {
  auto dir = workdir("repro");
  const auto cfg = dir / "run.toml";
  std::ofstream(cfg) << "dimension = 3\nL = 8\nn = 16\nkernel = \"gaussian:a=1\"\nlambda = 1\nT = 0.5\n"
                        "snapshot_times = [0.25, 0.5]\nK_list = [0.5, 1]\nreplicates = 8\nseed = 77\n";
  bool same = true;
  std::string files;
  for (const std::string sub : {"simulate", "cauchy"}) {
    std::vector<fs::path> outs;
    for (int threads : {1, 3}) {
      auto out = dir / (sub + "_t" + std::to_string(threads));
      std::string extra = sub == "cauchy" ? " 2>/dev/null" : "";
      std::string cmd = std::string(PAMLAB_CLI) + " " + sub + " --config " + cfg.string() + " --out " + out.string() +
                        " --threads " + std::to_string(threads) + " > " + (dir / (sub + ".log")).string() + extra;
      int rc = std::system(cmd.c_str());
      if (rc != 0 && !(sub == "cauchy" && WIFEXITED(rc) && WEXITSTATUS(rc) == 1)) return {false, "command failed: " + cmd};
      outs.push_back(out);
    }
    for (const auto& e : fs::directory_iterator(outs[0])) {
      if (e.path().extension() != ".csv") continue;
      auto other = outs[1] / e.path().filename();
      const bool eq = fs::exists(other) && slurp(e.path()) == slurp(other);
      same = same && eq;
      files += " " + sub + "/" + e.path().filename().string() + (eq ? "" : "(differs)");
    }
  }
  return {same && !files.empty(), "--threads 1 vs 3, identical bytes:" + files};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double budget;  // seconds
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all{{1, 1, c1},    {2, 5, c2},    {3, 30, c3},  {4, 60, c4},
                                   {5, 300, c5},  {6, 300, c6},  {7, 180, c7}, {8, 600, c8},
                                   {9, 300, c9},  {10, 60, c10}, {11, 180, c11}, {12, 120, c12}};
  int unexpected = 0;
  double bound_elapsed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.id == 5) bound_elapsed = secs;
    if (c.id == 6) secs += bound_elapsed;  // shares the run of 5
    const bool in_time = secs <= c.budget;
    const bool pass = v.pass && in_time;
    const bool expected = !pass && kExpectedFail.count(c.id);
    if (!pass && !expected) ++unexpected;
    std::printf("criterion %d: %s [%.2f s / %.0f s]%s %s\n", c.id, pass ? "PASS" : "FAIL", secs, c.budget,
                expected ? " (expected)" : (in_time ? "" : " (over time budget)"), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("unexpected failures: %d\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}

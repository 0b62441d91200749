#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pamlab/bridge_lab.hpp"
#include "pamlab/config.hpp"
#include "pamlab/heat_semigroup.hpp"
#include "pamlab/io.hpp"
#include "pamlab/lattice_solver.hpp"
#include "pamlab/moment_lab.hpp"
#include "pamlab/renewal_gronwall.hpp"
#include "pamlab/spectral_kernels.hpp"

namespace pamlab {

enum ExitCode : int { kExitPass = 0, kExitGateFailed = 1, kExitError = 2 };

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::string config_text;  // echoed into the manifest
  std::vector<std::string> warnings;
};

// What a subcommand hands back: overall gate status, a JSON summary, files written.
struct Outcome {
  bool pass = true;
  Json summary;
  std::vector<std::string> files;
};

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"kernel-report", "semigroup-report", "simulate",        "lyapunov-sweep",
                                              "cauchy",        "uniqueness",       "bound-check",     "gronwall-verify",
                                              "bridge-verify"};
  return names;
}

inline Json error_json(const std::exception& e) {
  Json err;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    err["code"] = errc_name(ce->code());
    err["message"] = ce->what();
    if (!ce->field().empty()) err["field"] = ce->field();
    if (ce->line() > 0) {
      err["line"] = ce->line();
      err["column"] = ce->column();
    }
  } else if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    err["code"] = errc_name(pe->code());
    err["message"] = pe->what();
  } else {
    err["code"] = "InternalError";
    err["message"] = e.what();
  }
  return Json{{"error", err}};
}

inline Json radial_json(const RadialIntegral& r) {
  return Json{{"value", json_number(r.value)},
              {"finite", r.finite()},
              {"inner", json_number(r.inner)},
              {"outer", json_number(r.outer)},
              {"inner_divergent", r.inner_divergent},
              {"outer_divergent", r.outer_divergent},
              {"error", json_number(r.error)}};
}

inline Json resolved_json(const RunConfig& c) {
  const auto& s = c.sim;
  Json j;
  j["version"] = c.schema_version;
  j["dimension"] = s.grid.d;
  j["L"] = s.grid.L;
  j["n"] = s.grid.n;
  j["kernel"] = s.kernel_id;
  j["coefficient"] = c.coefficient;
  j["lambda"] = c.lambda;
  j["saturation"] = c.saturation;
  j["mu"] = s.mu_id;
  j["mu2"] = c.mu2_id;
  j["dt"] = s.step_size();
  j["T"] = s.T;
  j["snapshot_times"] = s.times();
  j["replicates"] = s.replicates;
  j["seed"] = s.seed;
  j["K_list"] = s.K_list;
  j["zero_mode"] = zero_mode_name(s.zero_mode);
  j["deposit"] = s.deposit == DepositMode::Nearest ? "nearest" : "gaussian";
  j["snapshot_format"] = c.snapshot_format;
  j["lambdas"] = c.lambdas;
  j["phase_T"] = c.phase_T;
  j["phase_dt"] = c.phase_dt;
  j["alpha_grid"] = c.alpha_grid;
  j["t_grid"] = c.t_grid;
  j["t_max"] = c.t_max;
  j["beta"] = c.beta;
  j["volterra_T"] = c.volterra_T;
  j["volterra_dt"] = c.volterra_dt;
  j["samples"] = c.samples;
  j["path_n"] = c.path_n;
  j["alphas"] = c.alphas;
  j["conditioned_alphas"] = c.conditioned_alphas;
  j["conditioned_samples"] = c.conditioned_samples;
  return j;
}

namespace detail {

// Each constant is computed independently; one that cannot be formed is null with a note.
inline Json derived_constants(const RunConfig& c) {
  const auto& s = c.sim;
  Json j;
  auto guard = [&](const char* key, const std::function<Json()>& f) {
    try {
      j[key] = f();
    } catch (const std::exception& e) {
      j[key] = nullptr;
      j[std::string(key) + "_note"] = e.what();
    }
  };
  guard("upsilon0", [&] { return json_number(upsilon(s.kernel, s.grid.d, 0.0).value); });
  guard("upsilon_h0", [&] { return json_number(upsilon_h(build_noise_spec(s.kernel, s.grid, ZeroMode::Drop))); });
  guard("C_mu", [&] {
    auto m = c_mu(s.mu, s.grid.d, c.t_max);
    return Json{json_number(m.C_mu), json_number(m.C_hat_mu)};
  });
  if (j["C_mu"].is_array()) {
    Json pair = j["C_mu"];
    j["C_mu"] = pair[0];
    j["C_hat_mu"] = pair[1];
  }
  j["wraparound_bound"] = s.wraparound_bound(s.T);
  return j;
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) { return seed + 0x9E3779B97F4A7C15ull * k; }

inline std::string file(const std::filesystem::path& dir, const std::string& name, Outcome& o) {
  o.files.push_back(name);
  return (dir / name).string();
}

inline bool flat_only(const RoughMeasure& mu, double& level) {
  if (mu.terms().size() != 1) return false;
  const auto* f = std::get_if<Flat>(&mu.terms().front().part);
  if (!f) return false;
  level = mu.terms().front().coef * f->c;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------- subcommands

inline Outcome cmd_kernel_report(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  auto r = classify_conditions(c.sim.kernel, c.sim.grid.d, std::max(c.sim.b.lipschitz(), 1e-300), c.alpha_grid);
  Json j;
  j["kernel"] = c.sim.kernel_id;
  j["d"] = r.d;
  j["L_b"] = r.L_b;
  j["upsilon1"] = radial_json(r.upsilon1);
  j["dalang_ok"] = r.dalang_ok;
  j["upsilon0"] = radial_json(r.upsilon0);
  j["upsilon0_infinite"] = !r.upsilon0.finite();
  j["weak_disorder"] = r.weak_disorder;
  j["trace"] = radial_json(r.trace);
  Json alpha = Json::array();
  for (const auto& a : r.alpha)
    alpha.push_back(Json{{"alpha", a.alpha},
                         {"upsilon_alpha1", radial_json(a.upsilon_alpha1)},
                         {"strengthened_ok", a.strengthened_ok},
                         {"spectral_condition", radial_json(a.spectral_condition)}});
  j["alpha"] = alpha;
  write_json(detail::file(dir, "kernel_report.json", o), j);

  CsvWriter csv(detail::file(dir, "kernel_report.csv", o), {"quantity", "alpha", "value", "finite"});
  csv.row({std::string("upsilon1"), 0.0, r.upsilon1.value, r.upsilon1.finite()});
  csv.row({std::string("upsilon0"), 0.0, r.upsilon0.value, r.upsilon0.finite()});
  csv.row({std::string("trace"), 0.0, r.trace.value, r.trace.finite()});
  for (const auto& a : r.alpha) {
    csv.row({std::string("upsilon_alpha1"), a.alpha, a.upsilon_alpha1.value, a.upsilon_alpha1.finite()});
    csv.row({std::string("spectral_condition"), a.alpha, a.spectral_condition.value, a.spectral_condition.finite()});
  }
  csv.close();
  o.summary = j;
  return o;
}

inline Outcome cmd_semigroup_report(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  const auto& s = c.sim;
  if (!rough_icon_check(s.mu)) fail(Errc::NotRough, "initial measure fails the rough-data integrability condition");
  CsvWriter csv(detail::file(dir, "semigroup_report.csv", o), {"t", "j0_sup", "theta_tilde"});
  Json rows = Json::array();
  for (double t : c.t_grid) {
    if (!(t > 0)) fail(Errc::NonpositiveTime, "t_grid entries must be positive");
    double sup = j0_sup(abs_measure(s.mu), s.grid.d, t);
    double th = theta(s.mu, s.grid.d, t, c.t_max, ThetaMode::Tilde);
    csv.row({t, sup, th});
    rows.push_back(Json{{"t", t}, {"j0_sup", json_number(sup)}, {"theta_tilde", json_number(th)}});
  }
  csv.close();
  auto cm = c_mu(s.mu, s.grid.d, c.t_max);
  o.summary = Json{{"mu", s.mu_id},
                   {"C_mu", json_number(cm.C_mu)},
                   {"C_hat_mu", json_number(cm.C_hat_mu)},
                   {"j0_limit", json_number(j0_limit(s.mu, s.grid.d))},
                   {"rows", rows}};
  write_json(detail::file(dir, "semigroup_report.json", o), o.summary);
  return o;
}

inline Outcome cmd_simulate(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  auto snaps = simulate(c.sim);
  if (c.snapshot_format != "binary") {
    CsvWriter csv(detail::file(dir, "snapshots.csv", o), {"replicate", "t", "site", "value"});
    for (std::size_t r = 0; r < snaps.fields.size(); ++r)
      for (std::size_t ti = 0; ti < snaps.times.size(); ++ti) {
        const auto& v = snaps.fields[r][ti].values;
        for (std::size_t site = 0; site < v.size(); ++site)
          csv.row({static_cast<long long>(r), snaps.times[ti], static_cast<long long>(site), v[site]});
      }
    csv.close();
  }
  if (c.snapshot_format != "csv") write_snapshots_binary(detail::file(dir, "snapshots.bin", o), snaps);
  CsvWriter mom(detail::file(dir, "moments.csv", o), {"t", "p", "mean", "se"});
  Json rows = Json::array();
  for (double t : snaps.times)
    for (double p : {1.0, 2.0}) {
      auto e = estimate_moment(snaps, p, t);
      mom.row({t, p, e.mean, e.se});
      rows.push_back(Json{{"t", t}, {"p", p}, {"mean", json_number(e.mean)}, {"se", json_number(e.se)}});
    }
  mom.close();
  o.summary = Json{{"moments", rows}, {"negative_mean_events", snaps.negative_mean_events}};
  write_json(detail::file(dir, "simulate.json", o), o.summary);
  return o;
}

inline Outcome cmd_lyapunov_sweep(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  PhaseOptions opt;
  opt.T = c.phase_T;
  opt.dt = c.phase_dt;
  auto sw = phase_sweep(c.lambdas, c.sim.kernel, c.sim.grid, opt);
  CsvWriter csv(detail::file(dir, "lyapunov_sweep.csv", o),
                {"lambda", "disorder", "slope", "ci_lo", "ci_hi", "final_moment", "class"});
  Json rows = Json::array();
  for (const auto& r : sw.rows) {
    std::string cls = r.growing ? "growing" : "bounded";
    csv.row({r.lambda, r.disorder, r.fit.slope, r.fit.ci_lo, r.fit.ci_hi, r.final_moment, cls});
    rows.push_back(Json{{"lambda", r.lambda},
                        {"disorder", r.disorder},
                        {"slope", r.fit.slope},
                        {"ci", {r.fit.ci_lo, r.fit.ci_hi}},
                        {"class", cls}});
  }
  csv.close();
  const bool bracket = std::isfinite(sw.bracket_lo) && std::isfinite(sw.bracket_hi);
  o.pass = sw.monotone && bracket;
  o.summary = Json{{"upsilon_h0", sw.upsilon_h},
                   {"slope_floor", opt.slope_floor},
                   {"monotone", sw.monotone},
                   {"bracket", bracket ? Json{sw.bracket_lo, sw.bracket_hi} : Json(nullptr)},
                   {"rows", rows},
                   {"pass", o.pass}};
  write_json(detail::file(dir, "lyapunov_sweep.json", o), o.summary);
  return o;
}

inline Outcome cmd_cauchy(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  const std::vector<double> Ks = c.sim.K_list.empty() ? std::vector<double>{1, 2, 4, 8} : c.sim.K_list;
  auto rep = run_cauchy(c.sim, Ks, true);
  CsvWriter csv(detail::file(dir, "cauchy.csv", o),
                {"K", "J", "se", "envelope", "envelope_continuum", "drop", "drop_se", "pass"});
  bool under = true;
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    bool ok = r.J <= 2.0 * r.envelope_lattice;
    under = under && ok;
    csv.row({r.K, r.J, r.se, r.envelope_lattice, r.envelope_continuum, r.drop, r.drop_se, ok});
    rows.push_back(Json{{"K", r.K},
                        {"J", r.J},
                        {"se", r.se},
                        {"envelope", json_number(r.envelope_lattice)},
                        {"envelope_continuum", json_number(r.envelope_continuum)},
                        {"drop", json_number(r.drop)},
                        {"drop_se", json_number(r.drop_se)}});
  }
  csv.close();
  const double ratio = rep.rows.back().J / rep.rows.front().J;
  const bool shrinks = ratio <= 0.2;
  o.pass = rep.strictly_decreasing && shrinks && under;
  o.summary = Json{{"upsilon_h0", rep.upsilon_h},
                   {"upsilon0", json_number(rep.upsilon0)},
                   {"strictly_decreasing", rep.strictly_decreasing},
                   {"ratio_last_first", ratio},
                   {"ratio_gate", shrinks},
                   {"below_twice_envelope", under},
                   {"rows", rows},
                   {"pass", o.pass}};
  write_json(detail::file(dir, "cauchy.json", o), o.summary);
  return o;
}

// Common-noise pair from mu and mu2. Envelope: C e^{-t/2} for the root-mean-square
// difference with C = max_t e^{t/2} sup|J0(mu - mu2)| / sqrt(1 - 4 L_b^2 Upsilon_h(0)).
inline Outcome cmd_uniqueness(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  if (c.mu2_id.empty()) fail(Errc::InvalidArgument, "uniqueness needs a second initial datum (mu2)");
  auto rep = uniqueness_pair(c.sim.mu, c.mu2, c.sim, false);
  const double Lb = c.sim.b.lipschitz();
  const double gap = 1.0 - 4.0 * Lb * Lb * rep.upsilon_h;
  if (!(gap > 0)) fail(Errc::PreconditionViolated, "4 L_b^2 Upsilon_h(0) must be < 1");
  double C = 0;
  for (const auto& r : rep.rows) C = std::max(C, std::exp(0.5 * r.t) * r.j0_sup / std::sqrt(gap));
  CsvWriter csv(detail::file(dir, "uniqueness.csv", o), {"t", "msd", "se", "j0_sup", "envelope", "pass"});
  bool below = true, decreasing = true;
  Json rows = Json::array();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    const double env = C * C * std::exp(-r.t);
    const bool ok = r.msd <= env;
    below = below && ok;
    if (i && !(r.msd < rep.rows[i - 1].msd)) decreasing = false;
    csv.row({r.t, r.msd, r.se, r.j0_sup, env, ok});
    rows.push_back(Json{{"t", r.t}, {"msd", r.msd}, {"se", r.se}, {"j0_sup", r.j0_sup}, {"envelope", env}});
  }
  csv.close();
  o.pass = below && decreasing;
  o.summary = Json{{"upsilon_h0", rep.upsilon_h},
                   {"C", C},
                   {"decreasing", decreasing},
                   {"below_envelope", below},
                   {"rows", rows},
                   {"pass", o.pass}};
  write_json(detail::file(dir, "uniqueness.json", o), o.summary);
  return o;
}

inline Outcome cmd_bound_check(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  auto snaps = simulate(c.sim);
  auto bc = moment_bound_check(snaps, c.sim);
  CsvWriter csv(detail::file(dir, "bound_check.csv", o),
                {"t", "site", "mean", "se", "j0", "bound", "heuristic", "pass", "pass_heuristic"});
  for (const auto& r : bc.rows)
    csv.row({r.t, static_cast<long long>(r.site), r.mean, r.se, r.j0, r.bound, r.heuristic, r.pass, r.pass_heuristic});
  csv.close();
  o.pass = bc.pass_heuristic;
  o.summary = Json{{"upsilon_h0", bc.upsilon_h},
                   {"pass_bound", bc.pass},
                   {"pass_heuristic", bc.pass_heuristic},
                   {"negative_mean_events", snaps.negative_mean_events}};

  // second moment of the grid mean against the moment equation (flat data, linear coefficient)
  double level = 0;
  if (c.sim.b.kind() == DiffusionCoefficient::Kind::PAM && detail::flat_only(c.sim.mu, level)) {
    const double dt = c.sim.step_size();
    auto pde = moment_pde_oracle(c.sim.b, c.sim.kernel, c.sim.grid, c.sim.T, dt, level, c.sim.zero_mode);
    CsvWriter mc(detail::file(dir, "moment_pde.csv", o), {"t", "mean", "se", "pde", "rel_error", "tolerance", "pass"});
    Json rows = Json::array();
    bool all = true;
    for (double t : snaps.times) {
      auto e = estimate_moment(snaps, 2.0, t);
      const std::size_t k = static_cast<std::size_t>(std::llround(t / dt));
      const double m = pde.m0.at(k);
      const double rel = std::abs(e.mean - m) / m, tol = 0.05 + 3.0 * e.se / m;
      const bool ok = rel <= tol;
      all = all && ok;
      mc.row({t, e.mean, e.se, m, rel, tol, ok});
      rows.push_back(Json{{"t", t}, {"mean", e.mean}, {"se", e.se}, {"pde", m}, {"rel_error", rel}, {"pass", ok}});
    }
    mc.close();
    o.summary["moment_pde"] = rows;
    o.pass = o.pass && all;
  }
  o.summary["pass"] = o.pass;
  write_json(detail::file(dir, "bound_check.json", o), o.summary);
  return o;
}

inline Outcome cmd_gronwall_verify(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  struct Pair {
    std::string id;
    DecayFunction g;
    KernelFunction k;
    int max_n_ii;  // nested quadrature over a singular kernel is too slow at n = 3
  };
  std::vector<Pair> pairs{{"exp-exp", exp_decay(1.0), exp_kernel(1.0), 3},
                          {"power-power", power_decay(2.0), power_kernel(2.0), 3},
                          {"exp-singular", exp_decay(1.0), singular_kernel(0.5), 2}};
  if (upsilon(c.sim.kernel, c.sim.grid.d, 0.0).finite())
    pairs.push_back(
        {"spectral", spectral_H_decay(c.sim.kernel, c.sim.grid.d), spectral_k_kernel(c.sim.kernel, c.sim.grid.d), 3});

  CsvWriter csv(detail::file(dir, "gronwall.csv", o), {"pair", "part", "n", "t", "lhs", "rhs", "pass"});
  int failures = 0, checks = 0;
  for (const auto& p : pairs) {
    for (int n = 0; n <= 6; ++n)
      for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        auto r = check_part_i(p.g, p.k, n, t);
        csv.row({p.id, std::string("i"), static_cast<long long>(n), t, r.lhs, r.rhs, r.pass});
        failures += !r.pass;
        ++checks;
      }
    for (int n = 1; n <= p.max_n_ii; ++n)
      for (double t : {0.1, 1.0, 10.0}) {
        auto r = check_part_ii(p.g, p.k, n, t);
        csv.row({p.id, std::string("ii"), static_cast<long long>(n), t, r.lhs, r.rhs, r.pass});
        failures += !r.pass;
        ++checks;
      }
  }
  csv.close();

  // f = g + beta k*f for g = e^{-t}, k = e^{-s}, and the series bound above it
  const auto g = exp_decay(1.0);
  const auto k = exp_kernel(1.0);
  auto sol = volterra_iterate(g, k, c.beta, c.volterra_T, c.volterra_dt);
  CsvWriter vol(detail::file(dir, "volterra.csv", o), {"t", "f", "series_bound", "pass"});
  bool dominated = true;
  const double stride = std::max(c.volterra_dt, c.volterra_T / 80.0);
  for (double t = 0; t <= c.volterra_T + 1e-9; t += stride) {
    const double f = sol.at(t);
    const double s = series_bound(g, k, c.beta, t).value;
    const bool ok = f <= s * (1 + 1e-9);
    dominated = dominated && ok;
    vol.row({t, f, s, ok});
  }
  vol.close();
  const double fT = sol.f.back();
  const bool decays = fT < 1e-3;
  o.pass = failures == 0 && dominated && decays;
  o.summary = Json{{"checks", checks},
                   {"failures", failures},
                   {"beta", c.beta},
                   {"volterra_final", fT},
                   {"volterra_decays", decays},
                   {"series_dominates", dominated},
                   {"pass", o.pass}};
  write_json(detail::file(dir, "gronwall.json", o), o.summary);
  return o;
}

inline Outcome cmd_bridge_verify(const RunConfig& c, const std::filesystem::path& dir) {
  Outcome o;
  const unsigned threads = c.sim.threads;
  const std::uint64_t seed = c.sim.seed;
  const PathGrid g(c.path_n);
  CsvWriter csv(detail::file(dir, "bridge.csv", o), {"check", "statistic", "reference", "se", "pass"});
  bool all = true;
  Json checks = Json::array();
  auto emit = [&](const std::string& id, double stat, double ref, double se, bool ok) {
    csv.row({id, stat, ref, se, ok});
    checks.push_back(Json{{"check", id}, {"statistic", stat}, {"reference", ref}, {"se", se}, {"pass", ok}});
    all = all && ok;
  };
  auto fmt = [](double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%g", x);
    return std::string(b);
  };

  const std::vector<std::pair<double, double>> probes{{0.5, 0.5}, {0.25, 0.75}, {0.1, 0.9}, {0.3, 0.6}};
  auto bb = sample_many(c.samples, detail::sub_seed(seed, 1), Purpose::Bridge, threads,
                        [&](StreamRng& r) { return sample_brownian_bridge(g, r); });
  for (const auto& r : bridge_covariance_check(bb, probes).rows)
    emit("covariance(" + fmt(r.s) + "," + fmt(r.t) + ")", r.empirical, r.reference, r.se, r.z() < 5);
  bb.clear();
  bb.shrink_to_fit();

  for (double a : c.alphas) {
    auto k = k_alpha_probability(a, c.samples, 256, detail::sub_seed(seed, 2), threads);
    emit("k_alpha(" + fmt(a) + ")", k.fraction, k.reference, k.se, k.brackets());
  }

  auto be = sample_many(c.samples, detail::sub_seed(seed, 3), Purpose::Bridge, threads,
                        [&](StreamRng& r) { return sample_bessel3_bridge(g, r); });
  const double ks = bessel_marginal_check(be, 0.5);
  emit("bessel_marginal_ks(0.5)", ks, 0.01, 0.0, ks < 0.01);
  be.clear();
  be.shrink_to_fit();

  auto bi = biane_check(c.samples, c.path_n, detail::sub_seed(seed, 4), probes, threads);
  for (const auto& r : bi.covariance.rows)
    emit("biane_covariance(" + fmt(r.s) + "," + fmt(r.t) + ")", r.empirical, r.reference, r.se, r.z() < 5);
  emit("biane_mean_z", bi.max_mean_z, 5.0, 0.0, bi.max_mean_z < 5);

  auto cr = conditioned_bridge_vs_bessel(c.conditioned_alphas, c.conditioned_samples, c.path_n,
                                         detail::sub_seed(seed, 5), 200000000, threads);
  for (const auto& r : cr.rows)
    emit("conditioned_ks(" + fmt(r.alpha) + ")", r.ks, 0.0, 0.0, true);
  emit("conditioned_ks_decreasing", cr.decreasing ? 1.0 : 0.0, 1.0, 0.0, cr.decreasing);
  csv.close();

  o.pass = all;
  o.summary = Json{{"checks", checks}, {"pass", all}};
  write_json(detail::file(dir, "bridge.json", o), o.summary);
  return o;
}

// ---------------------------------------------------------------- dispatch

// Runs one subcommand into opt.out_dir and writes manifest.json beside the outputs.
// Returns the exit code; errors propagate as exceptions.
inline int run_subcommand(const std::string& name, const RunConfig& cfg, const RunOptions& opt, Json* summary = nullptr) {
  static const std::map<std::string, Outcome (*)(const RunConfig&, const std::filesystem::path&)> table{
      {"kernel-report", cmd_kernel_report},   {"semigroup-report", cmd_semigroup_report},
      {"simulate", cmd_simulate},             {"lyapunov-sweep", cmd_lyapunov_sweep},
      {"cauchy", cmd_cauchy},                 {"uniqueness", cmd_uniqueness},
      {"bound-check", cmd_bound_check},       {"gronwall-verify", cmd_gronwall_verify},
      {"bridge-verify", cmd_bridge_verify}};
  auto it = table.find(name);
  if (it == table.end()) fail(Errc::InvalidArgument, "unknown subcommand '" + name + "'");
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) fail(Errc::IoError, "cannot create " + opt.out_dir.string() + ": " + ec.message());

  RunManifest man;
  man.subcommand = name;
  man.version = kVersion;
  man.config_text = opt.config_text;
  man.resolved = resolved_json(cfg);
  man.seed = cfg.sim.seed;
  man.warnings = opt.warnings;
  man.started = utc_timestamp();
  man.derived = detail::derived_constants(cfg);
  Outcome out = it->second(cfg, opt.out_dir);
  man.finished = utc_timestamp();
  man.outputs = out.files;
  write_json(opt.out_dir / "manifest.json", man.to_json());
  if (summary) *summary = out.summary;
  return out.pass ? kExitPass : kExitGateFailed;
}

}  // namespace pamlab

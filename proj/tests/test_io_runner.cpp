#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pamlab/runner.hpp"

using namespace pamlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pamlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

int run(const std::string& sub, const std::string& text, const fs::path& dir, Json* summary = nullptr) {
  RunOptions o;
  o.out_dir = dir;
  o.config_text = text;
  return run_subcommand(sub, parse_config(text), o, summary);
}

}  // namespace

TEST(Format, Doubles) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(INFINITY), "inf");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_TRUE(json_number(INFINITY).is_null());
}

TEST(Csv, WritesRows) {
  auto dir = scratch("csv");
  CsvWriter w(dir / "a.csv", {"x", "n", "s", "b"});
  w.row({0.5, 3LL, std::string("ab"), true});
  EXPECT_THROW(w.row({1.0}), Error);
  w.close();
  EXPECT_EQ(slurp(dir / "a.csv"), "x,n,s,b\n0.5,3,ab,true\n");
}

TEST(Binary, Roundtrip) {
  SimulationConfig c;
  c.grid = TorusGrid(2, 4.0, 8);
  c.dt = 0.01;
  c.T = 0.1;
  c.snapshot_times = {0.05, 0.1};
  c.replicates = 3;
  c.seed = 9;
  c.threads = 1;
  auto s = simulate(c);
  auto dir = scratch("bin");
  write_snapshots_binary(dir / "s.bin", s);
  auto r = read_snapshots_binary(dir / "s.bin");
  EXPECT_EQ(r.grid.n, 8);
  EXPECT_EQ(r.times, s.times);
  ASSERT_EQ(r.fields.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(r.fields[i][j].values, s.fields[i][j].values);
  std::ofstream(dir / "bad.bin") << "nope";
  EXPECT_THROW(read_snapshots_binary(dir / "bad.bin"), Error);
}

TEST(ErrorJson, ConfigErrorFields) {
  try {
    parse_config("dt = -1\n");
  } catch (const std::exception& e) {
    auto j = error_json(e);
    EXPECT_EQ(j["error"]["code"], "ValidationError");
    EXPECT_EQ(j["error"]["field"], "dt");
  }
}

TEST(Runner, KernelReportWhite1d) {
  auto dir = scratch("kr");
  Json s;
  EXPECT_EQ(run("kernel-report", "dimension = 1\nn = 16\nkernel = white\n", dir, &s), kExitPass);
  auto j = read_json(dir / "kernel_report.json");
  EXPECT_TRUE(j["upsilon0"]["value"].is_null());
  EXPECT_NEAR(j["upsilon1"]["value"].get<double>(), 0.5, 1e-9);
  EXPECT_TRUE(j["upsilon0_infinite"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  auto m = read_json(dir / "manifest.json");
  EXPECT_EQ(m["subcommand"], "kernel-report");
  EXPECT_EQ(m["version"], kVersion);
}

TEST(Runner, SimulateNoDisorderIsFlat) {
  auto dir = scratch("sim");
  const std::string text = "dimension = 2\nL = 4\nn = 8\nlambda = 0\nT = 0.1\nreplicates = 2\n";
  EXPECT_EQ(run("simulate", text, dir), kExitPass);
  auto rows = read_csv(dir / "snapshots.csv");
  ASSERT_EQ(rows.size(), 1u + 2 * 64);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"replicate", "t", "site", "value"}));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][3], "1");
}

TEST(Runner, ThreadCountDoesNotChangeBytes) {
  const std::string base = "dimension = 3\nL = 8\nn = 8\nT = 0.2\nreplicates = 5\nseed = 17\n";
  auto a = scratch("thr1"), b = scratch("thr3");
  RunOptions oa, ob;
  oa.out_dir = a;
  ob.out_dir = b;
  auto ca = parse_config(base), cb = parse_config(base);
  ca.sim.threads = 1;
  cb.sim.threads = 3;
  run_subcommand("simulate", ca, oa);
  run_subcommand("simulate", cb, ob);
  EXPECT_EQ(slurp(a / "snapshots.csv"), slurp(b / "snapshots.csv"));
  EXPECT_EQ(slurp(a / "moments.csv"), slurp(b / "moments.csv"));
}

TEST(Runner, GronwallVerifyPasses) {
  auto dir = scratch("gv");
  EXPECT_EQ(run("gronwall-verify", "dimension = 3\n", dir), kExitPass);
  auto rows = read_csv(dir / "gronwall.csv");
  ASSERT_GT(rows.size(), 1u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].back(), "true") << i;
  EXPECT_TRUE(fs::exists(dir / "volterra.csv"));
}

TEST(Runner, UnknownSubcommand) {
  RunOptions o;
  o.out_dir = scratch("bad");
  EXPECT_THROW(run_subcommand("nope", parse_config(""), o), Error);
  EXPECT_EQ(subcommand_names().size(), 9u);
}

#include <gtest/gtest.h>

#include "pamlab/config.hpp"

using namespace pamlab;

TEST(Config, MinimalDefaults) {
  auto c = parse_config("dimension = 3\nL = 8\nn = 16\n");
  EXPECT_EQ(c.sim.grid.d, 3);
  EXPECT_EQ(c.sim.grid.n, 16);
  EXPECT_DOUBLE_EQ(c.sim.step_size(), 0.01);
  EXPECT_DOUBLE_EQ(c.sim.T, 1.0);
  EXPECT_EQ(c.sim.replicates, 1);
  EXPECT_EQ(c.sim.zero_mode, ZeroMode::Drop);
  EXPECT_EQ(c.sim.kernel_id, "gaussian:1");
  EXPECT_EQ(c.sim.b.kind(), DiffusionCoefficient::Kind::PAM);
  EXPECT_DOUBLE_EQ(c.sim.b.lipschitz(), 1.0);
  EXPECT_EQ(c.snapshot_format, "csv");
  EXPECT_EQ(c.lambdas.size(), 6u);
}

TEST(Config, FullDocument) {
  const std::string text = R"(# run
version = 1
dimension = 2
L = 6.5
n = 32
kernel = "bessel_corr:s=4"
coefficient = sine
lambda = 0.5
mu = "2*flat:1 + dirac:0.5;0@0.25"
dt = 0.005
T = 2
snapshot_times = [0.5, 1, 2]
replicates = 10
seed = 42
K_list = [1, 2, 4]
zero_mode = keep
deposit = gaussian
)";
  auto c = parse_config(text);
  EXPECT_EQ(c.sim.grid.d, 2);
  EXPECT_DOUBLE_EQ(c.sim.grid.L, 6.5);
  EXPECT_EQ(c.sim.b.kind(), DiffusionCoefficient::Kind::Sine);
  EXPECT_EQ(c.sim.snapshot_times.size(), 3u);
  EXPECT_EQ(c.sim.seed, 42u);
  EXPECT_EQ(c.sim.zero_mode, ZeroMode::Keep);
  EXPECT_EQ(c.sim.deposit, DepositMode::Gaussian);
  EXPECT_EQ(c.sim.mu.terms().size(), 2u);
}

TEST(Config, NegativeDt) {
  try {
    parse_config("dt = -1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), Errc::ValidationError);
    EXPECT_EQ(e.field(), "dt");
  }
}

TEST(Config, UnknownKeySuggestion) {
  try {
    parse_config("n = 16\nlamda = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
  }
  std::vector<std::string> w;
  auto c = parse_config("lamda = 2\n", false, &w);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(c.lambda, 1.0);
}

TEST(Config, SyntaxErrorPosition) {
  try {
    parse_config("n = 16\nL 8\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_EQ(e.line(), 2);
    EXPECT_GE(e.column(), 1);
  }
}

TEST(Config, InvalidValues) {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  EXPECT_EQ(field_of("n = 12\n"), "n");
  EXPECT_EQ(field_of("dimension = 4\n"), "dimension");
  EXPECT_EQ(field_of("K_list = [2, 1]\n"), "K_list");
  EXPECT_EQ(field_of("T = 1\nsnapshot_times = [2]\n"), "snapshot_times");
  EXPECT_EQ(field_of("replicates = 0\n"), "replicates");
  EXPECT_EQ(field_of("zero_mode = maybe\n"), "zero_mode");
  EXPECT_EQ(field_of("kernel = \"gaussian:a=-1\"\n"), "kernel");
  EXPECT_EQ(field_of("L = abc\n"), "L");
}

TEST(Ids, Kernels) {
  EXPECT_TRUE(std::holds_alternative<White>(parse_kernel("white").variant()));
  auto g = parse_kernel("gaussian:a=2");
  ASSERT_TRUE(std::holds_alternative<GaussianSpectral>(g.variant()));
  EXPECT_DOUBLE_EQ(std::get<GaussianSpectral>(g.variant()).a, 2.0);
  EXPECT_TRUE(std::holds_alternative<RieszType>(parse_kernel("riesz:s1=2,s2=3").variant()));
  EXPECT_THROW(parse_kernel("bogus"), ConfigError);
}

TEST(Ids, Measures) {
  auto m = parse_measure("flat:2 - 0.5*dirac:1;0;0@2", 3);
  EXPECT_EQ(m.terms().size(), 2u);
  EXPECT_EQ(parse_measure("power:alpha=1.5", 3).terms().size(), 1u);
  EXPECT_EQ(parse_measure("comb:truncation=4", 3).terms().size(), 1u);
  EXPECT_EQ(parse_measure("-flat:1e-3", 3).terms().size(), 1u);
  EXPECT_THROW(parse_measure("dirac:1;2@1", 3), ConfigError);
}

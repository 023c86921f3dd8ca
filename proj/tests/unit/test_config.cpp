#include <sstream>

#include <gtest/gtest.h>

#include "locfrk/config.hpp"

using namespace locfrk;

namespace {

RunConfig parse(const std::string &text) {
  std::istringstream in(text);
  return read_run_config(in);
}

std::string error_of(const std::string &text) {
  try {
    parse(text);
  } catch (const std::exception &e) {
    return e.what();
  }
  return "no error";
}

} // namespace

TEST(RunConfigTest, Defaults) {
  const RunConfig c = parse("");
  EXPECT_EQ(c.scenario.n, 2000u);
  EXPECT_EQ(c.scenario.sigma_g, 20.0);
  EXPECT_EQ(c.scenario.truth, (ModelParams{-30.0, 3.5, 4.0, 0.25, 150.0}));
  EXPECT_EQ(c.tau, 50.0);
  EXPECT_EQ(c.layout().basis.size(), 484);
  EXPECT_EQ(c.saem.burn_in, 400u);
  EXPECT_EQ(c.saem.max_iter, 900u);
  EXPECT_EQ(c.saem.sigma_q2, 10.0);
  EXPECT_EQ(c.folds, 5u);
  EXPECT_EQ(c.rings, (std::vector<double>{300.0, 600.0}));
}

TEST(RunConfigTest, ParsesEveryKey) {
  const RunConfig c = parse(R"(# full example
area = -10, 0, 490, 400
bs = 240,200
truth_p0 = -40
truth_kappa = 2.5
truth_sigma_eps2 = 2
truth_beta = 0.5
truth_phi = 90
tau_truth = 40
n = 300
sigma_g = 35.5
sampling = grid
grid_step = 10
tau = 60
mc_samples = 250
sigma_q2 = 4
burn_in = 20
max_iter = 50
gamma_exponent = 0.6
m_start = 100
m_end = 5
stop_window = 7
stop_tolerance = 1e-3
folds = 4
rings = 100, 200, 300

seed = 42
)");
  EXPECT_EQ(c.scenario.area.min, (Location{-10.0, 0.0}));
  EXPECT_EQ(c.scenario.area.max, (Location{490.0, 400.0}));
  EXPECT_EQ(c.scenario.base_station, (Location{240.0, 200.0}));
  EXPECT_EQ(c.scenario.truth, (ModelParams{-40.0, 2.5, 2.0, 0.5, 90.0}));
  EXPECT_EQ(c.scenario.tau_truth, 40.0);
  EXPECT_EQ(c.scenario.n, 300u);
  EXPECT_EQ(c.scenario.sigma_g, 35.5);
  EXPECT_EQ(c.scenario.sampling, Sampling::Grid);
  EXPECT_EQ(c.scenario.grid_step, 10.0);
  EXPECT_EQ(c.tau, 60.0);
  EXPECT_EQ(c.mc_samples, 250u);
  EXPECT_EQ(c.saem.moment_mc_samples, 250u);
  EXPECT_EQ(c.saem.sigma_q2, 4.0);
  EXPECT_EQ(c.saem.burn_in, 20u);
  EXPECT_EQ(c.saem.max_iter, 50u);
  EXPECT_EQ(c.saem.gamma_exponent, 0.6);
  EXPECT_EQ(c.saem.m_start, 100u);
  EXPECT_EQ(c.saem.m_end, 5u);
  EXPECT_EQ(c.saem.stop_window, 7u);
  EXPECT_EQ(c.saem.stop_tolerance, 1e-3);
  EXPECT_EQ(c.folds, 4u);
  EXPECT_EQ(c.rings, (std::vector<double>{100.0, 200.0, 300.0}));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.scenario.seed, 42u);
  EXPECT_EQ(c.saem.seed, 42u);
  EXPECT_EQ(c.noise().sigma_g, 35.5);
}

TEST(RunConfigTest, LaterLinesOverride) {
  EXPECT_EQ(parse("n = 10\nn = 20\n").scenario.n, 20u);
}

TEST(RunConfigTest, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("n = 5\nfoo = 1\n").find("line 2: unknown key 'foo'"),
            std::string::npos);
  EXPECT_NE(error_of("# c\nn 5\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("tau = abc").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("n = -3").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("area = 0,0,1").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("sampling = spiral").find("line 1"), std::string::npos);
}

TEST(RunConfigTest, ValidationRejectsBadValues) {
  EXPECT_NE(error_of("folds = 1"), "no error");
  EXPECT_NE(error_of("rings = 600,300"), "no error");
  EXPECT_NE(error_of("tau = 0"), "no error");
  EXPECT_NE(error_of("sigma_g = -1"), "no error");
  EXPECT_NE(error_of("truth_beta = 0"), "no error");
  EXPECT_NE(error_of("burn_in = 900"), "no error");
  EXPECT_NE(error_of("mc_samples = 0"), "no error");
  EXPECT_NE(error_of("area = 0,0,0,10"), "no error");
}

TEST(RunConfigTest, WriteReadRoundTrip) {
  RunConfig c = parse("n = 123\nsigma_g = 7.25\nrings = 50,75\nseed = 9\n"
                      "sampling = grid\nstop_tolerance = 3e-5\n");
  std::ostringstream out;
  write_run_config(out, c);
  const RunConfig back = parse(out.str());
  std::ostringstream again;
  write_run_config(again, back);
  EXPECT_EQ(out.str(), again.str());
  EXPECT_EQ(back.scenario.n, 123u);
  EXPECT_EQ(back.rings, c.rings);
  EXPECT_EQ(back.saem.stop_tolerance, 3e-5);
}

TEST(RunConfigTest, DoubleList) {
  EXPECT_EQ(parse_double_list("1, 2.5,-3"), (std::vector<double>{1.0, 2.5, -3.0}));
  EXPECT_THROW(parse_double_list("1,,2"), std::invalid_argument);
  EXPECT_THROW(parse_double_list(""), std::invalid_argument);
}

TEST(RunConfigTest, MissingFile) {
  EXPECT_THROW(load_run_config("/nonexistent/run.cfg"), std::runtime_error);
}

#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "locfrk/moments.hpp"
#include "locfrk/scenario.hpp"
#include "ensemble.hpp"
#include "oracles.hpp"

using namespace locfrk;
using oracle::ensemble;
using oracle::trend_variance;

namespace {

ScenarioConfig small_config(std::uint64_t seed = 1) {
  ScenarioConfig c;
  c.area = {{0.0, 0.0}, {300.0, 300.0}};
  c.base_station = {150.0, 150.0};
  c.n = 200;
  c.seed = seed;
  return c;
}

} // namespace

TEST(Generate, NoiseFreeTrend) {
  auto c = small_config();
  c.truth.sigma_eps2 = 1e-20;
  c.truth.beta = 1e20;
  c.sigma_g = 0.0;
  const auto d = generate_dataset(c);
  for (std::size_t k = 0; k < d.size(); ++k) {
    EXPECT_NEAR(d.y()[k],
                oracle::ref_trend(d.truth()[k], c.base_station)
                    .dot(c.truth.alpha()),
                1e-8);
  }
}

TEST(Generate, DiracReportsTruth) {
  auto c = small_config();
  c.sigma_g = 0.0;
  const auto d = generate_dataset(c);
  EXPECT_EQ(d.reported(), d.truth());
}

TEST(Generate, LocationsInsideArea) {
  const auto c = small_config(3);
  const auto d = generate_dataset(c);
  ASSERT_EQ(d.size(), 200u);
  for (const auto &x : d.truth()) {
    EXPECT_TRUE(c.area.contains(x));
  }
}

TEST(Generate, GridSamplingUsesDistinctCells) {
  auto c = small_config(4);
  c.sampling = Sampling::Grid;
  c.grid_step = 5.0;
  const auto d = generate_dataset(c);
  std::set<std::pair<double, double>> seen;
  for (const auto &x : d.truth()) {
    EXPECT_EQ(std::fmod(x.x, 5.0), 0.0);
    EXPECT_EQ(std::fmod(x.y, 5.0), 0.0);
    seen.insert({x.x, x.y});
  }
  EXPECT_EQ(seen.size(), d.size());
  c.n = 10000;
  c.grid_step = 100.0;
  EXPECT_EQ(generate_dataset(c).size(), 16u);
}

TEST(Generate, DeterministicPerSeed) {
  const auto a = generate_dataset(small_config(5));
  EXPECT_EQ(a, generate_dataset(small_config(5)));
  EXPECT_NE(a.y(), generate_dataset(small_config(6)).y());
}

TEST(Generate, LocationNoiseLeavesMeasurementsUntouched) {
  auto c = small_config(7);
  c.sigma_g = 10.0;
  const auto a = generate_dataset(c);
  c.sigma_g = 50.0;
  const auto b = generate_dataset(c);
  EXPECT_EQ(a.y(), b.y());
  EXPECT_EQ(a.truth(), b.truth());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(b.reported()[k].x - b.truth()[k].x,
                5.0 * (a.reported()[k].x - a.truth()[k].x), 1e-9);
  }
}

TEST(Generate, NuggetIsTheOnlyNoiseLevelDifference) {
  // Same seed, different nugget: the field term is shared and the
  // nugget draws scale with its standard deviation.
  auto c = small_config(8);
  c.truth.sigma_eps2 = 1e-20;
  const auto base = generate_dataset(c);
  c.truth.sigma_eps2 = 4.0;
  const auto a = generate_dataset(c);
  c.truth.sigma_eps2 = 9.0;
  const auto b = generate_dataset(c);
  for (std::size_t k = 0; k < base.size(); ++k) {
    EXPECT_NEAR(b.y()[k] - base.y()[k], 1.5 * (a.y()[k] - base.y()[k]), 1e-9);
  }
}

TEST(Generate, OffsetsAreIsotropicGaussian) {
  auto c = small_config(9);
  c.n = 100000;
  c.sigma_g = 20.0;
  const auto d = generate_dataset(c);
  double sx = 0, sy = 0, mx = 0, my = 0, cxy = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double ux = d.reported()[k].x - d.truth()[k].x;
    const double uy = d.reported()[k].y - d.truth()[k].y;
    mx += ux;
    my += uy;
    sx += ux * ux;
    sy += uy * uy;
    cxy += ux * uy;
  }
  const double n = double(d.size());
  EXPECT_NEAR(std::sqrt(sx / n - mx * mx / n / n) / 20.0, 1.0, 0.02);
  EXPECT_NEAR(std::sqrt(sy / n - my * my / n / n) / 20.0, 1.0, 0.02);
  EXPECT_NEAR(cxy / n / 400.0, 0.0, 0.02);
}

TEST(EnsembleMoments, FlatTrendMatchesSigma) {
  ModelParams theta{-30.0, 0.0, 4.0, 0.25, 150.0};
  const FieldLayout layout{build_basis_grid({{0, 0}, {200, 200}}, 50.0),
                           {100.0, 100.0}};
  const std::vector<Location> xs{
      {20, 30}, {60, 140}, {110, 95}, {180, 20}, {150, 170}};
  const LocationNoiseModel noise{20.0};
  const auto kernel = kernel_matrices(layout.basis, theta.beta, theta.phi);
  const auto mom = estimate_smeared_moments(xs, layout, kernel, noise, 400000, 3);
  const Eigen::MatrixXd sigma =
      mom.s_bar.transpose() * kernel.k * mom.s_bar +
      Eigen::MatrixXd((mom.delta.array() + theta.sigma_eps2).matrix().asDiagonal());
  const auto e = ensemble(xs, theta, layout, noise, mom.t_bar * theta.alpha(),
                          sigma, 100000);
  EXPECT_LT(e.mean_z.cwiseAbs().maxCoeff(), 3.0) << e.mean_z.transpose();
  EXPECT_LT(e.cov_z.cwiseAbs().maxCoeff(), 3.0) << "\n" << e.cov_z;
}

TEST(EnsembleMoments, SlopedTrendAddsTrendVarianceOnDiagonal) {
  const ModelParams theta{-30.0, 3.5, 4.0, 0.25, 150.0};
  const Location bs{100.0, 100.0};
  const FieldLayout layout{build_basis_grid({{0, 0}, {200, 200}}, 50.0), bs};
  const std::vector<Location> xs{
      {20, 30}, {60, 140}, {110, 25}, {180, 20}, {150, 170}};
  const LocationNoiseModel noise{20.0};
  const auto kernel = kernel_matrices(layout.basis, theta.beta, theta.phi);
  const auto mom = estimate_smeared_moments(xs, layout, kernel, noise, 400000, 3);
  Eigen::MatrixXd cov =
      mom.s_bar.transpose() * kernel.k * mom.s_bar +
      Eigen::MatrixXd((mom.delta.array() + theta.sigma_eps2).matrix().asDiagonal());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov(Eigen::Index(i), Eigen::Index(i)) +=
        trend_variance(xs[i], bs, theta.alpha(), noise.sigma_g);
  }
  const auto e = ensemble(xs, theta, layout, noise, mom.t_bar * theta.alpha(),
                          cov, 100000);
  EXPECT_LT(e.mean_z.cwiseAbs().maxCoeff(), 3.0) << e.mean_z.transpose();
  EXPECT_LT(e.cov_z.cwiseAbs().maxCoeff(), 3.0) << "\n" << e.cov_z;
}

TEST(Split, FoldSizes) {
  const Dataset d(std::vector<double>(10, 1.0), std::vector<Location>(10));
  for (std::size_t f = 0; f < 5; ++f) {
    const auto s = split_kfold(d, 5, f, 1);
    EXPECT_EQ(s.test.size(), 2u);
    EXPECT_EQ(s.learning.size(), 8u);
  }
  const auto s = split_kfold(d, 3, 0, 1);
  EXPECT_EQ(s.test.size() + s.learning.size(), 10u);
}

TEST(Split, FoldsPartitionRows) {
  const auto d = generate_dataset(small_config(10));
  std::vector<int> hits(d.size(), 0);
  for (std::size_t f = 0; f < 5; ++f) {
    const auto s = split_kfold(d, 5, f, 77);
    std::set<std::size_t> learn(s.learning_rows.begin(), s.learning_rows.end());
    for (std::size_t r : s.test_rows) {
      ++hits[r];
      EXPECT_EQ(learn.count(r), 0u);
    }
    EXPECT_EQ(learn.size() + s.test_rows.size(), d.size());
  }
  for (int h : hits) {
    EXPECT_EQ(h, 1);
  }
}

TEST(Split, TestRowsUseTrueLocations) {
  auto c = small_config(11);
  c.sigma_g = 30.0;
  const auto d = generate_dataset(c);
  const auto s = split_kfold(d, 5, 2, 3);
  for (std::size_t i = 0; i < s.test_rows.size(); ++i) {
    EXPECT_EQ(s.test.reported()[i], d.truth()[s.test_rows[i]]);
    EXPECT_EQ(s.test.y()[i], d.y()[s.test_rows[i]]);
  }
  for (std::size_t i = 0; i < s.learning_rows.size(); ++i) {
    EXPECT_EQ(s.learning.reported()[i], d.reported()[s.learning_rows[i]]);
  }
}

TEST(Split, DeterministicAndSeeded) {
  const auto d = generate_dataset(small_config(12));
  EXPECT_EQ(split_kfold(d, 5, 1, 9).test_rows, split_kfold(d, 5, 1, 9).test_rows);
  EXPECT_NE(split_kfold(d, 5, 1, 9).test_rows,
            split_kfold(d, 5, 1, 10).test_rows);
}

TEST(Split, FractionAndErrors) {
  const auto d = generate_dataset(small_config(13));
  const auto s = split_fraction(d, 0.25, 4);
  EXPECT_EQ(s.test.size(), 50u);
  EXPECT_EQ(s.learning.size(), 150u);
  EXPECT_THROW(split_kfold(d, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(split_kfold(d, 5, 5, 1), std::invalid_argument);
  EXPECT_THROW(split_kfold(Dataset{}, 5, 0, 1), std::invalid_argument);
  EXPECT_THROW(split_fraction(d, 1.5, 1), std::invalid_argument);
}

TEST(DatasetTest, ConstructionChecks) {
  EXPECT_THROW(Dataset({1.0, 2.0}, {{0, 0}}), std::invalid_argument);
  EXPECT_THROW(Dataset({1.0}, {{0, 0}}, std::vector<Location>{}),
               std::invalid_argument);
  const Dataset d({1.0, 2.0, 3.0}, {{0, 0}, {1, 1}, {2, 2}});
  EXPECT_FALSE(d.has_truth());
  EXPECT_THROW(d.truth(), std::logic_error);
  const auto sub = d.subset({2, 0});
  EXPECT_EQ(sub.y(), (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(sub.reported()[0], (Location{2, 2}));
}

TEST(DatasetCsv, RoundTripIsExact) {
  auto c = small_config(14);
  c.n = 50;
  const auto d = generate_dataset(c);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  EXPECT_EQ(read_dataset_csv(ss), d);
  const Dataset plain(d.y(), d.reported());
  std::stringstream s2;
  write_dataset_csv(s2, plain);
  EXPECT_EQ(s2.str().substr(0, s2.str().find('\n')), "y_dbm,rep_x,rep_y");
  EXPECT_EQ(read_dataset_csv(s2), plain);
}

TEST(DatasetCsv, ErrorsNameTheLine) {
  const auto message = [](const std::string &text) {
    std::istringstream in(text);
    try {
      read_dataset_csv(in);
    } catch (const std::runtime_error &e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("y_dbm,rep_x,rep_y\n-50,1,2\n-51,,3\n").find("line 3"),
            std::string::npos);
  EXPECT_NE(message("y_dbm,rep_x,rep_y\n-50,1\n").find("line 2"),
            std::string::npos);
  EXPECT_NE(message("y_dbm,rep_x,rep_y\n-50,1,abc\n").find("line 2"),
            std::string::npos);
  EXPECT_NE(message("a,b,c\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("").find("empty"), std::string::npos);
  EXPECT_EQ(message("y_dbm,rep_x,rep_y\r\n-50,1,2\r\n\n"), "no error");
}

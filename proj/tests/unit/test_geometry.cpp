#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "locfrk/geometry.hpp"
#include "oracles.hpp"

using namespace locfrk;

TEST(Distance, ThreeFourFive) { EXPECT_DOUBLE_EQ(distance({0, 0}, {3, 4}), 5.0); }

TEST(Distance, IdentityIsZero) {
  EXPECT_EQ(distance({12.5, -7.25}, {12.5, -7.25}), 0.0);
}

TEST(Distance, UnitDiagonal) {
  EXPECT_DOUBLE_EQ(distance({0, 0}, {1, 1}), std::sqrt(2.0));
}

TEST(Distance, Symmetric) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 100; ++i) {
    const Location a{u(gen), u(gen)}, b{u(gen), u(gen)};
    EXPECT_EQ(distance(a, b), distance(b, a));
    EXPECT_GT(distance(a, b), 0.0);
  }
}

TEST(TrendFeatures, OneMetre) {
  const auto t = trend_features({1, 0}, {0, 0});
  EXPECT_EQ(t.one, 1.0);
  EXPECT_DOUBLE_EQ(t.logdist, 0.0);
}

TEST(TrendFeatures, HundredMetres) {
  EXPECT_DOUBLE_EQ(trend_features({100, 0}, {0, 0}).logdist, 20.0);
  EXPECT_DOUBLE_EQ(trend_features({560, 580}, {500, 500}).logdist, 20.0);
}

TEST(TrendFeatures, ClampedAtBaseStation) {
  const auto t = trend_features({500, 500}, {500, 500});
  EXPECT_EQ(t.one, 1.0);
  EXPECT_EQ(t.logdist, 0.0);
  EXPECT_EQ(trend_features({500.3, 500}, {500, 500}).logdist, 0.0);
}

TEST(Bisquare, CenterBoundaryHalf) {
  EXPECT_EQ(bisquare({5, 5}, {5, 5}, 10), 1.0);
  EXPECT_EQ(bisquare({15, 5}, {5, 5}, 10), 0.0);
  EXPECT_DOUBLE_EQ(bisquare({10, 5}, {5, 5}, 10), 0.5625);
  EXPECT_EQ(bisquare({15.001, 5}, {5, 5}, 10), 0.0);
}

TEST(Bisquare, ContinuousAtSupportEdge) {
  const double inside = bisquare({10 - 1e-9, 0}, {0, 0}, 10);
  EXPECT_LT(inside, 1e-15);
}

TEST(BoundingBox, Validation) {
  EXPECT_THROW((BoundingBox{{0, 0}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW((BoundingBox{{0, 0}, {1, -1}}), std::invalid_argument);
  EXPECT_THROW((BoundingBox{{0, 0}, {NAN, 1}}), std::invalid_argument);
  const BoundingBox b{{0, 0}, {2, 3}};
  EXPECT_EQ(b.width(), 2.0);
  EXPECT_EQ(b.height(), 3.0);
  EXPECT_TRUE(b.contains({2, 3}));
  EXPECT_FALSE(b.contains({2.1, 0}));
}

TEST(BasisGrid, UnitCellGivesNineCenters) {
  const auto basis = build_basis_grid({{0, 0}, {40, 40}}, 40);
  EXPECT_EQ(basis.size(), 9);
  EXPECT_EQ(basis.nx(), 3);
  EXPECT_EQ(basis.ny(), 3);
  // Spacing tau between neighbours.
  EXPECT_DOUBLE_EQ(distance(basis.center(0), basis.center(1)), 40.0);
  EXPECT_DOUBLE_EQ(distance(basis.center(0), basis.center(3)), 40.0);
}

TEST(BasisGrid, DefaultAreaRank) {
  EXPECT_EQ(build_basis_grid({{0, 0}, {1000, 1000}}, 50).size(), 22 * 22);
}

TEST(BasisGrid, RankGrowsAsTauShrinks) {
  const BoundingBox box{{0, 0}, {1000, 700}};
  Eigen::Index prev = 0;
  for (double tau : {100.0, 80.0, 70.0, 60.0, 50.0, 40.0, 30.0, 20.0}) {
    const auto r = build_basis_grid(box, tau).size();
    EXPECT_GT(r, prev) << tau;
    prev = r;
  }
}

TEST(BasisGrid, CoversTheBox) {
  const BoundingBox box{{-120, 40}, {380, 290}};
  for (double tau : {30.0, 45.0, 70.0}) {
    const auto basis = build_basis_grid(box, tau);
    for (int i = 0; i <= 50; ++i) {
      for (int j = 0; j <= 50; ++j) {
        const Location x{box.min.x + box.width() * i / 50.0,
                         box.min.y + box.height() * j / 50.0};
        EXPECT_GT(basis.evaluate(x).maxCoeff(), 0.0);
      }
    }
  }
}

TEST(BasisGrid, Deterministic) {
  const BoundingBox box{{0, 0}, {300, 200}};
  EXPECT_EQ(build_basis_grid(box, 35).centers(),
            build_basis_grid(box, 35).centers());
}

TEST(BasisGrid, RejectsBadTau) {
  EXPECT_THROW(build_basis_grid({{0, 0}, {10, 10}}, 0.0), std::invalid_argument);
  EXPECT_THROW(build_basis_grid({{0, 0}, {10, 10}}, -1.0), std::invalid_argument);
}

TEST(BasisVector, FarPointIsZero) {
  const auto basis = build_basis_grid({{0, 0}, {100, 100}}, 50);
  EXPECT_EQ(basis_vector({5000, 5000}, basis).squaredNorm(), 0.0);
  EXPECT_EQ(basis.entries({5000, 5000}).size, 0u);
}

TEST(BasisVector, AtCenterIsUnitCoordinate) {
  const auto basis = build_basis_grid({{0, 0}, {100, 100}}, 50);
  const Eigen::Index l = 7;
  const Eigen::VectorXd s = basis_vector(basis.center(l), basis);
  EXPECT_EQ(s[l], 1.0);
  EXPECT_EQ(s.sum(), 1.0);
}

TEST(BasisVector, MatchesBruteForce) {
  const auto basis = build_basis_grid({{0, 0}, {300, 300}}, 40);
  const auto centers = basis.centers();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-100, 400);
  for (int t = 0; t < 500; ++t) {
    const Location x{u(gen), u(gen)};
    const Eigen::VectorXd s = basis_vector(x, basis);
    int nonzero = 0;
    int within = 0;
    for (std::size_t l = 0; l < centers.size(); ++l) {
      EXPECT_NEAR(s[Eigen::Index(l)], oracle::ref_bisquare(x, centers[l], 40.0),
                  1e-15);
      EXPECT_GE(s[Eigen::Index(l)], 0.0);
      EXPECT_LE(s[Eigen::Index(l)], 1.0);
      nonzero += s[Eigen::Index(l)] != 0.0;
      within += distance(x, centers[l]) < 40.0;
    }
    EXPECT_LE(nonzero, within);
    const auto e = basis.entries(x);
    EXPECT_EQ(int(e.size), nonzero);
    EXPECT_NEAR(e.dot(Eigen::VectorXd::Ones(basis.size())), s.sum(), 1e-14);
  }
}

TEST(BasisSet, CenterDistances) {
  const auto basis = build_basis_grid({{0, 0}, {100, 60}}, 30);
  const Eigen::MatrixXd d = basis.center_distances();
  const auto c = basis.centers();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    EXPECT_EQ(d(i, i), 0.0);
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      EXPECT_NEAR(d(i, j), distance(c[std::size_t(i)], c[std::size_t(j)]),
                  1e-12);
    }
  }
}

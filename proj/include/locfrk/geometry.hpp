#ifndef LOCFRK_GEOMETRY_HPP
#define LOCFRK_GEOMETRY_HPP

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace locfrk {

/// Planar position in meters (east, north).
struct Location {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Location &, const Location &) = default;
};

inline Location operator-(const Location &a, const Eigen::Vector2d &u) {
  return {a.x - u.x(), a.y - u.y()};
}

inline Location operator+(const Location &a, const Eigen::Vector2d &u) {
  return {a.x + u.x(), a.y + u.y()};
}

/// Axis-aligned rectangle; max must strictly dominate min.
struct BoundingBox {
  Location min;
  Location max;

  BoundingBox() = default;
  BoundingBox(Location lo, Location hi);

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  bool contains(const Location &p) const;
};

/// Trend regressors (1, 10 log10 dist) of the path-loss model.
struct TrendVector {
  double one = 1.0;
  double logdist = 0.0;

  Eigen::Vector2d as_vector() const { return {one, logdist}; }
};

/// Distances below this are clamped before taking the logarithm.
inline constexpr double kMinTrendDistance = 1.0;

double distance(const Location &a, const Location &b);

TrendVector trend_features(const Location &x, const Location &base_station);

/// Bi-square function [1 - (d/tau)^2]^2 on d <= tau, zero beyond.
double bisquare(const Location &x, const Location &center, double tau);

/// Nonzero components of s(x): at most the 3x3 block of grid centers around x.
struct BasisEntries {
  static constexpr std::size_t kCapacity = 9;
  std::array<Eigen::Index, kCapacity> index{};
  std::array<double, kCapacity> value{};
  std::size_t size = 0;

  double dot(const Eigen::VectorXd &v) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      acc += value[i] * v[index[i]];
    }
    return acc;
  }
};

/*
 * Bi-square basis with centers on a regular grid of spacing tau.
 *
 * Centers sit at the middle of the tau x tau cells that tile the target box
 * grown by tau on every side, so every point of the box lies within
 * tau / sqrt(2) of some center. Center l = j * nx + i is at
 * (origin.x + i * tau, origin.y + j * tau).
 */
class BasisSet {
public:
  BasisSet(Location origin, Eigen::Index nx, Eigen::Index ny, double tau);

  Eigen::Index size() const { return nx_ * ny_; }
  Eigen::Index nx() const { return nx_; }
  Eigen::Index ny() const { return ny_; }
  double tau() const { return tau_; }
  const Location &origin() const { return origin_; }
  Location center(Eigen::Index l) const;
  std::vector<Location> centers() const;

  BasisEntries entries(const Location &x) const;
  Eigen::VectorXd evaluate(const Location &x) const;

  /// Pairwise center distances (r x r).
  Eigen::MatrixXd center_distances() const;

private:
  Location origin_;
  Eigen::Index nx_;
  Eigen::Index ny_;
  double tau_;
};

BasisSet build_basis_grid(const BoundingBox &area, double tau);

inline Eigen::VectorXd basis_vector(const Location &x, const BasisSet &basis) {
  return basis.evaluate(x);
}

/// Basis layout plus the transmitter position; fixes t(.) and s(.).
struct FieldLayout {
  BasisSet basis;
  Location base_station;
};

} // namespace locfrk

#endif

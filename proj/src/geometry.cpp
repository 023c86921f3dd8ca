#include "locfrk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace locfrk {

BoundingBox::BoundingBox(Location lo, Location hi) : min(lo), max(hi) {
  if (!(std::isfinite(lo.x) && std::isfinite(lo.y) && std::isfinite(hi.x) &&
        std::isfinite(hi.y))) {
    throw std::invalid_argument("bounding box corners must be finite");
  }
  if (!(hi.x > lo.x && hi.y > lo.y)) {
    throw std::invalid_argument(
        "bounding box max corner must strictly dominate min corner");
  }
}

bool BoundingBox::contains(const Location &p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
}

double distance(const Location &a, const Location &b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

TrendVector trend_features(const Location &x, const Location &base_station) {
  const double d = std::max(distance(x, base_station), kMinTrendDistance);
  return {1.0, 10.0 * std::log10(d)};
}

double bisquare(const Location &x, const Location &center, double tau) {
  const double dx = x.x - center.x;
  const double dy = x.y - center.y;
  const double q = (dx * dx + dy * dy) / (tau * tau);
  if (q > 1.0) {
    return 0.0;
  }
  const double w = 1.0 - q;
  return w * w;
}

BasisSet::BasisSet(Location origin, Eigen::Index nx, Eigen::Index ny,
                   double tau)
    : origin_(origin), nx_(nx), ny_(ny), tau_(tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("basis radius tau must be positive");
  }
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("basis grid needs at least one center");
  }
}

Location BasisSet::center(Eigen::Index l) const {
  const Eigen::Index i = l % nx_;
  const Eigen::Index j = l / nx_;
  return {origin_.x + static_cast<double>(i) * tau_,
          origin_.y + static_cast<double>(j) * tau_};
}

std::vector<Location> BasisSet::centers() const {
  std::vector<Location> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Eigen::Index l = 0; l < size(); ++l) {
    out.push_back(center(l));
  }
  return out;
}

BasisEntries BasisSet::entries(const Location &x) const {
  BasisEntries out;
  const double fx = (x.x - origin_.x) / tau_;
  const double fy = (x.y - origin_.y) / tau_;
  if (!std::isfinite(fx) || !std::isfinite(fy)) {
    return out;
  }
  // Centers within tau of x have grid index within one cell of x.
  const double i_lo = std::max(std::ceil(fx - 1.0), 0.0);
  const double i_hi = std::min(std::floor(fx + 1.0), double(nx_ - 1));
  const double j_lo = std::max(std::ceil(fy - 1.0), 0.0);
  const double j_hi = std::min(std::floor(fy + 1.0), double(ny_ - 1));
  for (double j = j_lo; j <= j_hi; j += 1.0) {
    for (double i = i_lo; i <= i_hi; i += 1.0) {
      const auto l = static_cast<Eigen::Index>(j) * nx_ +
                     static_cast<Eigen::Index>(i);
      const double v = bisquare(x, center(l), tau_);
      if (v > 0.0) {
        out.index[out.size] = l;
        out.value[out.size] = v;
        ++out.size;
      }
    }
  }
  return out;
}

Eigen::VectorXd BasisSet::evaluate(const Location &x) const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(size());
  const BasisEntries e = entries(x);
  for (std::size_t i = 0; i < e.size; ++i) {
    s[e.index[i]] = e.value[i];
  }
  return s;
}

Eigen::MatrixXd BasisSet::center_distances() const {
  const Eigen::Index r = size();
  Eigen::MatrixXd d(r, r);
  for (Eigen::Index a = 0; a < r; ++a) {
    const Location ca = center(a);
    d(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < r; ++b) {
      d(a, b) = d(b, a) = distance(ca, center(b));
    }
  }
  return d;
}

BasisSet build_basis_grid(const BoundingBox &area, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("basis radius tau must be positive");
  }
  const auto cells = [tau](double extent) {
    // Cells of size tau over [min - tau, max + tau].
    const double n = std::ceil((extent + 2.0 * tau) / tau - 1e-9);
    return static_cast<Eigen::Index>(std::max(n, 1.0));
  };
  const Location origin{area.min.x - 0.5 * tau, area.min.y - 0.5 * tau};
  return BasisSet(origin, cells(area.width()), cells(area.height()), tau);
}

} // namespace locfrk

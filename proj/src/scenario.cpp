#include "locfrk/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace locfrk {

Dataset::Dataset(std::vector<double> y, std::vector<Location> reported,
                 std::optional<std::vector<Location>> truth)
    : y_(std::move(y)), reported_(std::move(reported)),
      truth_(std::move(truth)) {
  if (reported_.size() != y_.size()) {
    throw std::invalid_argument("dataset: reported locations and y differ in "
                                "length");
  }
  if (truth_ && truth_->size() != y_.size()) {
    throw std::invalid_argument("dataset: true locations and y differ in "
                                "length");
  }
}

const std::vector<Location> &Dataset::truth() const {
  if (!truth_) {
    throw std::logic_error("dataset has no true locations");
  }
  return *truth_;
}

Dataset Dataset::subset(const std::vector<std::size_t> &rows) const {
  std::vector<double> y;
  std::vector<Location> rep;
  std::optional<std::vector<Location>> tr;
  y.reserve(rows.size());
  rep.reserve(rows.size());
  if (truth_) {
    tr.emplace();
    tr->reserve(rows.size());
  }
  for (std::size_t r : rows) {
    y.push_back(y_.at(r));
    rep.push_back(reported_[r]);
    if (truth_) {
      tr->push_back((*truth_)[r]);
    }
  }
  return Dataset(std::move(y), std::move(rep), std::move(tr));
}

Dataset Dataset::with_true_locations() const {
  return Dataset(y_, truth(), truth_);
}

namespace {

enum Stream : std::uint64_t {
  kLocations = 1,
  kField = 2,
  kNugget = 3,
  kLocationNoise = 4,
  kSplit = 5,
};

std::vector<Location> draw_true_locations(const ScenarioConfig &c) {
  Rng rng{c.seed, kLocations};
  std::vector<Location> out;
  out.reserve(c.n);
  if (c.sampling == Sampling::UniformRandom) {
    std::uniform_real_distribution<double> ux(c.area.min.x, c.area.max.x);
    std::uniform_real_distribution<double> uy(c.area.min.y, c.area.max.y);
    for (std::size_t k = 0; k < c.n; ++k) {
      const double x = ux(rng);
      out.push_back({x, uy(rng)});
    }
    return out;
  }
  if (!(c.grid_step > 0.0)) {
    throw std::invalid_argument("grid sampling needs grid_step > 0");
  }
  const auto nx = static_cast<std::size_t>(
      std::floor(c.area.width() / c.grid_step + 1e-9)) + 1;
  const auto ny = static_cast<std::size_t>(
      std::floor(c.area.height() / c.grid_step + 1e-9)) + 1;
  std::vector<std::size_t> cells(nx * ny);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  const std::size_t take = std::min(c.n, cells.size());
  // Partial Fisher-Yates: first `take` entries are a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, cells.size() - 1);
    std::swap(cells[i], cells[pick(rng)]);
  }
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t ix = cells[i] % nx;
    const std::size_t iy = cells[i] / nx;
    out.push_back({c.area.min.x + double(ix) * c.grid_step,
                   c.area.min.y + double(iy) * c.grid_step});
  }
  return out;
}

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng &rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = normal(rng);
  }
  return z;
}

Eigen::MatrixXd kernel_cholesky(const BasisSet &basis,
                                const ModelParams &theta) {
  const KernelMatrices km = kernel_matrices(basis, theta.beta, theta.phi);
  Eigen::LLT<Eigen::MatrixXd> llt(km.k);
  return llt.matrixL();
}

} // namespace

Eigen::VectorXd draw_truth_field(const ScenarioConfig &config,
                                 const BasisSet &truth_basis) {
  const Eigen::MatrixXd l = kernel_cholesky(truth_basis, config.truth);
  Rng rng{config.seed, kField};
  return l * gaussian_vector(l.rows(), rng);
}

Dataset generate_dataset(const ScenarioConfig &config) {
  config.truth.validate();
  if (config.n < 1) {
    throw std::invalid_argument("scenario needs n >= 1");
  }
  const BasisSet basis = build_basis_grid(config.area, config.tau_truth);
  const Eigen::VectorXd eta = draw_truth_field(config, basis);
  std::vector<Location> truth = draw_true_locations(config);
  const std::size_t n = truth.size();

  Rng nugget_rng{config.seed, kNugget};
  std::normal_distribution<double> nugget(0.0,
                                          std::sqrt(config.truth.sigma_eps2));
  Rng noise_rng{config.seed, kLocationNoise};
  std::normal_distribution<double> unit;

  std::vector<double> y(n);
  std::vector<Location> reported(n);
  const Eigen::Vector2d alpha = config.truth.alpha();
  for (std::size_t k = 0; k < n; ++k) {
    const Location &xs = truth[k];
    y[k] = trend_features(xs, config.base_station).as_vector().dot(alpha) +
           basis.entries(xs).dot(eta) + nugget(nugget_rng);
    const double ux = unit(noise_rng);
    const double uy = unit(noise_rng);
    reported[k] = {xs.x + config.sigma_g * ux, xs.y + config.sigma_g * uy};
  }
  return Dataset(std::move(y), std::move(reported), std::move(truth));
}

Eigen::VectorXd sample_observations(const std::vector<Location> &reported,
                                    const ModelParams &theta,
                                    const FieldLayout &layout,
                                    const Eigen::MatrixXd &k_chol,
                                    const LocationNoiseModel &noise,
                                    Rng &rng) {
  const Eigen::VectorXd eta = k_chol * gaussian_vector(k_chol.rows(), rng);
  const auto offsets = sample_location_noise(noise, reported.size(), rng);
  std::normal_distribution<double> nugget(0.0, std::sqrt(theta.sigma_eps2));
  const Eigen::Vector2d alpha = theta.alpha();
  Eigen::VectorXd y(Eigen::Index(reported.size()));
  for (std::size_t k = 0; k < reported.size(); ++k) {
    const Location xs = reported[k] - offsets[k];
    y[Eigen::Index(k)] =
        trend_features(xs, layout.base_station).as_vector().dot(alpha) +
        layout.basis.entries(xs).dot(eta) + nugget(rng);
  }
  return y;
}

namespace {

std::vector<std::size_t> shuffled_rows(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng rng{seed, kSplit};
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(rows[i - 1], rows[pick(rng)]);
  }
  return rows;
}

Split make_split(const Dataset &data, std::vector<std::size_t> learning,
                 std::vector<std::size_t> test) {
  std::sort(learning.begin(), learning.end());
  std::sort(test.begin(), test.end());
  Split s;
  s.learning = data.subset(learning);
  Dataset t = data.subset(test);
  s.test = t.has_truth() ? t.with_true_locations() : t;
  s.learning_rows = std::move(learning);
  s.test_rows = std::move(test);
  return s;
}

} // namespace

Split split_kfold(const Dataset &data, std::size_t folds, std::size_t fold,
                  std::uint64_t seed) {
  if (data.empty()) {
    throw std::invalid_argument("cannot split an empty dataset");
  }
  if (folds < 2 || fold >= folds) {
    throw std::invalid_argument("k-fold split needs k >= 2 and fold < k");
  }
  const std::size_t n = data.size();
  const auto rows = shuffled_rows(n, seed);
  const std::size_t begin = n * fold / folds;
  const std::size_t end = n * (fold + 1) / folds;
  std::vector<std::size_t> learning, test;
  for (std::size_t i = 0; i < n; ++i) {
    (i >= begin && i < end ? test : learning).push_back(rows[i]);
  }
  return make_split(data, std::move(learning), std::move(test));
}

Split split_fraction(const Dataset &data, double test_fraction,
                     std::uint64_t seed) {
  if (data.empty()) {
    throw std::invalid_argument("cannot split an empty dataset");
  }
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw std::invalid_argument("test fraction must lie in [0, 1]");
  }
  const std::size_t n = data.size();
  const auto rows = shuffled_rows(n, seed);
  const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * n));
  std::vector<std::size_t> test(rows.begin(), rows.begin() + n_test);
  std::vector<std::size_t> learning(rows.begin() + n_test, rows.end());
  return make_split(data, std::move(learning), std::move(test));
}

void write_dataset_csv(std::ostream &out, const Dataset &data) {
  out << "y_dbm,rep_x,rep_y";
  if (data.has_truth()) {
    out << ",true_x,true_y";
  }
  out << '\n';
  for (std::size_t k = 0; k < data.size(); ++k) {
    out << format_double(data.y()[k]) << ',' << format_double(data.reported()[k].x)
        << ',' << format_double(data.reported()[k].y);
    if (data.has_truth()) {
      out << ',' << format_double(data.truth()[k].x) << ','
          << format_double(data.truth()[k].y);
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{}
                                           : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

} // namespace

Dataset read_dataset_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("dataset CSV is empty (missing header)");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  const auto header = split_csv(line);
  bool with_truth = false;
  if (header == std::vector<std::string>{"y_dbm", "rep_x", "rep_y", "true_x",
                                         "true_y"}) {
    with_truth = true;
  } else if (header !=
             std::vector<std::string>{"y_dbm", "rep_x", "rep_y"}) {
    throw std::runtime_error("dataset CSV line 1: expected header "
                             "y_dbm,rep_x,rep_y[,true_x,true_y]");
  }
  const std::size_t width = with_truth ? 5 : 3;
  std::vector<double> y;
  std::vector<Location> rep, truth;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != width) {
      throw std::runtime_error("dataset CSV line " + std::to_string(lineno) +
                               ": expected " + std::to_string(width) +
                               " fields, got " + std::to_string(cells.size()));
    }
    double v[5];
    for (std::size_t i = 0; i < width; ++i) {
      const std::string &c = cells[i];
      auto res = std::from_chars(c.data(), c.data() + c.size(), v[i]);
      if (c.empty() || res.ec != std::errc() ||
          res.ptr != c.data() + c.size() || !std::isfinite(v[i])) {
        throw std::runtime_error("dataset CSV line " + std::to_string(lineno) +
                                 ": missing or invalid field '" + header[i] +
                                 "'");
      }
    }
    y.push_back(v[0]);
    rep.push_back({v[1], v[2]});
    if (with_truth) {
      truth.push_back({v[3], v[4]});
    }
  }
  std::optional<std::vector<Location>> tr;
  if (with_truth) {
    tr = std::move(truth);
  }
  return Dataset(std::move(y), std::move(rep), std::move(tr));
}

void save_dataset_csv(const std::string &path, const Dataset &data) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  write_dataset_csv(out, data);
}

Dataset load_dataset_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset '" + path + "'");
  }
  return read_dataset_csv(in);
}

} // namespace locfrk

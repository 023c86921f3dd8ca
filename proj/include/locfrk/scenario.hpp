#ifndef LOCFRK_SCENARIO_HPP
#define LOCFRK_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locfrk/geometry.hpp"
#include "locfrk/model.hpp"

namespace locfrk {

/*
 * Received-power measurements with their reported positions and, for
 * synthetic data, the true positions. Either every row has a true location
 * or none does.
 */
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<double> y, std::vector<Location> reported,
          std::optional<std::vector<Location>> truth = std::nullopt);

  std::size_t size() const { return y_.size(); }
  bool empty() const { return y_.empty(); }
  bool has_truth() const { return truth_.has_value(); }

  const std::vector<double> &y() const { return y_; }
  Eigen::Map<const Eigen::VectorXd> y_vector() const {
    return {y_.data(), Eigen::Index(y_.size())};
  }
  const std::vector<Location> &reported() const { return reported_; }
  const std::vector<Location> &truth() const;

  /// Rows picked by index, in the given order.
  Dataset subset(const std::vector<std::size_t> &rows) const;
  /// Copy whose reported locations are replaced by the true ones.
  Dataset with_true_locations() const;

  friend bool operator==(const Dataset &, const Dataset &) = default;

private:
  std::vector<double> y_;
  std::vector<Location> reported_;
  std::optional<std::vector<Location>> truth_;
};

enum class Sampling { UniformRandom, Grid };

/*
 * Desk-scale synthetic radio scenario. Defaults: 1 km square with the
 * transmitter in the middle, P0 = -30 dBm, kappa = 3.5, sigma_eps2 = 4 dB^2,
 * beta = 0.25, phi = 150 m, generating basis tau = 50 m, n = 2000.
 */
struct ScenarioConfig {
  BoundingBox area{{0.0, 0.0}, {1000.0, 1000.0}};
  Location base_station{500.0, 500.0};
  ModelParams truth{-30.0, 3.5, 4.0, 0.25, 150.0};
  double tau_truth = 50.0;
  std::size_t n = 2000;
  double sigma_g = 20.0;
  Sampling sampling = Sampling::UniformRandom;
  double grid_step = 5.0;
  std::uint64_t seed = 1;
};

/*
 * Draws true locations, one field realization eta* ~ N(0, K(beta*, phi*)),
 * y_k = t(x*_k)' alpha* + s(x*_k)' eta* + eps_k, and reported locations
 * x_k = x*_k + U_k so that x_k - U_k recovers x*_k. Truth, field, nugget and
 * location errors come from separate substreams of the seed; changing only
 * sigma_g rescales the location errors and leaves y untouched.
 */
Dataset generate_dataset(const ScenarioConfig &config);

/// The generating field realization (eta*) for a config.
Eigen::VectorXd draw_truth_field(const ScenarioConfig &config,
                                 const BasisSet &truth_basis);

/*
 * One draw of Y at fixed reported locations: true positions x_k - U_k with
 * U_k ~ g, a fresh eta ~ N(0, K) and fresh nugget noise. `k_chol` is the
 * lower Cholesky factor of K.
 */
Eigen::VectorXd sample_observations(const std::vector<Location> &reported,
                                    const ModelParams &theta,
                                    const FieldLayout &layout,
                                    const Eigen::MatrixXd &k_chol,
                                    const LocationNoiseModel &noise, Rng &rng);

struct Split {
  Dataset learning;
  Dataset test;
  std::vector<std::size_t> learning_rows;
  std::vector<std::size_t> test_rows;
};

/// Fold `fold` of a uniform random k-fold partition. Test rows are
/// evaluated at their true locations when those are known.
Split split_kfold(const Dataset &data, std::size_t folds, std::size_t fold,
                  std::uint64_t seed);

/// Random split with round(fraction * n) test rows.
Split split_fraction(const Dataset &data, double test_fraction,
                     std::uint64_t seed);

/// CSV with header y_dbm,rep_x,rep_y[,true_x,true_y].
void write_dataset_csv(std::ostream &out, const Dataset &data);
Dataset read_dataset_csv(std::istream &in);
void save_dataset_csv(const std::string &path, const Dataset &data);
Dataset load_dataset_csv(const std::string &path);

} // namespace locfrk

#endif

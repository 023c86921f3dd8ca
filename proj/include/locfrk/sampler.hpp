#ifndef LOCFRK_SAMPLER_HPP
#define LOCFRK_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "locfrk/geometry.hpp"
#include "locfrk/model.hpp"
#include "locfrk/scenario.hpp"

namespace locfrk {

/// Default proposal variance (m^2) of the location random walk.
inline constexpr double kDefaultProposalVariance = 10.0;

/// Missing data of the EM problem: per-observation location errors and the
/// basis weights.
struct LatentState {
  Eigen::MatrixX2d u;
  Eigen::VectorXd eta;

  /// U = 0, eta = 0.
  static LatentState zeros(std::size_t n, Eigen::Index r);
};

struct ChainStats {
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> proposed;
  std::size_t sweeps = 0;

  explicit ChainStats(std::size_t n = 0) : accepted(n, 0), proposed(n, 0) {}
  void merge(const ChainStats &other);
  std::size_t total_accepted() const;
  std::size_t total_proposed() const;
  /// Accepted / proposed; 0 when nothing was proposed.
  double acceptance_rate() const;
};

/// Gaussian conditional of eta given U (and Y).
struct EtaConditional {
  Eigen::VectorXd mu;
  Eigen::MatrixXd gamma;
};

/// Addresses one sweep of one chain: substreams hang off (seed, iteration,
/// sweep) so the n location updates can run in any order.
struct SweepKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::uint64_t sweep = 0;
};

/*
 * Posterior pi_theta(u, eta | y) for fixed parameters. Holds references to
 * the dataset and layout, which must outlive it.
 */
class PosteriorModel {
public:
  PosteriorModel(const Dataset &data, const FieldLayout &layout,
                 LocationNoiseModel noise, const ModelParams &theta);
  PosteriorModel(const Dataset &data, const FieldLayout &layout,
                 LocationNoiseModel noise, const ModelParams &theta,
                 KernelMatrices kernel);

  const Dataset &data() const { return *data_; }
  const FieldLayout &layout() const { return *layout_; }
  const LocationNoiseModel &noise() const { return noise_; }
  const ModelParams &theta() const { return theta_; }
  const KernelMatrices &kernel() const { return kernel_; }
  std::size_t size() const { return data_->size(); }
  Eigen::Index rank() const { return layout_->basis.size(); }

  /// Shifted location x_k - u.
  Location shifted(std::size_t k, const Eigen::Vector2d &u) const {
    return data_->reported()[k] - u;
  }

  /*
   * Unnormalized log density of U_k given eta and y:
   *   -(y_k - m(u))^2 / (2 sigma_eps2) + ln g(u),
   *   m(u) = alpha' t(x_k - u) + eta' s(x_k - u).
   * Requires non-Dirac noise.
   */
  double log_cond_location(std::size_t k, const Eigen::Vector2d &u,
                           const Eigen::VectorXd &eta) const;

  /// Precision K^-1 + S S' / sigma_eps2 and linear term S (y - T alpha) /
  /// sigma_eps2 at shifted locations.
  void eta_precision(const Eigen::MatrixX2d &u, Eigen::MatrixXd &precision,
                     Eigen::VectorXd &linear) const;

  /// Gamma = (S S'/sigma_eps2 + K^-1)^-1, mu = Gamma S (y - T alpha) /
  /// sigma_eps2. Throws if the precision is not SPD.
  EtaConditional eta_conditional(const Eigen::MatrixX2d &u) const;

  /// One exact draw eta ~ N(mu(u), Gamma(u)).
  Eigen::VectorXd draw_eta(const Eigen::MatrixX2d &u, Rng &rng) const;

private:
  const Dataset *data_;
  const FieldLayout *layout_;
  LocationNoiseModel noise_;
  ModelParams theta_;
  KernelMatrices kernel_;
};

/// Metropolis acceptance probability min(1, exp(log_proposed - log_current)).
double acceptance_probability(double log_current, double log_proposed);

/*
 * One Metropolis-within-Gibbs sweep, in place: every u_k gets a random-walk
 * proposal N(u_k, sigma_q2 I2) accepted against eta^{t-1}, then eta is drawn
 * exactly from its Gaussian conditional. Dirac noise skips the location
 * step and pins U at zero.
 */
ChainStats gibbs_sweep(LatentState &state, const PosteriorModel &model,
                       double sigma_q2, const SweepKey &key);

using SampleVisitor = std::function<void(const LatentState &)>;

struct ChainResult {
  LatentState last;
  ChainStats stats;
};

/// `sweeps` successive sweeps from `init`; `visit` sees every sample.
ChainResult run_chain(const LatentState &init, const PosteriorModel &model,
                      std::size_t sweeps, double sigma_q2, std::uint64_t seed,
                      std::uint64_t iteration, const SampleVisitor &visit);

/// Convenience overload that keeps every sample.
std::vector<LatentState> run_chain(const LatentState &init,
                                   const PosteriorModel &model,
                                   std::size_t sweeps, double sigma_q2,
                                   std::uint64_t seed, ChainStats *stats);

} // namespace locfrk

#endif

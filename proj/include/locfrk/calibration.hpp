#ifndef LOCFRK_CALIBRATION_HPP
#define LOCFRK_CALIBRATION_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "locfrk/geometry.hpp"
#include "locfrk/model.hpp"
#include "locfrk/sampler.hpp"
#include "locfrk/scenario.hpp"

namespace locfrk {

/*
 * Sufficient statistics of the complete-data log-likelihood
 *   psi1 = eta eta'
 *   psi2 = T(u)' T(u)
 *   psi3 = T(u)' (y - S(u)' eta)
 *   psi4 = eta' S(u) S(u)' eta - 2 y' S(u)' eta
 * plus mu_eta, the running estimate of E[eta | y].
 */
struct SufficientStats {
  Eigen::MatrixXd psi1;
  Eigen::Matrix2d psi2 = Eigen::Matrix2d::Zero();
  Eigen::Vector2d psi3 = Eigen::Vector2d::Zero();
  double psi4 = 0.0;
  Eigen::VectorXd mu_eta;

  static SufficientStats zeros(Eigen::Index r);
};

/// Statistics of a single latent sample; mu_eta is set to the sample's eta.
SufficientStats sufficient_stats(const LatentState &sample,
                                 const Dataset &data,
                                 const FieldLayout &layout);

/// Accumulates chain samples and returns their average.
class ChainAverager {
public:
  ChainAverager(const Dataset &data, const FieldLayout &layout,
                std::size_t expected = 0);
  void add(const LatentState &sample);
  std::size_t count() const { return count_; }
  SufficientStats average() const;

private:
  const Dataset *data_;
  const FieldLayout *layout_;
  std::size_t count_ = 0;
  std::vector<Eigen::VectorXd> etas_;
  Eigen::Matrix2d psi2_ = Eigen::Matrix2d::Zero();
  Eigen::Vector2d psi3_ = Eigen::Vector2d::Zero();
  double psi4_ = 0.0;
};

/// Exact conditional expectations of the statistics under Dirac noise
/// (U = 0, eta | y Gaussian).
SufficientStats exact_conditional_stats(const PosteriorModel &model);

/// (1 - gamma) prev + gamma chain_average, on psi1..psi4 and mu_eta. psi1 is
/// re-symmetrized and projected onto the PSD cone if rounding broke it.
SufficientStats saem_update_stats(const SufficientStats &prev,
                                  const SufficientStats &chain_average,
                                  double gamma);

struct AlphaSigma {
  Eigen::Vector2d alpha;
  double sigma_eps2 = 0.0;
};

/// alpha = psi2^-1 psi3 and
/// sigma_eps2 = (y'y + <psi2, alpha alpha'> - 2 <psi3, alpha> + psi4) / n,
/// floored at kParamFloor. Throws if psi2 is singular.
AlphaSigma update_alpha_sigma(const SufficientStats &stats,
                              const Eigen::VectorXd &y);

/// beta = r / <psi1, Kt^-1>.
double update_beta(const Eigen::MatrixXd &psi1,
                   const Eigen::MatrixXd &k_tilde_inv);

/// phi-dependent part of Q: -1/2 ln det K - 1/2 <psi1, K^-1>, K = K(beta, phi).
double q_phi(const Eigen::MatrixXd &psi1, double beta, double phi,
             const Eigen::MatrixXd &distances);

/*
 * d q_phi / d phi in trace form:
 *   1/(2 phi^2) Tr((beta Kt^-1 psi1 - I) Kt^-1 (D o Kt))
 * with D the center distance matrix and o the Hadamard product.
 */
double phi_gradient(const Eigen::MatrixXd &psi1, double beta, double phi,
                    const Eigen::MatrixXd &k_tilde,
                    const Eigen::MatrixXd &k_tilde_inv,
                    const Eigen::MatrixXd &distances);

struct PhiUpdate {
  double phi = 0.0;
  double gradient = 0.0;
  double hessian = 0.0;
  double step = 0.0;       // full Newton (or fallback) step before scaling
  double scale = 0.0;      // accepted backtracking factor a, 0 if none
  bool newton = false;     // false when the curvature forced gradient ascent
};

/*
 * One Newton step on phi with finite-difference curvature (step 1e-4 phi),
 * scaled by a in {1, 1/2, ..., 2^-20} until q_phi does not decrease. When
 * the curvature is nonnegative the step falls back to gradient ascent of
 * length phi / 10. Keeps phi when no scale works.
 */
PhiUpdate update_phi(const Eigen::MatrixXd &psi1, double beta_new,
                     double phi_prev, const Eigen::MatrixXd &distances,
                     std::optional<double> forced_scale = std::nullopt);

/// Q = Phi1(theta) + sum_j <psi_j, Phi2_j(theta)>.
double em_q_value(const ModelParams &theta, const SufficientStats &stats,
                  const Eigen::VectorXd &y, const KernelMatrices &kernel);

/// Complete-data log-likelihood of (y, u, eta) up to theta-free terms and
/// the ln g(u) terms.
double complete_log_likelihood(const ModelParams &theta,
                               const LatentState &sample, const Dataset &data,
                               const FieldLayout &layout,
                               const KernelMatrices &kernel);

struct SaemConfig {
  std::size_t burn_in = 400;
  std::size_t max_iter = 900;
  double gamma_exponent = 0.75;
  std::size_t m_start = 1000;
  std::size_t m_end = 10;
  double sigma_q2 = kDefaultProposalVariance;
  std::size_t moment_mc_samples = 1000;
  std::size_t stop_window = 50;
  double stop_tolerance = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;
};

/// gamma_l: 1 during burn-in, then (l - burn_in)^-gamma_exponent.
double saem_step_size(std::size_t iteration, const SaemConfig &config);

/// M_l: m_start during burn-in, then linear from m_start to m_end.
std::size_t saem_chain_length(std::size_t iteration, const SaemConfig &config);

struct SaemTraceRow {
  std::size_t iteration = 0;
  ModelParams theta;
  double q_value = 0.0;
  double accept_rate = 0.0;
  double gamma = 0.0;
  std::size_t chain_length = 0;
  double q_before = 0.0;
  bool ascent_ok = true;
};

using SaemTrace = std::vector<SaemTraceRow>;

struct CalibrationResult {
  ModelParams theta;
  Eigen::VectorXd mu_eta;
  SaemTrace trace;
  ChainStats chain_stats;
  bool stopped_early = false;
};

/// OLS trend on reported locations; sigma_eps2 = v/2, beta = 2/v with v the
/// residual variance; phi = tau.
ModelParams initial_params(const Dataset &data, const FieldLayout &layout);

/// Relative tolerance of the per-iteration surrogate-ascent check.
inline constexpr double kAscentTolerance = 1e-9;

/*
 * Stochastic approximation EM. Each iteration runs the Metropolis-within-
 * Gibbs chain warm-started from the previous chain's last state, folds the
 * chain average into the statistics, then updates (alpha, sigma_eps2), beta
 * and phi in turn. Dirac noise uses the exact E-step instead of a chain and
 * returns the exact posterior mean of eta at the final parameters.
 * Throws std::runtime_error if an M-step lowers the surrogate.
 */
CalibrationResult calibrate(const Dataset &data, const FieldLayout &layout,
                            const LocationNoiseModel &noise,
                            const SaemConfig &config,
                            std::optional<ModelParams> start = std::nullopt);

/// Header iter,p0,kappa,sigma_eps2,beta,phi,q_value,accept_rate.
void write_trace_csv(std::ostream &out, const SaemTrace &trace);

} // namespace locfrk

#endif

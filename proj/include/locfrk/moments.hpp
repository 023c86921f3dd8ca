#ifndef LOCFRK_MOMENTS_HPP
#define LOCFRK_MOMENTS_HPP

#include <cstdint>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "locfrk/geometry.hpp"
#include "locfrk/model.hpp"
#include "locfrk/scenario.hpp"

namespace locfrk {

/// Default Monte Carlo sample count for the smeared moments.
inline constexpr std::size_t kDefaultMomentSamples = 1000;

/*
 * Trend and basis terms averaged over the location-noise density:
 *   t_bar row i  = E[t(x_i - U)]
 *   s_bar col i  = E[s(x_i - U)]
 *   delta_i      = E[s' K s] - E[s]' K E[s]   (clamped at 0)
 * For Dirac noise these are the point evaluations and delta = 0.
 */
struct SmearedMoments {
  Eigen::MatrixXd t_bar; // n x 2
  Eigen::MatrixXd s_bar; // r x n
  Eigen::VectorXd delta; // n
  std::size_t mc_samples = 0;
};

/*
 * Monte Carlo estimate from one shared set of M location-noise draws (seeded
 * by `seed`), reused for every observation and for both terms of delta.
 * Observations are processed in parallel; output does not depend on the
 * worker count.
 */
SmearedMoments estimate_smeared_moments(std::span<const Location> reported,
                                        const FieldLayout &layout,
                                        const KernelMatrices &kernel,
                                        const LocationNoiseModel &noise,
                                        std::size_t mc_samples,
                                        std::uint64_t seed);

/// Same, with noise offsets supplied by the caller.
SmearedMoments
smeared_moments_from_draws(std::span<const Location> reported,
                           const FieldLayout &layout,
                           const KernelMatrices &kernel,
                           std::span<const Eigen::Vector2d> draws);

/*
 * Sigma = s_bar' K s_bar + V with V = diag(delta + sigma_eps2), kept in the
 * Woodbury form
 *   Sigma^-1 = V^-1 - V^-1 s_bar' (K^-1 + s_bar V^-1 s_bar')^-1 s_bar V^-1.
 * Only the r x r middle matrix is factorized; no n x n matrix is formed.
 */
struct SigmaFactors {
  Eigen::VectorXd v_diag;
  Eigen::MatrixXd s_bar;
  Eigen::MatrixXd k;
  Eigen::LLT<Eigen::MatrixXd> middle;

  Eigen::Index size() const { return v_diag.size(); }
  Eigen::MatrixXd middle_inverse() const;
};

SigmaFactors assemble_sigma_factors(const SmearedMoments &moments,
                                    const KernelMatrices &kernel,
                                    double sigma_eps2);

/// Sigma^-1 rhs in O(n r + r^2).
Eigen::VectorXd sigma_solve(const SigmaFactors &factors,
                            const Eigen::VectorXd &rhs);

/// Sigma x without forming Sigma.
Eigen::VectorXd sigma_multiply(const SigmaFactors &factors,
                               const Eigen::VectorXd &x);

} // namespace locfrk

#endif

#ifndef LOCFRK_MODEL_HPP
#define LOCFRK_MODEL_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "locfrk/geometry.hpp"
#include "locfrk/random.hpp"

namespace locfrk {

/// Lower bound applied to sigma_eps2, beta and phi after every M-step.
inline constexpr double kParamFloor = 1e-8;

/// Relative diagonal jitter: K gets jitter * beta^-1 on its diagonal.
inline constexpr double kKernelJitter = 1e-10;

/*
 * Unknown parameters of the observation model: trend intercept p0 (dBm),
 * path-loss slope kappa, nugget sigma_eps2 (dB^2), precision beta of each
 * basis weight (1/dB^2) and exponential correlation range phi (m).
 */
struct ModelParams {
  double p0 = 0.0;
  double kappa = 0.0;
  double sigma_eps2 = 1.0;
  double beta = 1.0;
  double phi = 1.0;

  Eigen::Vector2d alpha() const { return {p0, kappa}; }
  void set_alpha(const Eigen::Vector2d &a) {
    p0 = a[0];
    kappa = a[1];
  }
  /// Throws std::invalid_argument when a positivity constraint fails.
  void validate() const;
  /// Clamps the positive parameters to kParamFloor.
  void clamp_to_floor();

  friend bool operator==(const ModelParams &, const ModelParams &) = default;
};

/*
 * K = beta^-1 Kt(phi) + jitter * beta^-1 I, with Kt_ij = exp(-|c_i - c_j| / phi).
 * k_tilde is stored without jitter; k_tilde_inv inverts the jittered
 * correlation, so k_inv == beta * k_tilde_inv.
 */
struct KernelMatrices {
  Eigen::MatrixXd k;
  Eigen::MatrixXd k_tilde;
  Eigen::MatrixXd k_inv;
  Eigen::MatrixXd k_tilde_inv;
  double logdet_k = 0.0;
  double beta = 1.0;
  double phi = 1.0;

  Eigen::Index rank() const { return k.rows(); }
};

/// Throws std::runtime_error if the jittered correlation is not SPD.
KernelMatrices kernel_matrices(const BasisSet &basis, double beta, double phi);

/// Correlation exp(-D / phi) from a precomputed distance matrix.
Eigen::MatrixXd exponential_correlation(const Eigen::MatrixXd &distances,
                                        double phi);

/// Isotropic Gaussian location error N(0, sigma_g^2 I2); sigma_g = 0 is the
/// Dirac mass at the origin (exact locations).
struct LocationNoiseModel {
  double sigma_g = 0.0;

  bool is_dirac() const { return sigma_g == 0.0; }
};

double noise_logdensity(const LocationNoiseModel &noise,
                        const Eigen::Vector2d &u);

std::vector<Eigen::Vector2d> sample_location_noise(
    const LocationNoiseModel &noise, std::size_t count, Rng &rng);

/*
 * Parameter file: '#' header lines then "key = value" lines for p0, kappa,
 * sigma_eps2, beta, phi. Calibration may add an optional mu_eta line with
 * comma-separated basis weights, needed by the conditional-expectation
 * predictor. Values are written with 17 significant digits.
 */
struct ParamFile {
  ModelParams params;
  std::optional<Eigen::VectorXd> mu_eta;
  std::vector<std::string> header;
};

void write_param_file(std::ostream &out, const ParamFile &file);
ParamFile read_param_file(std::istream &in);
void save_param_file(const std::string &path, const ParamFile &file);
ParamFile load_param_file(const std::string &path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

} // namespace locfrk

#endif

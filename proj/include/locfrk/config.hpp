#ifndef LOCFRK_CONFIG_HPP
#define LOCFRK_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "locfrk/calibration.hpp"
#include "locfrk/geometry.hpp"
#include "locfrk/scenario.hpp"

namespace locfrk {

/*
 * Flat run configuration read from `key = value` lines; '#' starts a
 * comment line. Unknown keys are rejected, absent keys keep the defaults
 * below.
 *
 *   area = 0,0,1000,1000        bs = 500,500
 *   truth_p0 = -30              truth_kappa = 3.5
 *   truth_sigma_eps2 = 4        truth_beta = 0.25
 *   truth_phi = 150             tau_truth = 50
 *   n = 2000                    sigma_g = 20
 *   sampling = uniform | grid   grid_step = 5
 *   tau = 50                    mc_samples = 1000
 *   sigma_q2 = 10               burn_in = 400
 *   max_iter = 900              gamma_exponent = 0.75
 *   m_start = 1000              m_end = 10
 *   stop_window = 50            stop_tolerance = 1e-4
 *   folds = 5                   rings = 300,600
 *   seed = 1
 */
struct RunConfig {
  ScenarioConfig scenario;
  double tau = 50.0;
  std::size_t mc_samples = 1000;
  SaemConfig saem;
  std::size_t folds = 5;
  std::vector<double> rings{300.0, 600.0};
  std::uint64_t seed = 1;

  /// Seed the scenario and SAEM stages from `seed`.
  void set_seed(std::uint64_t s);
  void validate() const;

  FieldLayout layout() const { return layout_for(tau); }
  FieldLayout layout_for(double basis_tau) const;
  LocationNoiseModel noise() const { return {scenario.sigma_g}; }
};

RunConfig read_run_config(std::istream &in);
RunConfig load_run_config(const std::string &path);
void write_run_config(std::ostream &out, const RunConfig &config);

/// Comma-separated list of doubles.
std::vector<double> parse_double_list(const std::string &text);

} // namespace locfrk

#endif

#include "locfrk/moments.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "locfrk/parallel.hpp"

namespace locfrk {

namespace {

constexpr std::uint64_t kMomentStream = 11;

double quadratic_form(const BasisEntries &e, const Eigen::MatrixXd &k) {
  double acc = 0.0;
  for (std::size_t a = 0; a < e.size; ++a) {
    const double va = e.value[a];
    acc += va * va * k(e.index[a], e.index[a]);
    for (std::size_t b = a + 1; b < e.size; ++b) {
      acc += 2.0 * va * e.value[b] * k(e.index[a], e.index[b]);
    }
  }
  return acc;
}

} // namespace

SmearedMoments
smeared_moments_from_draws(std::span<const Location> reported,
                           const FieldLayout &layout,
                           const KernelMatrices &kernel,
                           std::span<const Eigen::Vector2d> draws) {
  if (draws.empty()) {
    throw std::invalid_argument("smeared moments need at least one draw");
  }
  const auto n = Eigen::Index(reported.size());
  const Eigen::Index r = layout.basis.size();
  const double inv_m = 1.0 / static_cast<double>(draws.size());

  SmearedMoments out;
  out.t_bar.resize(n, 2);
  out.s_bar = Eigen::MatrixXd::Zero(r, n);
  out.delta.resize(n);
  out.mc_samples = draws.size();

  parallel_for(reported.size(), [&](std::size_t ii) {
    const auto i = Eigen::Index(ii);
    double t_acc = 0.0;
    double sks_acc = 0.0;
    auto column = out.s_bar.col(i);
    for (const Eigen::Vector2d &u : draws) {
      const Location x = reported[ii] - u;
      t_acc += trend_features(x, layout.base_station).logdist;
      const BasisEntries e = layout.basis.entries(x);
      for (std::size_t a = 0; a < e.size; ++a) {
        column[e.index[a]] += e.value[a];
      }
      sks_acc += quadratic_form(e, kernel.k);
    }
    column *= inv_m;
    out.t_bar(i, 0) = 1.0;
    out.t_bar(i, 1) = t_acc * inv_m;

    std::vector<Eigen::Index> support;
    for (Eigen::Index l = 0; l < r; ++l) {
      if (column[l] != 0.0) {
        support.push_back(l);
      }
    }
    double mean_form = 0.0;
    for (std::size_t a = 0; a < support.size(); ++a) {
      const double va = column[support[a]];
      mean_form += va * va * kernel.k(support[a], support[a]);
      for (std::size_t b = a + 1; b < support.size(); ++b) {
        mean_form += 2.0 * va * column[support[b]] *
                     kernel.k(support[a], support[b]);
      }
    }
    out.delta[i] = std::max(0.0, sks_acc * inv_m - mean_form);
  });
  return out;
}

SmearedMoments estimate_smeared_moments(std::span<const Location> reported,
                                        const FieldLayout &layout,
                                        const KernelMatrices &kernel,
                                        const LocationNoiseModel &noise,
                                        std::size_t mc_samples,
                                        std::uint64_t seed) {
  if (mc_samples < 1) {
    throw std::invalid_argument("moment estimation needs M >= 1");
  }
  if (noise.is_dirac()) {
    const auto n = Eigen::Index(reported.size());
    SmearedMoments out;
    out.t_bar.resize(n, 2);
    out.s_bar = Eigen::MatrixXd::Zero(layout.basis.size(), n);
    out.delta = Eigen::VectorXd::Zero(n);
    out.mc_samples = mc_samples;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Location &x = reported[std::size_t(i)];
      out.t_bar.row(i) =
          trend_features(x, layout.base_station).as_vector().transpose();
      const BasisEntries e = layout.basis.entries(x);
      for (std::size_t a = 0; a < e.size; ++a) {
        out.s_bar(e.index[a], i) = e.value[a];
      }
    }
    return out;
  }
  Rng rng{seed, kMomentStream};
  const auto draws = sample_location_noise(noise, mc_samples, rng);
  return smeared_moments_from_draws(reported, layout, kernel, draws);
}

SigmaFactors assemble_sigma_factors(const SmearedMoments &moments,
                                    const KernelMatrices &kernel,
                                    double sigma_eps2) {
  if (!(sigma_eps2 > 0.0)) {
    throw std::invalid_argument("Sigma assembly needs sigma_eps2 > 0");
  }
  SigmaFactors f;
  f.v_diag = moments.delta.array() + sigma_eps2;
  f.s_bar = moments.s_bar;
  f.k = kernel.k;
  const Eigen::MatrixXd scaled = f.s_bar * f.v_diag.cwiseInverse().asDiagonal();
  Eigen::MatrixXd middle = kernel.k_inv;
  middle.noalias() += scaled * f.s_bar.transpose();
  f.middle.compute(middle);
  if (f.middle.info() != Eigen::Success) {
    throw std::runtime_error("Woodbury middle matrix is not positive definite");
  }
  return f;
}

Eigen::MatrixXd SigmaFactors::middle_inverse() const {
  const Eigen::Index r = s_bar.rows();
  return middle.solve(Eigen::MatrixXd::Identity(r, r));
}

Eigen::VectorXd sigma_solve(const SigmaFactors &factors,
                            const Eigen::VectorXd &rhs) {
  if (rhs.size() != factors.size()) {
    throw std::invalid_argument("sigma_solve: rhs has the wrong length");
  }
  const Eigen::VectorXd w = rhs.cwiseQuotient(factors.v_diag);
  const Eigen::VectorXd z = factors.middle.solve(factors.s_bar * w);
  return w - (factors.s_bar.transpose() * z).cwiseQuotient(factors.v_diag);
}

Eigen::VectorXd sigma_multiply(const SigmaFactors &factors,
                               const Eigen::VectorXd &x) {
  return factors.s_bar.transpose() * (factors.k * (factors.s_bar * x)) +
         factors.v_diag.cwiseProduct(x);
}

} // namespace locfrk

#include "locfrk/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace locfrk {

namespace {

constexpr std::uint64_t kChainStream = 21;

void accumulate_sample(const LatentState &sample, const Dataset &data,
                       const FieldLayout &layout, Eigen::Matrix2d &psi2,
                       Eigen::Vector2d &psi3, double &psi4) {
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Location x =
        data.reported()[k] - sample.u.row(Eigen::Index(k)).transpose();
    const Eigen::Vector2d t = trend_features(x, layout.base_station).as_vector();
    const double s_eta = layout.basis.entries(x).dot(sample.eta);
    const double yk = data.y()[k];
    psi2.noalias() += t * t.transpose();
    psi3 += t * (yk - s_eta);
    psi4 += s_eta * s_eta - 2.0 * yk * s_eta;
  }
}

void symmetrize_psd(Eigen::MatrixXd &m) {
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() >= 0.0).all()) {
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  m = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  m = 0.5 * (m + m.transpose()).eval();
}

} // namespace

SufficientStats SufficientStats::zeros(Eigen::Index r) {
  SufficientStats s;
  s.psi1 = Eigen::MatrixXd::Zero(r, r);
  s.mu_eta = Eigen::VectorXd::Zero(r);
  return s;
}

SufficientStats sufficient_stats(const LatentState &sample,
                                 const Dataset &data,
                                 const FieldLayout &layout) {
  SufficientStats s;
  s.psi1 = sample.eta * sample.eta.transpose();
  s.mu_eta = sample.eta;
  accumulate_sample(sample, data, layout, s.psi2, s.psi3, s.psi4);
  return s;
}

ChainAverager::ChainAverager(const Dataset &data, const FieldLayout &layout,
                             std::size_t expected)
    : data_(&data), layout_(&layout) {
  etas_.reserve(expected);
}

void ChainAverager::add(const LatentState &sample) {
  accumulate_sample(sample, *data_, *layout_, psi2_, psi3_, psi4_);
  etas_.push_back(sample.eta);
  ++count_;
}

SufficientStats ChainAverager::average() const {
  if (count_ == 0) {
    throw std::logic_error("ChainAverager::average with no samples");
  }
  const Eigen::Index r = layout_->basis.size();
  Eigen::MatrixXd h(r, Eigen::Index(count_));
  for (std::size_t t = 0; t < count_; ++t) {
    h.col(Eigen::Index(t)) = etas_[t];
  }
  const double inv = 1.0 / double(count_);
  SufficientStats s;
  s.psi1 = Eigen::MatrixXd::Zero(r, r);
  s.psi1.selfadjointView<Eigen::Lower>().rankUpdate(h, inv);
  s.psi1 = s.psi1.selfadjointView<Eigen::Lower>();
  s.psi2 = psi2_ * inv;
  s.psi3 = psi3_ * inv;
  s.psi4 = psi4_ * inv;
  s.mu_eta = h.rowwise().sum() * inv;
  return s;
}

SufficientStats exact_conditional_stats(const PosteriorModel &model) {
  const Dataset &data = model.data();
  const FieldLayout &layout = model.layout();
  const Eigen::MatrixX2d u = Eigen::MatrixX2d::Zero(Eigen::Index(data.size()), 2);
  const EtaConditional cond = model.eta_conditional(u);

  SufficientStats s;
  s.mu_eta = cond.mu;
  s.psi1 = cond.gamma + cond.mu * cond.mu.transpose();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Location &x = data.reported()[k];
    const Eigen::Vector2d t = trend_features(x, layout.base_station).as_vector();
    const BasisEntries e = layout.basis.entries(x);
    const double s_mu = e.dot(cond.mu);
    // E[(s' eta)^2] = s' (Gamma + mu mu') s
    double second = 0.0;
    for (std::size_t a = 0; a < e.size; ++a) {
      for (std::size_t b = 0; b < e.size; ++b) {
        second += e.value[a] * e.value[b] * s.psi1(e.index[a], e.index[b]);
      }
    }
    const double yk = data.y()[k];
    s.psi2.noalias() += t * t.transpose();
    s.psi3 += t * (yk - s_mu);
    s.psi4 += second - 2.0 * yk * s_mu;
  }
  return s;
}

SufficientStats saem_update_stats(const SufficientStats &prev,
                                  const SufficientStats &chain_average,
                                  double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("SAEM step size must lie in [0, 1]");
  }
  SufficientStats s;
  const double keep = 1.0 - gamma;
  s.psi1 = keep * prev.psi1 + gamma * chain_average.psi1;
  s.psi2 = keep * prev.psi2 + gamma * chain_average.psi2;
  s.psi3 = keep * prev.psi3 + gamma * chain_average.psi3;
  s.psi4 = keep * prev.psi4 + gamma * chain_average.psi4;
  s.mu_eta = keep * prev.mu_eta + gamma * chain_average.mu_eta;
  if (gamma != 0.0) {
    symmetrize_psd(s.psi1);
    s.psi2 = 0.5 * (s.psi2 + s.psi2.transpose()).eval();
  }
  return s;
}

AlphaSigma update_alpha_sigma(const SufficientStats &stats,
                              const Eigen::VectorXd &y) {
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(stats.psi2);
  if (!lu.isInvertible() ||
      std::abs(stats.psi2.determinant()) <=
          1e-12 * stats.psi2.squaredNorm()) {
    throw std::runtime_error(
        "trend Gram matrix psi2 is singular (collinear trend features, e.g. "
        "all measurements at one distance)");
  }
  AlphaSigma out;
  out.alpha = lu.solve(stats.psi3);
  const double n = double(y.size());
  const double ss = y.squaredNorm() +
                    out.alpha.dot(stats.psi2 * out.alpha) -
                    2.0 * stats.psi3.dot(out.alpha) + stats.psi4;
  out.sigma_eps2 = std::max(ss / n, kParamFloor);
  return out;
}

double update_beta(const Eigen::MatrixXd &psi1,
                   const Eigen::MatrixXd &k_tilde_inv) {
  const double inner = psi1.cwiseProduct(k_tilde_inv).sum();
  if (!(inner > 0.0)) {
    throw std::runtime_error("<psi1, Kt^-1> is not positive (psi1 not PSD)");
  }
  return std::max(double(psi1.rows()) / inner, kParamFloor);
}

double q_phi(const Eigen::MatrixXd &psi1, double beta, double phi,
             const Eigen::MatrixXd &distances) {
  Eigen::MatrixXd kt = exponential_correlation(distances, phi);
  kt.diagonal().array() += kKernelJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(kt);
  if (llt.info() != Eigen::Success) {
    return -std::numeric_limits<double>::infinity();
  }
  const double r = double(kt.rows());
  const double logdet_k =
      2.0 * llt.matrixLLT().diagonal().array().log().sum() - r * std::log(beta);
  // <psi1, K^-1> = beta tr(L^-1 psi1 L^-T)
  Eigen::MatrixXd w = llt.matrixL().solve(psi1);
  w = llt.matrixL().solve(w.transpose()).eval();
  return -0.5 * logdet_k - 0.5 * beta * w.trace();
}

double phi_gradient(const Eigen::MatrixXd &psi1, double beta, double phi,
                    const Eigen::MatrixXd &k_tilde,
                    const Eigen::MatrixXd &k_tilde_inv,
                    const Eigen::MatrixXd &distances) {
  const Eigen::MatrixXd a = k_tilde_inv * distances.cwiseProduct(k_tilde);
  const Eigen::MatrixXd b = beta * (k_tilde_inv * psi1);
  const double tr = b.cwiseProduct(a.transpose()).sum() - a.trace();
  return 0.5 * tr / (phi * phi);
}

PhiUpdate update_phi(const Eigen::MatrixXd &psi1, double beta_new,
                     double phi_prev, const Eigen::MatrixXd &distances,
                     std::optional<double> forced_scale) {
  PhiUpdate out;
  out.phi = phi_prev;

  Eigen::MatrixXd kt = exponential_correlation(distances, phi_prev);
  Eigen::MatrixXd jittered = kt;
  jittered.diagonal().array() += kKernelJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(jittered);
  if (llt.info() != Eigen::Success) {
    return out;
  }
  const Eigen::MatrixXd kt_inv =
      llt.solve(Eigen::MatrixXd::Identity(kt.rows(), kt.cols()));
  out.gradient = phi_gradient(psi1, beta_new, phi_prev, kt, kt_inv, distances);
  if (out.gradient == 0.0 || !std::isfinite(out.gradient)) {
    return out;
  }

  const double h = 1e-4 * phi_prev;
  const double q0 = q_phi(psi1, beta_new, phi_prev, distances);
  const double qp = q_phi(psi1, beta_new, phi_prev + h, distances);
  const double qm = q_phi(psi1, beta_new, phi_prev - h, distances);
  out.hessian = (qp - 2.0 * q0 + qm) / (h * h);
  if (out.hessian < 0.0 && std::isfinite(out.hessian)) {
    out.newton = true;
    out.step = -out.gradient / out.hessian;
  } else {
    out.step = std::copysign(0.1 * phi_prev, out.gradient);
  }

  if (forced_scale) {
    const double candidate = phi_prev + *forced_scale * out.step;
    if (*forced_scale > 0.0 && candidate > kParamFloor &&
        q_phi(psi1, beta_new, candidate, distances) >= q0) {
      out.phi = candidate;
      out.scale = *forced_scale;
    }
    return out;
  }
  double a = 1.0;
  for (int i = 0; i <= 20; ++i, a *= 0.5) {
    const double candidate = phi_prev + a * out.step;
    if (candidate <= kParamFloor) {
      continue;
    }
    if (q_phi(psi1, beta_new, candidate, distances) >= q0) {
      out.phi = candidate;
      out.scale = a;
      break;
    }
  }
  return out;
}

double em_q_value(const ModelParams &theta, const SufficientStats &stats,
                  const Eigen::VectorXd &y, const KernelMatrices &kernel) {
  const double s2 = theta.sigma_eps2;
  const double n = double(y.size());
  const Eigen::Vector2d alpha = theta.alpha();
  const double phi1 = -0.5 * n * std::log(s2) - 0.5 * kernel.logdet_k -
                      y.squaredNorm() / (2.0 * s2);
  return phi1 - 0.5 * stats.psi1.cwiseProduct(kernel.k_inv).sum() -
         alpha.dot(stats.psi2 * alpha) / (2.0 * s2) +
         stats.psi3.dot(alpha) / s2 - stats.psi4 / (2.0 * s2);
}

double complete_log_likelihood(const ModelParams &theta,
                               const LatentState &sample, const Dataset &data,
                               const FieldLayout &layout,
                               const KernelMatrices &kernel) {
  const double s2 = theta.sigma_eps2;
  const Eigen::Vector2d alpha = theta.alpha();
  double rss = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Location x =
        data.reported()[k] - sample.u.row(Eigen::Index(k)).transpose();
    const double m =
        trend_features(x, layout.base_station).as_vector().dot(alpha) +
        layout.basis.entries(x).dot(sample.eta);
    rss += (data.y()[k] - m) * (data.y()[k] - m);
  }
  return -0.5 * double(data.size()) * std::log(s2) - 0.5 * kernel.logdet_k -
         0.5 * sample.eta.dot(kernel.k_inv * sample.eta) - rss / (2.0 * s2);
}

void SaemConfig::validate() const {
  if (!(burn_in < max_iter)) {
    throw std::invalid_argument("SAEM needs burn_in < max_iter");
  }
  if (m_start < 1 || m_end < 1) {
    throw std::invalid_argument("SAEM chain lengths must be >= 1");
  }
  if (!(gamma_exponent > 0.5 && gamma_exponent <= 1.0)) {
    throw std::invalid_argument("SAEM gamma exponent must lie in (1/2, 1]");
  }
  if (!(sigma_q2 > 0.0)) {
    throw std::invalid_argument("proposal variance sigma_q2 must be positive");
  }
  if (moment_mc_samples < 1) {
    throw std::invalid_argument("moment sample count must be >= 1");
  }
}

double saem_step_size(std::size_t iteration, const SaemConfig &config) {
  if (iteration <= config.burn_in) {
    return 1.0;
  }
  return std::pow(double(iteration - config.burn_in), -config.gamma_exponent);
}

std::size_t saem_chain_length(std::size_t iteration, const SaemConfig &config) {
  if (iteration <= config.burn_in) {
    return config.m_start;
  }
  const std::size_t span = config.max_iter - config.burn_in;
  if (span <= 1) {
    return config.m_start;
  }
  const double frac = double(iteration - config.burn_in - 1) / double(span - 1);
  const double m = double(config.m_start) +
                   (double(config.m_end) - double(config.m_start)) *
                       std::min(frac, 1.0);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(m)));
}

ModelParams initial_params(const Dataset &data, const FieldLayout &layout) {
  const auto n = Eigen::Index(data.size());
  if (n < 3) {
    throw std::invalid_argument("calibration needs at least 3 measurements");
  }
  Eigen::MatrixXd t(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    t.row(k) = trend_features(data.reported()[std::size_t(k)],
                              layout.base_station)
                   .as_vector()
                   .transpose();
  }
  const Eigen::VectorXd y = data.y_vector();
  const Eigen::Matrix2d gram = t.transpose() * t;
  if (std::abs(gram.determinant()) <= 1e-12 * gram.squaredNorm()) {
    throw std::runtime_error("trend features are collinear; cannot fit the "
                             "path-loss trend");
  }
  const Eigen::Vector2d alpha = gram.ldlt().solve(t.transpose() * y);
  const Eigen::VectorXd resid = y - t * alpha;
  const double var =
      std::max(resid.squaredNorm() / double(std::max<Eigen::Index>(n - 2, 1)),
               kParamFloor);
  ModelParams p;
  p.set_alpha(alpha);
  p.sigma_eps2 = 0.5 * var;
  p.beta = 2.0 / var;
  p.phi = layout.basis.tau();
  p.clamp_to_floor();
  return p;
}

namespace {

double max_relative_change(const ModelParams &a, const ModelParams &b) {
  const double va[5] = {a.p0, a.kappa, a.sigma_eps2, a.beta, a.phi};
  const double vb[5] = {b.p0, b.kappa, b.sigma_eps2, b.beta, b.phi};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double scale = std::max(std::abs(vb[i]), 1e-12);
    worst = std::max(worst, std::abs(va[i] - vb[i]) / scale);
  }
  return worst;
}

} // namespace

CalibrationResult calibrate(const Dataset &data, const FieldLayout &layout,
                            const LocationNoiseModel &noise,
                            const SaemConfig &config,
                            std::optional<ModelParams> start) {
  config.validate();
  if (data.size() < 3) {
    throw std::invalid_argument("calibration needs at least 3 measurements");
  }
  const Eigen::Index r = layout.basis.size();
  const Eigen::VectorXd y = data.y_vector();
  const Eigen::MatrixXd distances = layout.basis.center_distances();
  const std::uint64_t chain_seed = derive_seed({config.seed, kChainStream});

  CalibrationResult result;
  result.theta = start ? *start : initial_params(data, layout);
  result.theta.validate();
  result.chain_stats = ChainStats(data.size());
  KernelMatrices kernel =
      kernel_matrices(layout.basis, result.theta.beta, result.theta.phi);
  SufficientStats stats = SufficientStats::zeros(r);
  LatentState state = LatentState::zeros(data.size(), r);
  std::vector<ModelParams> history;

  for (std::size_t ell = 1; ell <= config.max_iter; ++ell) {
    const double gamma = saem_step_size(ell, config);
    const std::size_t m = saem_chain_length(ell, config);
    const ModelParams theta = result.theta;
    const PosteriorModel model(data, layout, noise, theta, kernel);

    SufficientStats average;
    double accept_rate = 0.0;
    if (noise.is_dirac()) {
      average = exact_conditional_stats(model);
    } else {
      ChainAverager averager(data, layout, m);
      ChainResult chain =
          run_chain(state, model, m, config.sigma_q2, chain_seed, ell,
                    [&](const LatentState &s) { averager.add(s); });
      state = std::move(chain.last);
      accept_rate = chain.stats.acceptance_rate();
      result.chain_stats.merge(chain.stats);
      average = averager.average();
    }
    stats = saem_update_stats(stats, average, gamma);

    const double q_before = em_q_value(theta, stats, y, kernel);
    ModelParams next = theta;
    const AlphaSigma as = update_alpha_sigma(stats, y);
    next.set_alpha(as.alpha);
    next.sigma_eps2 = as.sigma_eps2;
    next.beta = update_beta(stats.psi1, kernel.k_tilde_inv);
    next.phi = update_phi(stats.psi1, next.beta, theta.phi, distances).phi;
    next.clamp_to_floor();

    kernel = kernel_matrices(layout.basis, next.beta, next.phi);
    const double q_after = em_q_value(next, stats, y, kernel);

    SaemTraceRow row;
    row.iteration = ell;
    row.theta = next;
    row.q_value = q_after;
    row.q_before = q_before;
    row.accept_rate = accept_rate;
    row.gamma = gamma;
    row.chain_length = noise.is_dirac() ? 0 : m;
    row.ascent_ok = q_after >= q_before - kAscentTolerance *
                                              std::max(1.0, std::abs(q_before));
    result.trace.push_back(row);
    if (!row.ascent_ok) {
      throw std::runtime_error("SAEM iteration " + std::to_string(ell) +
                               ": M-step decreased the surrogate Q");
    }
    result.theta = next;
    history.push_back(next);

    if (ell > config.burn_in && config.stop_window > 0 &&
        ell - config.burn_in > config.stop_window) {
      const ModelParams &past = history[history.size() - 1 - config.stop_window];
      if (max_relative_change(next, past) < config.stop_tolerance) {
        result.stopped_early = true;
        break;
      }
    }
  }

  if (noise.is_dirac()) {
    const PosteriorModel model(data, layout, noise, result.theta, kernel);
    result.mu_eta = exact_conditional_stats(model).mu_eta;
  } else {
    result.mu_eta = stats.mu_eta;
  }
  return result;
}

void write_trace_csv(std::ostream &out, const SaemTrace &trace) {
  out << "iter,p0,kappa,sigma_eps2,beta,phi,q_value,accept_rate\n";
  for (const auto &row : trace) {
    out << row.iteration << ',' << format_double(row.theta.p0) << ','
        << format_double(row.theta.kappa) << ','
        << format_double(row.theta.sigma_eps2) << ','
        << format_double(row.theta.beta) << ',' << format_double(row.theta.phi)
        << ',' << format_double(row.q_value) << ','
        << format_double(row.accept_rate) << '\n';
  }
}

} // namespace locfrk

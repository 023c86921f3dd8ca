#include "locfrk/sampler.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "locfrk/parallel.hpp"

namespace locfrk {

namespace {
constexpr std::uint64_t kLocationTag = 0x10c;
constexpr std::uint64_t kEtaTag = 0xe7a;
} // namespace

LatentState LatentState::zeros(std::size_t n, Eigen::Index r) {
  return {Eigen::MatrixX2d::Zero(Eigen::Index(n), 2),
          Eigen::VectorXd::Zero(r)};
}

void ChainStats::merge(const ChainStats &other) {
  if (accepted.empty()) {
    accepted.assign(other.accepted.size(), 0);
    proposed.assign(other.proposed.size(), 0);
  }
  if (other.accepted.size() != accepted.size()) {
    throw std::invalid_argument("ChainStats::merge: size mismatch");
  }
  for (std::size_t k = 0; k < accepted.size(); ++k) {
    accepted[k] += other.accepted[k];
    proposed[k] += other.proposed[k];
  }
  sweeps += other.sweeps;
}

std::size_t ChainStats::total_accepted() const {
  return std::accumulate(accepted.begin(), accepted.end(), std::size_t{0});
}

std::size_t ChainStats::total_proposed() const {
  return std::accumulate(proposed.begin(), proposed.end(), std::size_t{0});
}

double ChainStats::acceptance_rate() const {
  const std::size_t p = total_proposed();
  return p == 0 ? 0.0 : double(total_accepted()) / double(p);
}

PosteriorModel::PosteriorModel(const Dataset &data, const FieldLayout &layout,
                               LocationNoiseModel noise,
                               const ModelParams &theta)
    : PosteriorModel(data, layout, noise, theta,
                     kernel_matrices(layout.basis, theta.beta, theta.phi)) {}

PosteriorModel::PosteriorModel(const Dataset &data, const FieldLayout &layout,
                               LocationNoiseModel noise,
                               const ModelParams &theta, KernelMatrices kernel)
    : data_(&data), layout_(&layout), noise_(noise), theta_(theta),
      kernel_(std::move(kernel)) {
  theta_.validate();
  if (kernel_.rank() != layout.basis.size()) {
    throw std::invalid_argument("kernel rank does not match the basis");
  }
}

double PosteriorModel::log_cond_location(std::size_t k,
                                         const Eigen::Vector2d &u,
                                         const Eigen::VectorXd &eta) const {
  const Location x = shifted(k, u);
  const double mean =
      trend_features(x, layout_->base_station).as_vector().dot(theta_.alpha()) +
      layout_->basis.entries(x).dot(eta);
  const double resid = data_->y()[k] - mean;
  return -0.5 * resid * resid / theta_.sigma_eps2 +
         noise_logdensity(noise_, u);
}

void PosteriorModel::eta_precision(const Eigen::MatrixX2d &u,
                                   Eigen::MatrixXd &precision,
                                   Eigen::VectorXd &linear) const {
  const double inv_s2 = 1.0 / theta_.sigma_eps2;
  const Eigen::Vector2d alpha = theta_.alpha();
  precision = kernel_.k_inv;
  linear = Eigen::VectorXd::Zero(rank());
  for (std::size_t k = 0; k < size(); ++k) {
    const Location x = shifted(k, u.row(Eigen::Index(k)).transpose());
    const BasisEntries e = layout_->basis.entries(x);
    const double resid =
        data_->y()[k] -
        trend_features(x, layout_->base_station).as_vector().dot(alpha);
    for (std::size_t a = 0; a < e.size; ++a) {
      const double va = e.value[a] * inv_s2;
      linear[e.index[a]] += va * resid;
      for (std::size_t b = 0; b < e.size; ++b) {
        precision(e.index[a], e.index[b]) += va * e.value[b];
      }
    }
  }
}

EtaConditional PosteriorModel::eta_conditional(const Eigen::MatrixX2d &u) const {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;
  eta_precision(u, precision, linear);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("eta conditional precision is not SPD");
  }
  EtaConditional out;
  out.mu = llt.solve(linear);
  out.gamma = llt.solve(Eigen::MatrixXd::Identity(rank(), rank()));
  out.gamma = 0.5 * (out.gamma + out.gamma.transpose()).eval();
  return out;
}

Eigen::VectorXd PosteriorModel::draw_eta(const Eigen::MatrixX2d &u,
                                         Rng &rng) const {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;
  eta_precision(u, precision, linear);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("eta conditional precision is not SPD");
  }
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(rank());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = normal(rng);
  }
  // precision = L L', so mu + L'^-1 z has covariance precision^-1.
  return llt.solve(linear) + llt.matrixU().solve(z);
}

double acceptance_probability(double log_current, double log_proposed) {
  return std::exp(std::min(0.0, log_proposed - log_current));
}

ChainStats gibbs_sweep(LatentState &state, const PosteriorModel &model,
                       double sigma_q2, const SweepKey &key) {
  if (!(sigma_q2 >= 0.0)) {
    throw std::invalid_argument("proposal variance must be nonnegative");
  }
  const std::size_t n = model.size();
  ChainStats stats(n);
  stats.sweeps = 1;
  if (model.noise().is_dirac()) {
    state.u.setZero();
  } else {
    const double step = std::sqrt(sigma_q2);
    const Eigen::VectorXd &eta = state.eta;
    parallel_for(n, [&](std::size_t k) {
      Rng rng{key.seed, kLocationTag, key.iteration, key.sweep, k};
      std::normal_distribution<double> normal;
      const Eigen::Vector2d current = state.u.row(Eigen::Index(k)).transpose();
      const double dx = normal(rng);
      const double dy = normal(rng);
      const Eigen::Vector2d candidate = current + step * Eigen::Vector2d(dx, dy);
      const double rho =
          acceptance_probability(model.log_cond_location(k, current, eta),
                                 model.log_cond_location(k, candidate, eta));
      stats.proposed[k] = 1;
      if (rng.uniform() < rho) {
        state.u.row(Eigen::Index(k)) = candidate.transpose();
        stats.accepted[k] = 1;
      }
    });
  }
  Rng eta_rng{key.seed, kEtaTag, key.iteration, key.sweep};
  state.eta = model.draw_eta(state.u, eta_rng);
  return stats;
}

ChainResult run_chain(const LatentState &init, const PosteriorModel &model,
                      std::size_t sweeps, double sigma_q2, std::uint64_t seed,
                      std::uint64_t iteration, const SampleVisitor &visit) {
  if (sweeps < 1) {
    throw std::invalid_argument("a chain needs at least one sweep");
  }
  ChainResult out{init, ChainStats(model.size())};
  for (std::size_t t = 0; t < sweeps; ++t) {
    out.stats.merge(gibbs_sweep(out.last, model, sigma_q2, {seed, iteration, t}));
    if (visit) {
      visit(out.last);
    }
  }
  return out;
}

std::vector<LatentState> run_chain(const LatentState &init,
                                   const PosteriorModel &model,
                                   std::size_t sweeps, double sigma_q2,
                                   std::uint64_t seed, ChainStats *stats) {
  std::vector<LatentState> samples;
  samples.reserve(sweeps);
  ChainResult res = run_chain(init, model, sweeps, sigma_q2, seed, 0,
                              [&](const LatentState &s) { samples.push_back(s); });
  if (stats) {
    *stats = std::move(res.stats);
  }
  return samples;
}

} // namespace locfrk

// Toy posterior shared by the sampler tests and the acceptance suite.
#ifndef LOCFRK_TEST_TOY_CHAIN_HPP
#define LOCFRK_TEST_TOY_CHAIN_HPP

#include <array>
#include <cmath>
#include <vector>

#include "locfrk/sampler.hpp"
#include "oracles.hpp"

namespace oracle {

struct ToySetup {
  locfrk::Dataset data;
  locfrk::FieldLayout layout;
  locfrk::LocationNoiseModel noise;
  locfrk::ModelParams theta;
};

inline ToySetup toy_setup(const Toy &toy) {
  return {locfrk::Dataset({toy.y1, toy.y2}, {toy.x1, toy.x2}),
          {locfrk::BasisSet(toy.center, 1, 1, toy.tau), toy.bs},
          {toy.sigma_g},
          toy.theta};
}

/// Chain means with batch-means standard errors.
struct ChainMoments {
  ToyMoments mean;
  ToyMoments se;
  double acceptance = 0.0;
};

inline ChainMoments toy_chain(const ToySetup &s, std::size_t burn_in,
                              std::size_t sweeps, double sigma_q2,
                              std::uint64_t seed) {
  const locfrk::PosteriorModel model(s.data, s.layout, s.noise, s.theta);
  locfrk::ChainStats stats;
  const auto warm = locfrk::run_chain(locfrk::LatentState::zeros(2, 1), model,
                                      burn_in, sigma_q2, seed, 0, nullptr);
  constexpr std::size_t kBatches = 100;
  const std::size_t per_batch = sweeps / kBatches;
  std::vector<std::array<double, 5>> batches(kBatches, {0, 0, 0, 0, 0});
  std::size_t t = 0;
  const auto run = locfrk::run_chain(
      warm.last, model, per_batch * kBatches, sigma_q2, seed, 1,
      [&](const locfrk::LatentState &st) {
        auto &b = batches[t++ / per_batch];
        b[0] += st.eta[0];
        b[1] += st.u(0, 0);
        b[2] += st.u(0, 1);
        b[3] += st.u(1, 0);
        b[4] += st.u(1, 1);
      });
  std::array<double, 5> mean{}, var{};
  for (auto &b : batches) {
    for (int j = 0; j < 5; ++j) {
      b[j] /= double(per_batch);
      mean[j] += b[j] / kBatches;
    }
  }
  for (const auto &b : batches) {
    for (int j = 0; j < 5; ++j) {
      var[j] += (b[j] - mean[j]) * (b[j] - mean[j]) / (kBatches - 1);
    }
  }
  ChainMoments out;
  const auto fill = [](ToyMoments &m, const std::array<double, 5> &v) {
    m.eta = v[0];
    m.u1 = {v[1], v[2]};
    m.u2 = {v[3], v[4]};
  };
  std::array<double, 5> se{};
  for (int j = 0; j < 5; ++j) {
    se[j] = std::sqrt(var[j] / kBatches);
  }
  fill(out.mean, mean);
  fill(out.se, se);
  out.acceptance = run.stats.acceptance_rate();
  return out;
}

} // namespace oracle

#endif

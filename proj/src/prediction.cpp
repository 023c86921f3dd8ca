#include "locfrk/prediction.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "locfrk/parallel.hpp"

namespace locfrk {

PredictionContext build_context(const Dataset &data, const ModelParams &theta,
                                const FieldLayout &layout,
                                const LocationNoiseModel &noise,
                                const Eigen::VectorXd &mu_eta,
                                std::size_t mc_samples, std::uint64_t seed) {
  theta.validate();
  if (data.empty()) {
    throw std::invalid_argument("prediction context needs observations");
  }
  if (mu_eta.size() != 0 && mu_eta.size() != layout.basis.size()) {
    throw std::invalid_argument("mu_eta length does not match the basis rank");
  }
  PredictionContext ctx{theta,
                        kernel_matrices(layout.basis, theta.beta, theta.phi),
                        {},
                        {},
                        {},
                        mu_eta,
                        {},
                        layout};
  ctx.moments = estimate_smeared_moments(data.reported(), layout, ctx.kernel,
                                         noise, mc_samples, seed);
  ctx.sigma_factors =
      assemble_sigma_factors(ctx.moments, ctx.kernel, theta.sigma_eps2);
  const Eigen::VectorXd resid =
      data.y_vector() - ctx.moments.t_bar * theta.alpha();
  ctx.weights = sigma_solve(ctx.sigma_factors, resid);
  ctx.blup_field = ctx.kernel.k * (ctx.moments.s_bar * ctx.weights);
  return ctx;
}

double predict_blup(const Location &x0, const PredictionContext &ctx) {
  return trend_features(x0, ctx.layout.base_station)
             .as_vector()
             .dot(ctx.theta.alpha()) +
         ctx.layout.basis.entries(x0).dot(ctx.blup_field);
}

double predict_cep(const Location &x0, const PredictionContext &ctx) {
  if (ctx.mu_eta.size() != ctx.layout.basis.size()) {
    throw std::invalid_argument("CEP needs the posterior mean of eta");
  }
  return trend_features(x0, ctx.layout.base_station)
             .as_vector()
             .dot(ctx.theta.alpha()) +
         ctx.layout.basis.entries(x0).dot(ctx.mu_eta);
}

GridSpec parse_grid_spec(const std::string &text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(field, &used));
      if (used != field.size()) {
        throw std::invalid_argument(field);
      }
    } catch (const std::exception &) {
      throw std::invalid_argument("grid spec: bad number '" + field + "'");
    }
  }
  if (v.size() != 5) {
    throw std::invalid_argument("grid spec must be x0,y0,x1,y1,step");
  }
  if (!(v[4] > 0.0) || !std::isfinite(v[4])) {
    throw std::invalid_argument("grid spacing must be positive");
  }
  return {BoundingBox{{v[0], v[1]}, {v[2], v[3]}}, v[4]};
}

GridPrediction predict_grid(const GridSpec &grid, const PredictionContext &ctx,
                            PredictorKind kind) {
  if (!(grid.spacing > 0.0)) {
    throw std::invalid_argument("grid spacing must be positive");
  }
  const auto count = [&](double extent) {
    return static_cast<std::size_t>(std::floor(extent / grid.spacing + 1e-9)) +
           1;
  };
  const std::size_t nx = count(grid.box.width());
  const std::size_t ny = count(grid.box.height());
  GridPrediction out;
  out.kind = kind;
  out.cells.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      out.cells.push_back({grid.box.min.x + double(i) * grid.spacing,
                           grid.box.min.y + double(j) * grid.spacing});
    }
  }
  const bool blup = kind != PredictorKind::Cep;
  const bool cep = kind != PredictorKind::Blup;
  if (cep && ctx.mu_eta.size() != ctx.layout.basis.size()) {
    throw std::invalid_argument("CEP needs the posterior mean of eta");
  }
  if (blup) {
    out.blup.resize(out.cells.size());
  }
  if (cep) {
    out.cep.resize(out.cells.size());
  }
  parallel_for(out.cells.size(), [&](std::size_t c) {
    if (blup) {
      out.blup[c] = predict_blup(out.cells[c], ctx);
    }
    if (cep) {
      out.cep[c] = predict_cep(out.cells[c], ctx);
    }
  });
  return out;
}

void write_grid_csv(std::ostream &out, const GridPrediction &grid) {
  const bool blup = grid.kind != PredictorKind::Cep;
  const bool cep = grid.kind != PredictorKind::Blup;
  out << "x,y";
  if (blup) {
    out << ",blup_dbm";
  }
  if (cep) {
    out << ",cep_dbm";
  }
  out << '\n';
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    out << format_double(grid.cells[c].x) << ','
        << format_double(grid.cells[c].y);
    if (blup) {
      out << ',' << format_double(grid.blup[c]);
    }
    if (cep) {
      out << ',' << format_double(grid.cep[c]);
    }
    out << '\n';
  }
}

} // namespace locfrk

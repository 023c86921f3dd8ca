#ifndef LOCFRK_PREDICTION_HPP
#define LOCFRK_PREDICTION_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "locfrk/geometry.hpp"
#include "locfrk/model.hpp"
#include "locfrk/moments.hpp"
#include "locfrk/scenario.hpp"

namespace locfrk {

/*
 * Everything the two predictors need, computed once per calibrated model:
 * smeared moments, the Sigma factorization and weights = Sigma^-1 (y - T_bar
 * alpha). blup_field caches K S_bar weights so each BLUP is O(9).
 */
struct PredictionContext {
  ModelParams theta;
  KernelMatrices kernel;
  SmearedMoments moments;
  SigmaFactors sigma_factors;
  Eigen::VectorXd weights;
  Eigen::VectorXd mu_eta;
  Eigen::VectorXd blup_field;
  FieldLayout layout;
};

PredictionContext build_context(const Dataset &data, const ModelParams &theta,
                                const FieldLayout &layout,
                                const LocationNoiseModel &noise,
                                const Eigen::VectorXd &mu_eta,
                                std::size_t mc_samples, std::uint64_t seed);

/// t(x0)' alpha + s(x0)' K S_bar weights.
double predict_blup(const Location &x0, const PredictionContext &ctx);

/// t(x0)' alpha + s(x0)' mu_eta. Throws if mu_eta is missing.
double predict_cep(const Location &x0, const PredictionContext &ctx);

enum class PredictorKind { Blup, Cep, Both };

struct GridSpec {
  BoundingBox box;
  double spacing = 0.0;
};

/// Parses "x0,y0,x1,y1,step".
GridSpec parse_grid_spec(const std::string &text);

struct GridPrediction {
  std::vector<Location> cells;
  std::vector<double> blup;
  std::vector<double> cep;
  PredictorKind kind = PredictorKind::Blup;
};

/// Cells min + (i, j) * spacing inside the box, rows of constant y from the
/// bottom, x increasing within a row.
GridPrediction predict_grid(const GridSpec &grid, const PredictionContext &ctx,
                            PredictorKind kind);

/// Header x,y,blup_dbm[,cep_dbm]; cep-only output uses x,y,cep_dbm.
void write_grid_csv(std::ostream &out, const GridPrediction &grid);

} // namespace locfrk

#endif

#ifndef LOCFRK_HARNESS_HPP
#define LOCFRK_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "locfrk/config.hpp"
#include "locfrk/scenario.hpp"

namespace locfrk {

/// Root mean square difference. Throws on empty or unequal inputs.
double rmse(const std::vector<double> &predictions,
            const std::vector<double> &actuals);

/*
 * frk-exact   classical FRK (sigma_g = 0) on the true locations
 * frk-ignore  classical FRK on the reported locations taken as exact
 * blup, cep   full pipeline with the configured sigma_g
 */
enum class Method { FrkExact, FrkIgnore, Blup, Cep };

inline const std::vector<Method> kAllMethods{Method::FrkExact,
                                             Method::FrkIgnore, Method::Blup,
                                             Method::Cep};

std::string method_name(Method m);
Method parse_method(const std::string &name);
std::vector<Method> parse_methods(const std::string &list);

struct ReportRow {
  std::string sweep_var;
  Method method = Method::FrkExact;
  std::size_t fold = 0;
  double rmse_db = 0.0;
};

struct CellSummary {
  std::string sweep_var;
  Method method = Method::FrkExact;
  double mean = 0.0;
  double std = 0.0;
  std::size_t folds = 0;
};

struct RingRmse {
  double inner = 0.0;
  double outer = 0.0; // infinity for the last ring
  std::size_t count = 0;
  std::optional<double> rmse_db;
};

struct ZoneRow {
  std::string sweep_var;
  Method method = Method::FrkExact;
  std::size_t fold = 0;
  RingRmse ring;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<ZoneRow> zones;

  /// Mean and sample std over folds per (sweep_var, method), in first-seen
  /// order.
  std::vector<CellSummary> summarize() const;
  /// Throws if the cell is absent.
  CellSummary cell(const std::string &sweep_var, Method m) const;
  void append(const ExperimentReport &other);
};

/*
 * Per fold: calibrate on the learning split and predict at the test rows'
 * true locations. frk-exact and frk-ignore run the Dirac pipeline; blup and
 * cep share one calibration. Seeds hang off (config seed, cell, fold), the
 * split off the config seed alone.
 */
ExperimentReport evaluate_methods(const Dataset &data,
                                  const std::vector<Method> &methods,
                                  const RunConfig &config,
                                  const std::string &sweep_var = "base",
                                  std::uint64_t cell = 0);

/// Regenerates the scenario at each sigma_g and evaluates all four methods.
ExperimentReport sweep_sigma_g(const RunConfig &config,
                               const std::vector<double> &sigma_list);

/// Evaluates frk-exact, blup and cep for each basis spacing at the config's
/// sigma_g. Cells are labelled tau=<tau>|r=<rank>.
ExperimentReport sweep_tau(const RunConfig &config,
                           const std::vector<double> &tau_list);

/// Per-ring RMSE by distance to the base station of the dataset's reported
/// locations; rings are [0, e1), [e1, e2), ..., [e_last, inf).
std::vector<RingRmse> zone_breakdown(const Dataset &test,
                                     const std::vector<double> &predictions,
                                     const Location &base_station,
                                     const std::vector<double> &ring_edges);

/// Header sweep_var,method,fold,rmse_db; per-fold rows then mean and std
/// rows per cell with fold = mean | std.
void write_report_csv(std::ostream &out, const ExperimentReport &report);

/// Header sweep_var,method,fold,ring_min,ring_max,count,rmse_db; empty
/// rmse_db for an empty ring.
void write_zone_csv(std::ostream &out, const ExperimentReport &report);

} // namespace locfrk

#endif

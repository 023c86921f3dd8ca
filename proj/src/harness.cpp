#include "locfrk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "locfrk/calibration.hpp"
#include "locfrk/prediction.hpp"
#include "locfrk/random.hpp"

namespace locfrk {

namespace {

constexpr std::uint64_t kSplitTag = 0x5b1;
constexpr std::uint64_t kCalibrationTag = 0xca1;
constexpr std::uint64_t kMomentTag = 0x303;

void check_disjoint(const Split &split, std::size_t n) {
  std::vector<char> seen(n, 0);
  for (std::size_t r : split.learning_rows) {
    seen[r] = 1;
  }
  for (std::size_t r : split.test_rows) {
    if (seen[r]) {
      throw std::logic_error("fold mixes learning and test row " +
                             std::to_string(r));
    }
  }
}

std::vector<double> predict_rows(const PredictionContext &ctx,
                                 const std::vector<Location> &at, bool cep) {
  std::vector<double> out(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    out[i] = cep ? predict_cep(at[i], ctx) : predict_blup(at[i], ctx);
  }
  return out;
}

} // namespace

double rmse(const std::vector<double> &predictions,
            const std::vector<double> &actuals) {
  if (predictions.size() != actuals.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("rmse: empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - actuals[i];
    acc += d * d;
  }
  return std::sqrt(acc / double(predictions.size()));
}

std::string method_name(Method m) {
  switch (m) {
  case Method::FrkExact:
    return "frk-exact";
  case Method::FrkIgnore:
    return "frk-ignore";
  case Method::Blup:
    return "blup";
  case Method::Cep:
    return "cep";
  }
  throw std::invalid_argument("unknown method");
}

Method parse_method(const std::string &name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) {
      return m;
    }
  }
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected frk-exact, frk-ignore, blup, cep)");
}

std::vector<Method> parse_methods(const std::string &list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) {
      out.push_back(m);
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("no methods given");
  }
  return out;
}

std::vector<CellSummary> ExperimentReport::summarize() const {
  std::vector<CellSummary> cells;
  std::vector<std::vector<double>> values;
  for (const ReportRow &row : rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto &c) {
      return c.sweep_var == row.sweep_var && c.method == row.method;
    });
    if (it == cells.end()) {
      cells.push_back({row.sweep_var, row.method, 0.0, 0.0, 0});
      values.emplace_back();
      it = cells.end() - 1;
    }
    values[std::size_t(it - cells.begin())].push_back(row.rmse_db);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto &v = values[c];
    double mean = 0.0;
    for (double x : v) {
      mean += x;
    }
    mean /= double(v.size());
    double ss = 0.0;
    for (double x : v) {
      ss += (x - mean) * (x - mean);
    }
    cells[c].mean = mean;
    cells[c].std = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
    cells[c].folds = v.size();
  }
  return cells;
}

CellSummary ExperimentReport::cell(const std::string &sweep_var,
                                   Method m) const {
  for (const CellSummary &c : summarize()) {
    if (c.sweep_var == sweep_var && c.method == m) {
      return c;
    }
  }
  throw std::out_of_range("report has no cell " + sweep_var + "/" +
                          method_name(m));
}

void ExperimentReport::append(const ExperimentReport &other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  zones.insert(zones.end(), other.zones.begin(), other.zones.end());
}

ExperimentReport evaluate_methods(const Dataset &data,
                                  const std::vector<Method> &methods,
                                  const RunConfig &config,
                                  const std::string &sweep_var,
                                  std::uint64_t cell) {
  config.validate();
  if (data.size() < config.folds) {
    throw std::invalid_argument("fewer rows than folds");
  }
  const bool need_exact =
      std::find(methods.begin(), methods.end(), Method::FrkExact) !=
      methods.end();
  if (need_exact && !data.has_truth()) {
    throw std::invalid_argument("frk-exact needs true locations in the data");
  }
  const FieldLayout layout = config.layout();
  const LocationNoiseModel dirac{0.0};
  const std::uint64_t split_seed = derive_seed({config.seed, kSplitTag});

  ExperimentReport report;
  for (std::size_t fold = 0; fold < config.folds; ++fold) {
    const Split split = split_kfold(data, config.folds, fold, split_seed);
    check_disjoint(split, data.size());
    SaemConfig saem = config.saem;
    saem.seed = derive_seed({config.seed, kCalibrationTag, cell, fold});
    const std::uint64_t moment_seed =
        derive_seed({config.seed, kMomentTag, cell, fold});
    const std::vector<Location> &at = split.test.reported();

    std::optional<PredictionContext> noisy;
    for (Method m : methods) {
      std::vector<double> pred;
      try {
        if (m == Method::FrkExact || m == Method::FrkIgnore) {
          const Dataset learn = m == Method::FrkExact
                                    ? split.learning.with_true_locations()
                                    : split.learning;
          const CalibrationResult cal = calibrate(learn, layout, dirac, saem);
          const PredictionContext ctx =
              build_context(learn, cal.theta, layout, dirac, cal.mu_eta,
                            config.mc_samples, moment_seed);
          pred = predict_rows(ctx, at, false);
        } else {
          if (!noisy) {
            const LocationNoiseModel noise = config.noise();
            const CalibrationResult cal =
                calibrate(split.learning, layout, noise, saem);
            noisy = build_context(split.learning, cal.theta, layout, noise,
                                  cal.mu_eta, config.mc_samples, moment_seed);
          }
          pred = predict_rows(*noisy, at, m == Method::Cep);
        }
      } catch (const std::exception &e) {
        throw std::runtime_error("cell " + sweep_var + ", method " +
                                 method_name(m) + ", fold " +
                                 std::to_string(fold) + ": " + e.what());
      }
      report.rows.push_back({sweep_var, m, fold, rmse(pred, split.test.y())});
      for (const RingRmse &ring : zone_breakdown(split.test, pred,
                                                 config.scenario.base_station,
                                                 config.rings)) {
        report.zones.push_back({sweep_var, m, fold, ring});
      }
    }
  }
  return report;
}

ExperimentReport sweep_sigma_g(const RunConfig &config,
                               const std::vector<double> &sigma_list) {
  if (sigma_list.empty()) {
    throw std::invalid_argument("sigma_g sweep needs at least one value");
  }
  ExperimentReport report;
  for (std::size_t i = 0; i < sigma_list.size(); ++i) {
    RunConfig cfg = config;
    cfg.scenario.sigma_g = sigma_list[i];
    const Dataset data = generate_dataset(cfg.scenario);
    report.append(evaluate_methods(data, kAllMethods, cfg,
                                   "sigma_g=" + format_double(sigma_list[i]),
                                   i));
  }
  return report;
}

ExperimentReport sweep_tau(const RunConfig &config,
                           const std::vector<double> &tau_list) {
  if (tau_list.empty()) {
    throw std::invalid_argument("tau sweep needs at least one value");
  }
  const Dataset data = generate_dataset(config.scenario);
  const std::vector<Method> methods{Method::FrkExact, Method::Blup,
                                    Method::Cep};
  ExperimentReport report;
  for (std::size_t i = 0; i < tau_list.size(); ++i) {
    RunConfig cfg = config;
    cfg.tau = tau_list[i];
    const Eigen::Index r = cfg.layout().basis.size();
    const std::string label = "tau=" + format_double(tau_list[i]) +
                              "|r=" + std::to_string(r);
    report.append(evaluate_methods(data, methods, cfg, label, i));
  }
  return report;
}

std::vector<RingRmse> zone_breakdown(const Dataset &test,
                                     const std::vector<double> &predictions,
                                     const Location &base_station,
                                     const std::vector<double> &ring_edges) {
  if (predictions.size() != test.size()) {
    throw std::invalid_argument("zone_breakdown: length mismatch");
  }
  for (std::size_t i = 0; i < ring_edges.size(); ++i) {
    if (!(ring_edges[i] > 0.0) ||
        (i > 0 && !(ring_edges[i] > ring_edges[i - 1]))) {
      throw std::invalid_argument("ring edges must be positive and increasing");
    }
  }
  std::vector<RingRmse> rings(ring_edges.size() + 1);
  std::vector<std::vector<double>> p(rings.size()), a(rings.size());
  for (std::size_t z = 0; z < rings.size(); ++z) {
    rings[z].inner = z == 0 ? 0.0 : ring_edges[z - 1];
    rings[z].outer = z < ring_edges.size()
                         ? ring_edges[z]
                         : std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double d = distance(test.reported()[i], base_station);
    const auto z = std::size_t(
        std::upper_bound(ring_edges.begin(), ring_edges.end(), d) -
        ring_edges.begin());
    p[z].push_back(predictions[i]);
    a[z].push_back(test.y()[i]);
  }
  for (std::size_t z = 0; z < rings.size(); ++z) {
    rings[z].count = p[z].size();
    if (!p[z].empty()) {
      rings[z].rmse_db = rmse(p[z], a[z]);
    }
  }
  return rings;
}

void write_report_csv(std::ostream &out, const ExperimentReport &report) {
  out << "sweep_var,method,fold,rmse_db\n";
  for (const ReportRow &row : report.rows) {
    out << row.sweep_var << ',' << method_name(row.method) << ',' << row.fold
        << ',' << format_double(row.rmse_db) << '\n';
  }
  for (const CellSummary &c : report.summarize()) {
    out << c.sweep_var << ',' << method_name(c.method) << ",mean,"
        << format_double(c.mean) << '\n';
    out << c.sweep_var << ',' << method_name(c.method) << ",std,"
        << format_double(c.std) << '\n';
  }
}

void write_zone_csv(std::ostream &out, const ExperimentReport &report) {
  out << "sweep_var,method,fold,ring_min,ring_max,count,rmse_db\n";
  for (const ZoneRow &z : report.zones) {
    out << z.sweep_var << ',' << method_name(z.method) << ',' << z.fold << ','
        << format_double(z.ring.inner) << ','
        << (std::isinf(z.ring.outer) ? std::string("inf")
                                     : format_double(z.ring.outer))
        << ',' << z.ring.count << ','
        << (z.ring.rmse_db ? format_double(*z.ring.rmse_db) : std::string())
        << '\n';
  }
}

} // namespace locfrk

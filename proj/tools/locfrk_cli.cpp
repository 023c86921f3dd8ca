// locfrk command-line front end.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "locfrk/calibration.hpp"
#include "locfrk/config.hpp"
#include "locfrk/harness.hpp"
#include "locfrk/model.hpp"
#include "locfrk/prediction.hpp"
#include "locfrk/random.hpp"
#include "locfrk/scenario.hpp"

namespace {

using namespace locfrk;

constexpr std::uint64_t kPredictMomentTag = 0x9e1;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    std::stringstream text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        throw std::runtime_error("cannot open config file " + config_path);
      }
      text << in.rdbuf() << '\n';
    }
    for (const auto &o : overrides) {
      text << o << '\n';
    }
    RunConfig config = read_run_config(text);
    if (seed) {
      config.set_seed(*seed);
    }
    return config;
  }
};

void add_common(CLI::App *cmd, Common &common, bool config_required) {
  auto *opt = cmd->add_option("--config", common.config_path,
                              "run configuration (key = value file)");
  if (config_required) {
    opt->required();
  }
  cmd->add_option("--set", common.overrides,
                  "override a configuration entry, e.g. --set sigma_g=30");
  cmd->add_option("--seed", common.seed, "override the configuration seed");
}

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  return out;
}

void finish(std::ofstream &out, const std::string &path) {
  out.flush();
  if (!out) {
    throw std::runtime_error("error writing " + path);
  }
}

/// One-line diagnostic on stderr.
int fail(std::string msg, int code) {
  for (char &c : msg) {
    if (c == '\n' || c == '\r') {
      c = ' ';
    }
  }
  std::cerr << "locfrk: " << msg << '\n';
  return code == 0 ? 1 : code;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Fixed rank kriging under location uncertainty"};
  app.require_subcommand(1);

  Common common;
  std::string data_path, out_path, trace_path, params_path, grid_text,
      method_text = "blup", methods_text = "frk-exact,frk-ignore,blup,cep",
      variable, values_text, zones_path;

  auto *generate = app.add_subcommand("generate", "simulate a dataset");
  add_common(generate, common, true);
  generate->add_option("--out", out_path, "dataset CSV")->required();

  auto *calibrate_cmd =
      app.add_subcommand("calibrate", "estimate model parameters with SAEM");
  add_common(calibrate_cmd, common, true);
  calibrate_cmd->add_option("--data", data_path, "dataset CSV")->required();
  calibrate_cmd->add_option("--out", out_path, "parameter file")->required();
  calibrate_cmd->add_option("--trace", trace_path, "SAEM trace CSV");

  auto *predict = app.add_subcommand("predict", "predict on a grid");
  add_common(predict, common, false);
  predict->add_option("--params", params_path, "parameter file")->required();
  predict->add_option("--data", data_path, "dataset CSV")->required();
  predict->add_option("--grid", grid_text, "x0,y0,x1,y1,step")->required();
  predict->add_option("--method", method_text, "blup, cep or both")
      ->check(CLI::IsMember({"blup", "cep", "both"}));
  predict->add_option("--out", out_path, "grid CSV")->required();

  auto *evaluate = app.add_subcommand("evaluate", "k-fold RMSE per method");
  add_common(evaluate, common, true);
  evaluate->add_option("--data", data_path, "dataset CSV")->required();
  evaluate->add_option("--methods", methods_text,
                       "comma-separated subset of frk-exact,frk-ignore,blup,cep");
  evaluate->add_option("--out", out_path, "report CSV")->required();
  evaluate->add_option("--zones", zones_path, "per-ring RMSE CSV");

  auto *sweep = app.add_subcommand("sweep", "RMSE across sigma_g or tau");
  add_common(sweep, common, true);
  sweep->add_option("--variable", variable, "sigma_g or tau")
      ->required()
      ->check(CLI::IsMember({"sigma_g", "tau"}));
  sweep->add_option("--values", values_text, "v1,v2,...")->required();
  sweep->add_option("--out", out_path, "report CSV")->required();
  sweep->add_option("--zones", zones_path, "per-ring RMSE CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    return fail(e.what(), e.get_exit_code());
  }

  try {
    const RunConfig config = common.load();

    if (generate->parsed()) {
      const Dataset data = generate_dataset(config.scenario);
      auto out = open_out(out_path);
      write_dataset_csv(out, data);
      finish(out, out_path);
    } else if (calibrate_cmd->parsed()) {
      const Dataset data = load_dataset_csv(data_path);
      const CalibrationResult result =
          calibrate(data, config.layout(), config.noise(), config.saem);
      ParamFile file;
      file.params = result.theta;
      file.mu_eta = result.mu_eta;
      file.header = {"locfrk calibration",
                     "n = " + std::to_string(data.size()) +
                         ", tau = " + format_double(config.tau) +
                         ", sigma_g = " + format_double(config.scenario.sigma_g),
                     "iterations = " + std::to_string(result.trace.size()) +
                         ", acceptance = " +
                         format_double(result.chain_stats.acceptance_rate())};
      auto out = open_out(out_path);
      write_param_file(out, file);
      finish(out, out_path);
      if (!trace_path.empty()) {
        auto trace = open_out(trace_path);
        write_trace_csv(trace, result.trace);
        finish(trace, trace_path);
      }
    } else if (predict->parsed()) {
      const ParamFile params = load_param_file(params_path);
      const Dataset data = load_dataset_csv(data_path);
      const PredictorKind kind = method_text == "cep"    ? PredictorKind::Cep
                                 : method_text == "both" ? PredictorKind::Both
                                                         : PredictorKind::Blup;
      if (kind != PredictorKind::Blup && !params.mu_eta) {
        throw std::runtime_error("parameter file has no mu_eta; cannot run cep");
      }
      const PredictionContext ctx = build_context(
          data, params.params, config.layout(), config.noise(),
          params.mu_eta.value_or(Eigen::VectorXd()), config.mc_samples,
          derive_seed({config.seed, kPredictMomentTag}));
      const GridPrediction grid =
          predict_grid(parse_grid_spec(grid_text), ctx, kind);
      auto out = open_out(out_path);
      write_grid_csv(out, grid);
      finish(out, out_path);
    } else {
      ExperimentReport report;
      if (evaluate->parsed()) {
        report = evaluate_methods(load_dataset_csv(data_path),
                                  parse_methods(methods_text), config);
      } else if (variable == "sigma_g") {
        report = sweep_sigma_g(config, parse_double_list(values_text));
      } else {
        report = sweep_tau(config, parse_double_list(values_text));
      }
      auto out = open_out(out_path);
      write_report_csv(out, report);
      finish(out, out_path);
      if (!zones_path.empty()) {
        auto zones = open_out(zones_path);
        write_zone_csv(zones, report);
        finish(zones, zones_path);
      }
    }
  } catch (const std::exception &e) {
    return fail(e.what(), 1);
  }
  return 0;
}

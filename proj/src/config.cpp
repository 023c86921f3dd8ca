#include "locfrk/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace locfrk {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string &key, const std::string &text) {
  double v = 0.0;
  const char *end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" +
                                text + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string &key, const std::string &text) {
  std::uint64_t v = 0;
  const char *end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config: '" + key +
                                "' expects a nonnegative integer, got '" + text +
                                "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string &key, const std::string &text,
                               std::size_t expected) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    v.push_back(parse_double(key, trim(item)));
  }
  if (expected != 0 && v.size() != expected) {
    throw std::invalid_argument("config: '" + key + "' expects " +
                                std::to_string(expected) + " values");
  }
  return v;
}

using Setter = std::function<void(RunConfig &, const std::string &,
                                  const std::string &)>;

const std::map<std::string, Setter> &setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["area"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto a = parse_list(k, v, 4);
      c.scenario.area = BoundingBox{{a[0], a[1]}, {a[2], a[3]}};
    };
    t["bs"] = [](RunConfig &c, const std::string &k, const std::string &v) {
      const auto a = parse_list(k, v, 2);
      c.scenario.base_station = {a[0], a[1]};
    };
    t["truth_p0"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.truth.p0 = parse_double(k, v);
    };
    t["truth_kappa"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.truth.kappa = parse_double(k, v);
    };
    t["truth_sigma_eps2"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.truth.sigma_eps2 = parse_double(k, v);
    };
    t["truth_beta"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.truth.beta = parse_double(k, v);
    };
    t["truth_phi"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.truth.phi = parse_double(k, v);
    };
    t["tau_truth"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.tau_truth = parse_double(k, v);
    };
    t["n"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.n = parse_count(k, v);
    };
    t["sigma_g"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.sigma_g = parse_double(k, v);
    };
    t["sampling"] = [](RunConfig &c, auto &k, auto &v) {
      if (v == "uniform") {
        c.scenario.sampling = Sampling::UniformRandom;
      } else if (v == "grid") {
        c.scenario.sampling = Sampling::Grid;
      } else {
        throw std::invalid_argument("config: '" + k +
                                    "' must be uniform or grid");
      }
    };
    t["grid_step"] = [](RunConfig &c, auto &k, auto &v) {
      c.scenario.grid_step = parse_double(k, v);
    };
    t["tau"] = [](RunConfig &c, auto &k, auto &v) { c.tau = parse_double(k, v); };
    t["mc_samples"] = [](RunConfig &c, auto &k, auto &v) {
      c.mc_samples = parse_count(k, v);
      c.saem.moment_mc_samples = c.mc_samples;
    };
    t["sigma_q2"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.sigma_q2 = parse_double(k, v);
    };
    t["burn_in"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.burn_in = parse_count(k, v);
    };
    t["max_iter"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.max_iter = parse_count(k, v);
    };
    t["gamma_exponent"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.gamma_exponent = parse_double(k, v);
    };
    t["m_start"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.m_start = parse_count(k, v);
    };
    t["m_end"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.m_end = parse_count(k, v);
    };
    t["stop_window"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.stop_window = parse_count(k, v);
    };
    t["stop_tolerance"] = [](RunConfig &c, auto &k, auto &v) {
      c.saem.stop_tolerance = parse_double(k, v);
    };
    t["folds"] = [](RunConfig &c, auto &k, auto &v) {
      c.folds = parse_count(k, v);
    };
    t["rings"] = [](RunConfig &c, auto &k, auto &v) {
      c.rings = parse_list(k, v, 0);
    };
    t["seed"] = [](RunConfig &c, auto &k, auto &v) {
      c.set_seed(parse_count(k, v));
    };
    return t;
  }();
  return table;
}

std::string join(const std::vector<double> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += (i ? "," : "") + format_double(v[i]);
  }
  return s;
}

} // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  scenario.seed = s;
  saem.seed = s;
}

void RunConfig::validate() const {
  scenario.truth.validate();
  if (scenario.n < 1) {
    throw std::invalid_argument("config: n must be >= 1");
  }
  if (!(scenario.sigma_g >= 0.0)) {
    throw std::invalid_argument("config: sigma_g must be >= 0");
  }
  if (!(tau > 0.0) || !(scenario.tau_truth > 0.0)) {
    throw std::invalid_argument("config: tau and tau_truth must be positive");
  }
  if (!(scenario.grid_step > 0.0)) {
    throw std::invalid_argument("config: grid_step must be positive");
  }
  if (mc_samples < 1) {
    throw std::invalid_argument("config: mc_samples must be >= 1");
  }
  if (folds < 2) {
    throw std::invalid_argument("config: folds must be >= 2");
  }
  if (rings.empty()) {
    throw std::invalid_argument("config: rings must not be empty");
  }
  for (std::size_t i = 0; i < rings.size(); ++i) {
    if (!(rings[i] > 0.0) || (i > 0 && !(rings[i] > rings[i - 1]))) {
      throw std::invalid_argument(
          "config: rings must be positive and increasing");
    }
  }
  saem.validate();
}

FieldLayout RunConfig::layout_for(double basis_tau) const {
  return {build_basis_grid(scenario.area, basis_tau), scenario.base_station};
}

RunConfig read_run_config(std::istream &in) {
  RunConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
    try {
      it->second(config, key, value);
    } catch (const std::invalid_argument &e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path);
  }
  return read_run_config(in);
}

void write_run_config(std::ostream &out, const RunConfig &c) {
  const auto &s = c.scenario;
  out << "area = "
      << join({s.area.min.x, s.area.min.y, s.area.max.x, s.area.max.y}) << '\n'
      << "bs = " << join({s.base_station.x, s.base_station.y}) << '\n'
      << "truth_p0 = " << format_double(s.truth.p0) << '\n'
      << "truth_kappa = " << format_double(s.truth.kappa) << '\n'
      << "truth_sigma_eps2 = " << format_double(s.truth.sigma_eps2) << '\n'
      << "truth_beta = " << format_double(s.truth.beta) << '\n'
      << "truth_phi = " << format_double(s.truth.phi) << '\n'
      << "tau_truth = " << format_double(s.tau_truth) << '\n'
      << "n = " << s.n << '\n'
      << "sigma_g = " << format_double(s.sigma_g) << '\n'
      << "sampling = "
      << (s.sampling == Sampling::Grid ? "grid" : "uniform") << '\n'
      << "grid_step = " << format_double(s.grid_step) << '\n'
      << "tau = " << format_double(c.tau) << '\n'
      << "mc_samples = " << c.mc_samples << '\n'
      << "sigma_q2 = " << format_double(c.saem.sigma_q2) << '\n'
      << "burn_in = " << c.saem.burn_in << '\n'
      << "max_iter = " << c.saem.max_iter << '\n'
      << "gamma_exponent = " << format_double(c.saem.gamma_exponent) << '\n'
      << "m_start = " << c.saem.m_start << '\n'
      << "m_end = " << c.saem.m_end << '\n'
      << "stop_window = " << c.saem.stop_window << '\n'
      << "stop_tolerance = " << format_double(c.saem.stop_tolerance) << '\n'
      << "folds = " << c.folds << '\n'
      << "rings = " << join(c.rings) << '\n'
      << "seed = " << c.seed << '\n';
}

std::vector<double> parse_double_list(const std::string &text) {
  auto v = parse_list("list", text, 0);
  if (v.empty()) {
    throw std::invalid_argument("empty list of values");
  }
  return v;
}

} // namespace locfrk

#include "locfrk/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace locfrk {

void ModelParams::validate() const {
  if (!(std::isfinite(p0) && std::isfinite(kappa))) {
    throw std::invalid_argument("trend coefficients must be finite");
  }
  if (!(sigma_eps2 > 0.0) || !std::isfinite(sigma_eps2)) {
    throw std::invalid_argument("sigma_eps2 must be positive");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("beta must be positive");
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw std::invalid_argument("phi must be positive");
  }
}

void ModelParams::clamp_to_floor() {
  sigma_eps2 = std::max(sigma_eps2, kParamFloor);
  beta = std::max(beta, kParamFloor);
  phi = std::max(phi, kParamFloor);
}

Eigen::MatrixXd exponential_correlation(const Eigen::MatrixXd &distances,
                                        double phi) {
  Eigen::MatrixXd out = (-distances.array() / phi).exp().matrix();
  out.triangularView<Eigen::StrictlyLower>() = out.transpose().eval();
  return out;
}

KernelMatrices kernel_matrices(const BasisSet &basis, double beta,
                               double phi) {
  if (!(beta > 0.0) || !(phi > 0.0)) {
    throw std::invalid_argument("kernel needs beta > 0 and phi > 0");
  }
  KernelMatrices km;
  km.beta = beta;
  km.phi = phi;
  km.k_tilde = exponential_correlation(basis.center_distances(), phi);
  const Eigen::Index r = km.k_tilde.rows();

  Eigen::MatrixXd jittered = km.k_tilde;
  jittered.diagonal().array() += kKernelJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(jittered);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "exponential correlation is not positive definite (degenerate basis "
        "layout?)");
  }
  km.k_tilde_inv = llt.solve(Eigen::MatrixXd::Identity(r, r));
  km.k_tilde_inv = 0.5 * (km.k_tilde_inv + km.k_tilde_inv.transpose()).eval();
  const double logdet_tilde =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();

  km.k = jittered / beta;
  km.k_inv = beta * km.k_tilde_inv;
  km.logdet_k = logdet_tilde - static_cast<double>(r) * std::log(beta);
  return km;
}

double noise_logdensity(const LocationNoiseModel &noise,
                        const Eigen::Vector2d &u) {
  if (noise.is_dirac()) {
    throw std::domain_error(
        "Dirac location noise has no density; use the exact-location path");
  }
  const double s2 = noise.sigma_g * noise.sigma_g;
  return -std::log(2.0 * std::numbers::pi * s2) - 0.5 * u.squaredNorm() / s2;
}

std::vector<Eigen::Vector2d> sample_location_noise(
    const LocationNoiseModel &noise, std::size_t count, Rng &rng) {
  std::vector<Eigen::Vector2d> out(count, Eigen::Vector2d::Zero());
  if (noise.is_dirac()) {
    return out;
  }
  std::normal_distribution<double> normal(0.0, noise.sigma_g);
  for (auto &u : out) {
    u.x() = normal(rng);
    u.y() = normal(rng);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string &text, const std::string &what) {
  double v = 0.0;
  const char *first = text.data();
  const char *last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::runtime_error("invalid number for " + what + ": '" + text +
                             "'");
  }
  return v;
}

} // namespace

void write_param_file(std::ostream &out, const ParamFile &file) {
  for (const auto &h : file.header) {
    out << "# " << h << '\n';
  }
  const ModelParams &p = file.params;
  out << "p0 = " << format_double(p.p0) << '\n';
  out << "kappa = " << format_double(p.kappa) << '\n';
  out << "sigma_eps2 = " << format_double(p.sigma_eps2) << '\n';
  out << "beta = " << format_double(p.beta) << '\n';
  out << "phi = " << format_double(p.phi) << '\n';
  if (file.mu_eta) {
    out << "mu_eta = ";
    for (Eigen::Index i = 0; i < file.mu_eta->size(); ++i) {
      out << (i ? "," : "") << format_double((*file.mu_eta)[i]);
    }
    out << '\n';
  }
}

ParamFile read_param_file(std::istream &in) {
  ParamFile file;
  std::string line;
  bool seen[5] = {false, false, false, false, false};
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) {
      continue;
    }
    if (t[0] == '#') {
      file.header.push_back(trim(t.substr(1)));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("parameter file line " +
                               std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "mu_eta") {
      std::vector<double> vals;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        vals.push_back(parse_double(trim(item), "mu_eta"));
      }
      file.mu_eta = Eigen::Map<Eigen::VectorXd>(vals.data(),
                                                Eigen::Index(vals.size()));
      continue;
    }
    static const char *keys[5] = {"p0", "kappa", "sigma_eps2", "beta", "phi"};
    double *slots[5] = {&file.params.p0, &file.params.kappa,
                        &file.params.sigma_eps2, &file.params.beta,
                        &file.params.phi};
    bool known = false;
    for (int i = 0; i < 5; ++i) {
      if (key == keys[i]) {
        *slots[i] = parse_double(value, key);
        seen[i] = known = true;
      }
    }
    if (!known) {
      throw std::runtime_error("parameter file line " +
                               std::to_string(lineno) + ": unknown key '" +
                               key + "'");
    }
  }
  for (int i = 0; i < 5; ++i) {
    if (!seen[i]) {
      throw std::runtime_error("parameter file is missing a required key");
    }
  }
  file.params.validate();
  return file;
}

void save_param_file(const std::string &path, const ParamFile &file) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  write_param_file(out, file);
}

ParamFile load_param_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open parameter file '" + path + "'");
  }
  return read_param_file(in);
}

} // namespace locfrk

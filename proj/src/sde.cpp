#include "sos/sde.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sos/error.hpp"

namespace sos {

using nlohmann::json;

std::string to_string(SdeFamily family) {
  switch (family) {
    case SdeFamily::VE:
      return "ve";
    case SdeFamily::VP:
      return "vp";
    case SdeFamily::SubVP:
      return "subvp";
  }
  return "?";
}

SdeFamily sde_family_from_string(const std::string& name) {
  if (name == "ve" || name == "VE") return SdeFamily::VE;
  if (name == "vp" || name == "VP") return SdeFamily::VP;
  if (name == "subvp" || name == "sub-vp" || name == "SubVP" || name == "Sub-VP") return SdeFamily::SubVP;
  throw ConfigError("unknown SDE family '" + name + "'");
}

void SdeConfig::validate() const {
  if (!(beta_min > 0.0 && beta_min < beta_max)) throw ConfigError("need 0 < beta_min < beta_max");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) throw ConfigError("need 0 < sigma_min < sigma_max");
  if (!(t_min > 0.0 && t_min < t_max)) throw ConfigError("need 0 < t_min < t_max");
}

double SdeConfig::beta(double t) const { return beta_min + t * (beta_max - beta_min); }

double SdeConfig::beta_integral(double t) const { return beta_min * t + 0.5 * (beta_max - beta_min) * t * t; }

double SdeConfig::sigma(double t) const { return sigma_min * std::pow(sigma_max / sigma_min, t); }

json SdeConfig::to_json() const {
  return json{{"family", to_string(family)}, {"beta_min", beta_min},   {"beta_max", beta_max},
              {"sigma_min", sigma_min},      {"sigma_max", sigma_max}, {"t_min", t_min}};
}

SdeConfig SdeConfig::from_json(const json& j) {
  SdeConfig c;
  try {
    c.family = sde_family_from_string(j.at("family").get<std::string>());
    c.beta_min = j.value("beta_min", c.beta_min);
    c.beta_max = j.value("beta_max", c.beta_max);
    c.sigma_min = j.value("sigma_min", c.sigma_min);
    c.sigma_max = j.value("sigma_max", c.sigma_max);
    c.t_min = j.value("t_min", c.t_min);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sde config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

void check_time(const SdeConfig& cfg, double t) {
  // Grid endpoints are computed in floating point; allow a hair of slack.
  constexpr double slack = 1e-12;
  if (!(t >= cfg.t_min - slack && t <= cfg.t_max + slack)) throw TimeOutOfRangeError(t);
}

}  // namespace

double drift_coeff(const SdeConfig& cfg, double t) {
  check_time(cfg, t);
  return cfg.family == SdeFamily::VE ? 0.0 : -0.5 * cfg.beta(t);
}

double diffusion(const SdeConfig& cfg, double t) {
  check_time(cfg, t);
  switch (cfg.family) {
    case SdeFamily::VE:
      return cfg.sigma(t) * std::sqrt(2.0 * std::log(cfg.sigma_max / cfg.sigma_min));
    case SdeFamily::VP:
      return std::sqrt(cfg.beta(t));
    case SdeFamily::SubVP:
      return std::sqrt(cfg.beta(t) * -std::expm1(-2.0 * cfg.beta_integral(t)));
  }
  return 0.0;
}

DriftDiffusion drift_diffusion(const SdeConfig& cfg, const Vector& x, double t) {
  return DriftDiffusion{drift_coeff(cfg, t) * x, diffusion(cfg, t)};
}

KernelParams perturbation_kernel(const SdeConfig& cfg, double t) {
  check_time(cfg, t);
  switch (cfg.family) {
    case SdeFamily::VE: {
      const double s = cfg.sigma(t);
      return {1.0, std::sqrt(std::max(0.0, s * s - cfg.sigma_min * cfg.sigma_min))};
    }
    case SdeFamily::VP: {
      const double b = cfg.beta_integral(t);
      return {std::exp(-0.5 * b), std::sqrt(-std::expm1(-b))};
    }
    case SdeFamily::SubVP: {
      const double b = cfg.beta_integral(t);
      return {std::exp(-0.5 * b), -std::expm1(-b)};
    }
  }
  return {};
}

Vector analytic_conditional_score(const SdeConfig& cfg, const Vector& x_t, const Vector& x0, double t) {
  if (x_t.size() != x0.size()) throw DimensionMismatchError("x_t and x0 differ in length");
  const KernelParams k = perturbation_kernel(cfg, t);
  const double var = k.std * k.std;
  if (!(var > 0.0) || !std::isfinite(1.0 / var)) throw DegenerateTimeError(t);
  return -(x_t - k.mean_coeff * x0) / var;
}

double prior_std(const SdeConfig& cfg) { return cfg.family == SdeFamily::VE ? cfg.sigma_max : 1.0; }

Matrix sample_prior(const SdeConfig& cfg, Eigen::Index dim, Eigen::Index n, Rng& rng) {
  if (dim < 1 || n < 0) throw DimensionMismatchError("sample_prior needs dim >= 1 and n >= 0");
  return prior_std(cfg) * rng.normal_matrix(n, dim);
}

}  // namespace sos

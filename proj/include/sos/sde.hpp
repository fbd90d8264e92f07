#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "sos/rng.hpp"
#include "sos/types.hpp"

namespace sos {

enum class SdeFamily { VE, VP, SubVP };

std::string to_string(SdeFamily family);
SdeFamily sde_family_from_string(const std::string& name);

/// Forward SDE on t in [t_min, t_max]. beta(t) is linear between
/// (beta_min, beta_max); sigma(t) is geometric between (sigma_min, sigma_max).
struct SdeConfig {
  SdeFamily family = SdeFamily::VP;
  double beta_min = 0.1;
  double beta_max = 20.0;
  double sigma_min = 0.01;
  double sigma_max = 10.0;
  double t_min = 1e-5;
  double t_max = 1.0;

  /// Throws ConfigError on a violated invariant.
  void validate() const;

  double beta(double t) const;
  /// Integral of beta over [0, t].
  double beta_integral(double t) const;
  double sigma(double t) const;

  nlohmann::json to_json() const;
  static SdeConfig from_json(const nlohmann::json& j);

  bool operator==(const SdeConfig&) const = default;
};

/// p(x_t | x_0) = N(mean_coeff * x_0, std^2 I).
struct KernelParams {
  double mean_coeff = 1.0;
  double std = 0.0;
};

struct DriftDiffusion {
  Vector drift;
  double diffusion = 0.0;
};

/// f(x, t) and g(t). Throws TimeOutOfRangeError outside [t_min, t_max].
DriftDiffusion drift_diffusion(const SdeConfig& cfg, const Vector& x, double t);
/// g(t) alone; f is always -(1/2) beta(t) x or zero, see drift_coeff.
double diffusion(const SdeConfig& cfg, double t);
/// f(x, t) = drift_coeff(t) * x.
double drift_coeff(const SdeConfig& cfg, double t);

KernelParams perturbation_kernel(const SdeConfig& cfg, double t);

/// grad_{x_t} log p(x_t | x0) = -(x_t - mean_coeff x0) / std^2.
Vector analytic_conditional_score(const SdeConfig& cfg, const Vector& x_t, const Vector& x0, double t);

/// Prior of the reverse process: N(0, sigma_max^2) for VE, N(0, 1) otherwise.
Matrix sample_prior(const SdeConfig& cfg, Eigen::Index dim, Eigen::Index n, Rng& rng);
double prior_std(const SdeConfig& cfg);

}  // namespace sos

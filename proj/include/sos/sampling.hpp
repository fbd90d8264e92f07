#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "sos/rng.hpp"
#include "sos/scorenet.hpp"
#include "sos/sde.hpp"

namespace sos {

/// Batched score model: rows of `x` share the time `t`.
using ScoreFn = std::function<Matrix(const Matrix& x, double t)>;

ScoreFn network_score(const NetSpec& spec, const Params& params);

/// Exact marginal score of the forward SDE started from data N(mean, std^2 I).
ScoreFn gaussian_score(const SdeConfig& cfg, double data_mean, double data_std);

enum class Predictor { EulerMaruyama, AncestralSampling, ReverseDiffusion, ProbabilityFlow };
enum class Corrector { None, Langevin };

std::string to_string(Predictor p);
std::string to_string(Corrector c);
Predictor predictor_from_string(const std::string& s);
Corrector corrector_from_string(const std::string& s);

struct SamplerConfig {
  Predictor predictor = Predictor::EulerMaruyama;
  Corrector corrector = Corrector::None;
  double snr = 0.16;
  std::size_t steps = 50;
  std::size_t corrector_steps = 1;
  /// Start time of Option-1 (boundary) sampling.
  double t_end = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SamplerConfig from_json(const nlohmann::json& j);
};

/// x_T = mean_coeff(t_end) x0 + std(t_end) z for every row of x0.
Matrix forward_perturb(const SdeConfig& cfg, const Matrix& x0, double t_end, Rng& rng);

// Single-step update rules with the noise passed in explicitly.
Matrix euler_maruyama_update(const Matrix& x, const Matrix& f, double g, const Matrix& s, double dt, const Matrix& z);
Matrix probability_flow_update(const Matrix& x, const Matrix& f, double g, const Matrix& s, double dt);

/// One reverse-time step from t_cur down to t_next (t_cur > t_next).
/// Throws UnsupportedCombinationError for ancestral sampling on Sub-VP.
Matrix predictor_step(Predictor kind, const SdeConfig& cfg, const ScoreFn& score, const Matrix& x, double t_cur,
                      double t_next, Rng& rng);

struct CorrectorResult {
  Matrix x;
  std::size_t skipped_rows = 0;  // rows whose score was exactly zero
};

/// Langevin step at time t with step size 2 alpha (snr mean||z|| / mean||s||)^2,
/// norms averaged over the rows whose score is nonzero; zero-score rows are left as is.
/// `steps` is the solver's T, used for alpha = 1 - beta(t)/T on VP.
/// Throws UnsupportedCombinationError on Sub-VP.
CorrectorResult corrector_step(const SdeConfig& cfg, const ScoreFn& score, const Matrix& x, double t, double snr,
                               std::size_t steps, Rng& rng);

struct SolveResult {
  Matrix x;
  std::size_t predictor_steps = 0;
  std::size_t corrector_steps = 0;
  std::vector<double> times;  // grid visited, from 1 down to t_min
};

/// Uniform grid from t_start (default t_max) down to t_min in `sampler.steps`
/// predictor steps, each followed by the configured corrector steps.
SolveResult reverse_solve(const SdeConfig& cfg, const ScoreFn& score, const Matrix& x_T, const SamplerConfig& sampler,
                          Rng& rng, double t_start = -1.0);

}  // namespace sos

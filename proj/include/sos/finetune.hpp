#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "sos/rng.hpp"
#include "sos/scorenet.hpp"
#include "sos/sde.hpp"
#include "sos/training.hpp"

namespace sos {

struct FinetuneConfig {
  double xi_degrees = 80.0;
  double w = 0.95;
  /// A value < 1 is a time; an integer k >= 1 is the solver step k / T.
  double eps_t = 5e-4;
  std::size_t epochs = 1;
  double learning_rate = 2e-6;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static FinetuneConfig from_json(const nlohmann::json& j);
};

/// Maps eps_t to a time in [t_min, 1]; `steps` is the sampler's T.
double resolve_eps_t(double eps_t, std::size_t steps, const SdeConfig& sde);

/// Angle between two nonzero vectors in degrees, in [0, 180].
/// Throws ZeroVectorError if either is zero.
double angle_degrees(const Vector& g1, const Vector& g2);

struct ScoreAt {
  Vector x_t;
  Vector g;
};

/// Perturbs x to eps_t with one draw from `rng` and evaluates the network there.
ScoreAt score_at(const NetSpec& spec, const Params& params, const Vector& x, const SdeConfig& sde, double eps_t,
                 Rng& rng);

/// One Adam step on ||S(x_t, eps_t) - w g||^2 where g = S(x_t, eps_t) is taken
/// before the update and held fixed. Returns the loss at entry, (1-w)^2 ||g||^2.
double finetune_step(const NetSpec& spec, Params& params, AdamState& adam, const Vector& x_t, double eps_t, double w,
                     double lr);

/// One trained network per class, sharing the SDE.
struct ClassNet {
  std::size_t class_id = 0;
  NetSpec spec;
  Params params;
};

struct FinetuneReport {
  std::size_t evaluations = 0;  // (record, minor class) pairs compared
  std::size_t triggers = 0;     // pairs with angle < xi
  std::size_t skipped = 0;      // pairs with a zero score
  std::vector<std::size_t> triggers_per_class;  // indexed like `nets`
  double trigger_rate() const { return evaluations ? static_cast<double>(triggers) / evaluations : 0.0; }
};

/// Damps each minor network where its score is nearly parallel to the major
/// network's. Every record is used regardless of its class; the major network
/// is never modified. One shared noise draw per (record, epoch).
FinetuneReport finetune_all(std::vector<ClassNet>& nets, std::size_t major_index, const Matrix& records,
                            const SdeConfig& sde, const FinetuneConfig& cfg, std::size_t sampler_steps,
                            std::size_t threads = 1);

}  // namespace sos

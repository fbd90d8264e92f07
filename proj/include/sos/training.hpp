#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "sos/rng.hpp"
#include "sos/scorenet.hpp"
#include "sos/sde.hpp"

namespace sos {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  double learning_rate = 2e-3;
  AdamHyper adam;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Adam moments congruent to a parameter array.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One (t, z) draw per row: t ~ U(t_min, 1], z ~ N(0, I).
struct DsmDraws {
  Vector times;
  Matrix noise;
};

DsmDraws draw_dsm(const SdeConfig& cfg, Eigen::Index rows, Eigen::Index dim, Rng& rng);

/// Loss value plus everything `dsm_grad` needs.
struct DsmEval {
  double loss = 0.0;
  ForwardCache forward;
  Matrix residual;  // std(t) * S(x_t, t) + z, per row
  Vector stds;
  std::uint64_t fingerprint = 0;
};

/// Mean over rows of std(t)^2 * ||S(x_t, t) + z / std(t)||^2 = ||std(t) S(x_t, t) + z||^2,
/// with x_t = mean_coeff(t) x0 + std(t) z.
DsmEval dsm_loss(const NetSpec& spec, const Params& params, const SdeConfig& cfg, const Matrix& batch,
                 const DsmDraws& draws);
DsmEval dsm_loss(const NetSpec& spec, const Params& params, const SdeConfig& cfg, const Matrix& batch, Rng& rng);

/// Exact gradient of the loss in `eval`. Throws StaleCacheError if `params`
/// are not the ones the loss was computed with.
std::vector<double> dsm_grad(const NetSpec& spec, const Params& params, const DsmEval& eval);

/// Standard bias-corrected Adam update, in place.
void adam_step(Params& params, const std::vector<double>& grad, AdamState& state, double lr,
               const AdamHyper& hyper = {});

std::uint64_t fingerprint(const Params& params);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Params params;
  std::vector<EpochLog> log;
};

/// Minibatch DSM training with a seeded Fisher-Yates shuffle per epoch.
/// `init` overrides the seeded initialization when non-empty.
TrainResult train_class(const Matrix& class_rows, const NetSpec& spec, const SdeConfig& sde,
                        const TrainConfig& cfg, const Params& init = {});

void write_loss_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace sos

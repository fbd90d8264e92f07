#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sos/finetune.hpp"
#include "sos/sampling.hpp"
#include "sos/tabular.hpp"
#include "sos/training.hpp"

namespace sos {

/// One score network per class plus the shared encoder and SDE.
struct ModelSet {
  Encoder encoder;
  SdeConfig sde;
  std::vector<ClassNet> nets;  // nets[k].class_id == k
  std::size_t major = 0;
  bool finetuned = false;

  const ClassNet& net(std::size_t class_id) const;
  std::size_t num_classes() const { return nets.size(); }
};

struct TrainedModels {
  ModelSet models;
  std::vector<std::vector<EpochLog>> logs;  // per class
  double wall_seconds = 0.0;
};

/// Trains one network per class of `table`. Class k is seeded from
/// (cfg.seed, k), so results do not depend on `threads`.
TrainedModels train_models(const Table& table, const Encoder& encoder, NetSpec spec, const SdeConfig& sde,
                           const TrainConfig& cfg, std::size_t threads = 1);

/// Fine-tunes every minor network against the major one using all rows.
FinetuneReport finetune_models(ModelSet& models, const Table& table, const FinetuneConfig& cfg,
                               std::size_t sampler_steps, std::size_t threads = 1);

enum class OversampleOption { Boundary, Regular };
std::string to_string(OversampleOption o);
OversampleOption oversample_option_from_string(const std::string& s);

struct OversampleJob {
  OversampleOption option = OversampleOption::Regular;
  SamplerConfig sampler;
  std::size_t target_class = 0;
  std::size_t count = 0;
};

/// Starting points of the reverse process. Boundary: rows drawn uniformly with
/// replacement from all non-target classes, pushed forward to t_end.
/// Regular: prior draws. `seed_rows`, when given, receives the source row of
/// each Boundary start (left empty for Regular).
Matrix initial_state(const SdeConfig& sde, const Matrix& features, const std::vector<std::size_t>& labels,
                     const OversampleJob& job, Rng& rng, std::vector<std::size_t>* seed_rows = nullptr);

/// `count` encoded rows for the target class, generated by the reverse SDE
/// under `score`. The start state uses rng.derive(1), the solver rng.derive(2).
Matrix oversample_with(const SdeConfig& sde, const ScoreFn& score, const Matrix& features,
                       const std::vector<std::size_t>& labels, const OversampleJob& job, Rng& rng,
                       std::vector<std::size_t>* seed_rows = nullptr);

Matrix oversample_class(const ModelSet& models, const Matrix& features, const std::vector<std::size_t>& labels,
                        const OversampleJob& job, Rng& rng);

struct BalanceResult {
  Table table;
  std::vector<std::size_t> generated;  // per class id
  double wall_seconds = 0.0;
};

/// Appends fake rows to every minor class until all classes match the major.
BalanceResult balance(const Table& table, const ModelSet& models, OversampleOption option,
                      const SamplerConfig& sampler, std::size_t threads = 1);

struct SynthResult {
  Table table;
  std::vector<EpochLog> log;
  double train_seconds = 0.0;
  double generate_seconds = 0.0;
};

/// Trains one network on every row (no fine-tuning), samples |table| rows from
/// the prior, and labels each by its nearest class centroid in encoded space.
SynthResult synth_full(const Table& table, const Encoder& encoder, NetSpec spec, const SdeConfig& sde,
                       const TrainConfig& cfg, const SamplerConfig& sampler);

}  // namespace sos

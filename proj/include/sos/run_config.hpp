#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>

#include "sos/eval.hpp"
#include "sos/finetune.hpp"
#include "sos/pipeline.hpp"
#include "sos/sampling.hpp"
#include "sos/scorenet.hpp"
#include "sos/sde.hpp"
#include "sos/training.hpp"

namespace sos {

/// Everything one CLI run needs. Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
  std::filesystem::path schema;
  std::filesystem::path train_csv;
  std::optional<std::filesystem::path> test_csv;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  SdeConfig sde;
  NetSpec net;
  TrainConfig train;
  std::optional<FinetuneConfig> finetune;  // absent: no fine-tuning stage
  SamplerConfig sampler;
  OversampleOption option = OversampleOption::Regular;
  EvalConfig eval;

  nlohmann::json source;  // the config as read

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Resolved settings for the run manifest.
  nlohmann::json to_json() const;
};

}  // namespace sos

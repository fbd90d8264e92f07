#include "sos/run_config.hpp"

#include <fstream>

#include "sos/error.hpp"

namespace sos {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  c.source = j;
  auto path = [&](const std::string& key) {
    fs::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  try {
    c.schema = path("schema");
    c.train_csv = path("train_csv");
    if (j.contains("test_csv")) c.test_csv = path("test_csv");
    if (j.contains("output_dir")) c.output_dir = path("output_dir");
    else c.output_dir = base_dir / c.output_dir;
    c.seed = j.value("seed", c.seed);

    if (j.contains("sde")) c.sde = SdeConfig::from_json(j.at("sde"));
    if (j.contains("net")) {
      json net = j.at("net");
      if (!net.contains("input_dim")) net["input_dim"] = 1;  // set from the encoder at train time
      c.net = NetSpec::from_json(net);
    }
    // Stage seeds default to the global seed.
    json train = j.value("train", json::object());
    if (!train.contains("seed")) train["seed"] = c.seed;
    c.train = TrainConfig::from_json(train);
    if (j.contains("finetune") && !j.at("finetune").is_null()) {
      json ft = j.at("finetune");
      if (!ft.contains("seed")) ft["seed"] = c.seed;
      c.finetune = FinetuneConfig::from_json(ft);
    }
    json sampler = j.value("sampler", json::object());
    if (!sampler.contains("seed")) sampler["seed"] = c.seed;
    c.sampler = SamplerConfig::from_json(sampler);
    if (j.contains("option")) c.option = oversample_option_from_string(j.at("option").get<std::string>());
    if (j.contains("eval")) c.eval = EvalConfig::from_json(j.at("eval"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, fs::absolute(path).parent_path());
}

json RunConfig::to_json() const {
  json j{{"schema", schema.string()},
         {"train_csv", train_csv.string()},
         {"output_dir", output_dir.string()},
         {"seed", seed},
         {"sde", sde.to_json()},
         {"net", net.to_json()},
         {"train", train.to_json()},
         {"sampler", sampler.to_json()},
         {"option", to_string(option)},
         {"eval", eval.to_json()}};
  if (test_csv) j["test_csv"] = test_csv->string();
  j["finetune"] = finetune ? finetune->to_json() : json(nullptr);
  return j;
}

}  // namespace sos

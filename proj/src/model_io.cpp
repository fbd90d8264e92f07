#include "sos/model_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "sos/error.hpp"

namespace sos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

json read_json(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("missing " + what + ": " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  }
}

void check_version(const json& j) {
  const int found = j.at("format_version").get<int>();
  if (found != kModelFormatVersion) throw VersionMismatchError(found, kModelFormatVersion);
}

fs::path class_file(const fs::path& dir, std::size_t class_id) {
  return dir / ("class_" + std::to_string(class_id) + ".json");
}

}  // namespace

void save_models(const fs::path& dir, const ModelSet& models) {
  fs::create_directories(dir);
  json classes = json::array();
  for (const auto& label : models.encoder.class_labels()) classes.push_back(label);
  write_json(dir / "modelset.json", json{{"format_version", kModelFormatVersion},
                                         {"schema", models.encoder.schema().to_json()},
                                         {"encoder", models.encoder.to_json()},
                                         {"sde_config", models.sde.to_json()},
                                         {"classes", classes},
                                         {"major", models.major},
                                         {"finetuned", models.finetuned}});
  for (const auto& net : models.nets) {
    write_json(class_file(dir, net.class_id),
               json{{"format_version", kModelFormatVersion},
                    {"class_id", net.class_id},
                    {"class_label", models.encoder.class_labels().at(net.class_id)},
                    {"spec", net.spec.to_json()},
                    {"sde_config", models.sde.to_json()},
                    {"layout", describe_layout(net.spec)},
                    {"params", net.params}});
  }
}

ModelSet load_models(const fs::path& dir) {
  const json index = read_json(dir / "modelset.json", "model set index");
  try {
    check_version(index);
    const Schema schema = Schema::from_json(index.at("schema"));
    ModelSet models{Encoder::from_json(index.at("encoder"), schema), SdeConfig::from_json(index.at("sde_config")),
                    {}, index.at("major").get<std::size_t>(), index.at("finetuned").get<bool>()};
    const std::size_t classes = index.at("classes").size();
    for (std::size_t k = 0; k < classes; ++k) {
      const fs::path path = class_file(dir, k);
      if (!fs::exists(path))
        throw MissingArtifactError("missing model for class id " + std::to_string(k) + " (" + path.string() + ")");
      const json j = read_json(path, "class model");
      check_version(j);
      ClassNet net{j.at("class_id").get<std::size_t>(), NetSpec::from_json(j.at("spec")),
                   j.at("params").get<Params>()};
      if (net.class_id != k) throw CorruptFileError(path.string() + ": class_id mismatch");
      if (!(SdeConfig::from_json(j.at("sde_config")) == models.sde))
        throw CorruptFileError(path.string() + ": SDE config differs from the model set");
      if (net.params.size() != param_layout(net.spec).size)
        throw CorruptFileError(path.string() + ": parameter count does not match the network layout");
      models.nets.push_back(std::move(net));
    }
    if (models.major >= models.nets.size()) throw CorruptFileError("major class id out of range");
    return models;
  } catch (const json::exception& e) {
    throw CorruptFileError(dir.string() + ": " + e.what());
  }
}

}  // namespace sos

#pragma once

#include <filesystem>

#include "sos/pipeline.hpp"

namespace sos {

inline constexpr int kModelFormatVersion = 1;

/// Writes `dir/modelset.json` plus one `dir/class_<id>.json` per class.
/// Parameters are written as shortest round-trip decimals, so loading is bit-exact.
void save_models(const std::filesystem::path& dir, const ModelSet& models);

/// Throws MissingArtifactError (naming the class id) for a missing class file,
/// VersionMismatchError for a wrong format_version, CorruptFileError otherwise.
ModelSet load_models(const std::filesystem::path& dir);

}  // namespace sos

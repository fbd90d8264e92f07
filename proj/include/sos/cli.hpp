#pragma once

namespace sos {

/// Entry point of the `sos` command-line tool. Returns the process exit code:
/// 0 ok, 2 config, 3 data, 4 missing artifact, 5 numeric failure.
int cli_dispatch(int argc, char** argv);

/// Environment variable naming the default config path.
inline constexpr const char* kConfigEnvVar = "SOS_CONFIG";

}  // namespace sos

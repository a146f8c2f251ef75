#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace senti::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable naming a directory of <backbone>.safetensors files,
/// consulted when --weights is not given.
inline constexpr const char* kWeightsDirEnv = "SENTI_WEIGHTS_DIR";

/// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace senti::cli

#pragma once

#include <string>
#include <vector>

namespace rallypose {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kConfigEnv = "RALLYPOSE_CONFIG";

// Exit codes: 0 success, 2 usage or input error, 1 internal error.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args); // args exclude the program name

} // namespace rallypose

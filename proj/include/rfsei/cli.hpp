#pragma once

#include <string>
#include <vector>

namespace rfsei::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kToolVersion = "1.0.0";

/// Entry point of the `rfsei` tool; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace rfsei::cli

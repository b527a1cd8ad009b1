#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlndlm::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kNumerical = 3;
inline constexpr int kIo = 4;

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the `mlndlm` command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlndlm::cli

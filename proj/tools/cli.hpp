#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fcvg::cli {

/// Exit codes shared by every command.
enum ExitCode : int { kOk = 0, kUsageError = 1, kInputError = 2, kNumericalError = 3 };

inline constexpr const char* kRunManifestFormat = "fcvg-run/1";

/// Entry point of the `fcvg` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fcvg::cli

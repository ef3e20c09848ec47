#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chartsum::cli {

/// Exit codes: 0 success, 1 bad flags or input files, 2 failure while working.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs the `chartsum` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chartsum::cli

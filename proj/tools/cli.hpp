#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sphericity::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitRejected = 2,
  kExitUsage = 64,
  kExitConfig = 65,
};

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "start:stop:step" (inclusive), a comma list, or a single value.
std::vector<double> parse_grid(const std::string& text);

}  // namespace sphericity::cli

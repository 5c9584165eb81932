#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wpd {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 2,
  kExitInvalidContext = 3,
  kExitNumeric = 4,
};

/// Runs one invocation; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wpd

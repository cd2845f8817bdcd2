#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pgsbm {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

/// Runs the CLI with args[0] as the program name. Normal output goes to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace pgsbm

#pragma once

#include <iosfwd>

namespace singell {

/// Exit codes of the `singular-elliptic` command line.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 2,
  kExitSolverFailed = 3,
  kExitUsage = 64,
  kExitMissingInput = 66,
};

/// Entry point for `singular-elliptic <audit|verify|minimize|probe|report> [flags]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace singell

#pragma once

#include <iosfwd>

namespace dtreg {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitOptimization = 2,
  kExitInvalidResample = 3,
};

// Entry point of the `dtreg` tool; results go to `out` unless a subcommand
// writes to a file, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dtreg

#pragma once

#include <iosfwd>

namespace forum_sentinel::cli {

/// Process exit codes; see docs/cli.md.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kBadInput = 2,
  kOutputFailed = 3,
  kComputeFailed = 4,
  kInconsistentReport = 5,
  kInternal = 10,
};

/// Runs the command line. Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace forum_sentinel::cli

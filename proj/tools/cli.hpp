#pragma once

#include <ostream>

namespace atinf::cli {

enum ExitCode { kCompleted = 0, kHypothesisUnmet = 2, kInputError = 3 };

/// Runs the command line `argv` and returns the process exit code. Reports go
/// to --out (written atomically) or to `out`; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace atinf::cli

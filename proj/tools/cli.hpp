#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace esci::cli {

/// Exit statuses: 0 success, 1 runtime failure, 2 invalid input.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidInput = 2;

/// Runs the command line `args` (args[0] is the program name). Summaries go
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace esci::cli

#pragma once

#include <iosfwd>

namespace socm {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point for the `socm` tool. `out` receives data written to stdout,
/// `err` receives diagnostics and progress.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace socm

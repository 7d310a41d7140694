#pragma once

#include <iosfwd>

namespace radiofp {

// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `radiofp` command: generate, features, train, evaluate,
// ablate, importance, dtw.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace radiofp

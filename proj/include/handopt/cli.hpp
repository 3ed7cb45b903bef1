#pragma once

#include <iosfwd>

namespace handopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowup = 3;
inline constexpr int kExitReference = 4;

/// Entry point of the `handopt` tool: evolve, train, eval, rank, replay and
/// report subcommands. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace handopt::cli

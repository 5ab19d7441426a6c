#pragma once

#include <iosfwd>

namespace pipestab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Entry point of the pipestab tool. Reads PIPESTAB_CONFIG when --config is
// absent. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

const char* tool_version();

}  // namespace pipestab

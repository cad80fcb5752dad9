#pragma once

#include <iosfwd>

namespace limeeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  ///< validation, format or usage errors
inline constexpr int kExitIo = 2;

/// Entry point of the `limeeval` tool. Results go to `out`, diagnostics and
/// usage text to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace limeeval::cli

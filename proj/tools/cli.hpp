#pragma once

#include <iosfwd>

namespace sncov::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kNumericalFailure = 1;
inline constexpr int kUsageOrDomain = 2;

/// Parses argv and runs one subcommand. Normal output goes to `out` unless
/// --out names a file; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sncov::cli

#pragma once

#include <iosfwd>

namespace hexastack::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the hexastack command line tool. Usage errors print the
/// usage text and return 2; any other failure prints one line
///   error: kind=<ErrorKind> message=<text>
/// to `err` and returns 1.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hexastack::harness

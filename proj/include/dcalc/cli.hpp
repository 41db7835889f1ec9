#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcalc::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kNegative = 1;  // verdict negative: witness found, check failed
inline constexpr int kUsage = 2;     // usage or input error
inline constexpr int kNumerical = 3;

/// Runs the command line `args` (without the program name). Primary output
/// goes to `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcalc::cli

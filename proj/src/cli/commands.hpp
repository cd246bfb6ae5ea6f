#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace poolcore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the command line `args` (without the program name). Results go to
/// `out` only when the whole command succeeds; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace poolcore::cli

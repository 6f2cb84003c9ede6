#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace birot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;   // usage, file or argument errors
inline constexpr int kExitSolver = 2;  // numerical failures

/// Entry point of `birot`. args excludes the program name. Reports go to
/// `out`, diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace birot::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ifa::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;  ///< numerical failure inside an estimator
inline constexpr int kExitUsage = 2;    ///< invalid flags, configuration or input files
inline constexpr int kExitNotConverged = 3;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ifa::cli

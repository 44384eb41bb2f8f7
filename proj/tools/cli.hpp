#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qql::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the qqlearn command line. `args` excludes the program name. Returns
/// 0 on success, 1 on a validation or assertion failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qql::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace agv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

std::string version_string();

/// Runs one subcommand. `args` excludes the program name. Machine-readable
/// results go to `out`; usage errors go to `err`; logs go to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace agv::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracinv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitVerdict = 3;

/// Runs the `fracinv` command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "subcommand --flag" for every option whose help text is empty.
std::vector<std::string> undocumented_options();

/// Subcommand names in registration order.
std::vector<std::string> subcommands();

}  // namespace fracinv::cli

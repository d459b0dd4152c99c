#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace citeforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `citeforge` command line. `args` excludes the program name.
/// Reports go to files named by flags; `out` receives help text and
/// `--summary` output, `err` receives usage errors and one JSON error line
/// per failure.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace citeforge::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stlhr {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_convergence = 3 };

/// Entry point behind the `stlhr` executable. Subcommands: fit, test,
/// diagnose, simulate, km. Messages go to `out` / `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace stlhr

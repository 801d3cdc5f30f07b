#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace m3d {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,
  exit_input = 3,
  exit_numerical = 4,
};

/// Runs one subcommand. `args` excludes the program name. Artifacts go under
/// the output directory; one summary line goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace m3d

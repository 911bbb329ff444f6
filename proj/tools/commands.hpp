#pragma once

#include <string>
#include <vector>

namespace hurdlenet::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,    // unexpected internal error
  exit_usage = 2,      // bad flags or an invalid model/data combination
  exit_data = 3,       // malformed or missing input files
  exit_io = 4,         // output directory not writable
  exit_numerical = 5,  // sampler or likelihood breakdown
};

/// Parses `args` (program name first) and runs one subcommand:
/// simulate, fit, loo, predict or evaluate. Errors are logged with their
/// category; the return value is the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace hurdlenet::cli

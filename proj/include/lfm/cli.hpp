#pragma once

#include <string>
#include <vector>

namespace lfm {

/// Runs one CLI invocation. Exit codes: 0 success, 2 invalid input or
/// configuration, 3 numerical failure.
int run_subcommand(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace lfm

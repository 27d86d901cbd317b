#pragma once

// Command-line front end.  Every subcommand runs an experiment or exact
// computation, writes its outputs plus a run manifest into the output
// directory, and exits 0 (all checks passed), 1 (a check failed) or
// 2 (usage or configuration error).

#include <string>
#include <vector>

namespace favsites::cli {

// args = argv[1..]; returns the process exit code.
int run(const std::vector<std::string>& args);

} // namespace favsites::cli

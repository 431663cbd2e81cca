#pragma once

#include <string>
#include <vector>

namespace cnmf::cli {

// Runs the full command-line interface on the given arguments (argv[0]
// excluded). Returns the process exit status: 0 when every requested run
// succeeded, 2 for input/configuration errors, 1 for runtime failures.
int run(const std::vector<std::string>& args);

}  // namespace cnmf::cli

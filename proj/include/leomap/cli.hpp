#pragma once

#include <string>
#include <vector>

namespace leomap {

/// Runs the command line. Exit codes: 0 success, 1 usage or flag errors,
/// 2 bad input data, 3 adapter or privilege problems.
int run_cli(const std::vector<std::string>& args);

}  // namespace leomap

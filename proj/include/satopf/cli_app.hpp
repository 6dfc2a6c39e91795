#pragma once

#include <string>
#include <vector>

namespace satopf {

/// Entry point of the command-line tool, factored out for in-process testing.
/// Exit codes: 0 success, 2 parse/config error, 3 solver failure,
/// 4 infeasibility.
int run_cli(const std::vector<std::string>& args);

}  // namespace satopf

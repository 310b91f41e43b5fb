#pragma once

#include <string>
#include <vector>

namespace scl {

/// Command-line entry point (solve / verify / plotdata). Returns the process
/// exit code: 0 when everything passed, 1 when a verification criterion
/// failed, 2 on invalid input.
int run_cli(const std::vector<std::string>& args);

} // namespace scl

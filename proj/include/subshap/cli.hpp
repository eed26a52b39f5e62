#pragma once

#include <string>
#include <vector>

namespace subshap {

// Command-line front end. Exit codes: 0 success, 1 unexpected failure,
// 2 configuration/usage errors, 3 I/O errors, 4 numeric or model-contract
// errors.
int run_cli(int argc, const char* const* argv);

// Same, for tests: args exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace subshap

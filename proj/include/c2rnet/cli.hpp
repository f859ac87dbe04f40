#pragma once

#include <string>
#include <vector>

namespace c2rnet::cli {

// Exit codes: 0 success, 1 validation error, 2 runtime error.
int run(const std::vector<std::string>& args);

}  // namespace c2rnet::cli

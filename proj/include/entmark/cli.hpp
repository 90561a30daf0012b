#pragma once

#include <string>
#include <vector>

namespace entmark::cli {

// Exit codes: 0 success, 1 validation failure, 2 usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

} // namespace entmark::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gold {

// Exit codes: 0 success, 1 usage error, 2 pipeline error (error JSON on
// stderr), 3 unexpected failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gold

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kvdelay {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 invalid config or I/O failure, 2 hypothesis violated (check).
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kvdelay

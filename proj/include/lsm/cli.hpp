#pragma once

#include <string>
#include <vector>

namespace lsm {

// Exit codes: 0 ok, 1 validation failure, 2 I/O failure, 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

} // namespace lsm

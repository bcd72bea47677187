#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace masszz {

/// Entry point of the mas-szz tool; `args` excludes the program name.
/// Returns 0 on success, 2 when the result is degraded, 1 on error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace masszz

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace masszz {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

struct ProcessOptions {
    std::filesystem::path cwd;                           // empty: inherit
    std::vector<std::pair<std::string, std::string>> env;  // added/overridden variables
    std::string input;                                   // written to stdin, then closed
};

/// Spawns `argv` (argv[0] looked up in PATH) without a shell and collects
/// both output streams. Throws std::system_error if the spawn itself fails.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

}  // namespace masszz

#pragma once

#include <filesystem>
#include <string>

namespace masszz {

enum class BackendKind { Live, Replay, Record };

std::string_view to_string(BackendKind k) noexcept;
BackendKind backend_from_string(std::string_view s);

struct RunConfig {
    BackendKind backend = BackendKind::Live;
    std::string model;
    std::string base_url = "https://api.openai.com/v1";
    std::filesystem::path transcript;  // replay: file or per-case directory; record: output path
    std::filesystem::path prompt_dir;  // empty: built-in default
    int context_lines = 5;
    int budget = 3;
    int max_tool_rounds = 6;
    int max_depth = 50;
    double vszz_threshold = 0.75;
    int parallelism = 1;
    std::filesystem::path cache_dir = ".mas-szz-cache";
    int max_in_flight = 4;
    int requests_per_minute = 60;
    int max_tokens = 2048;

    /// Throws InvalidArgument naming the first field below its minimum.
    void validate() const;
};

}  // namespace masszz

#include "masszz/config.hpp"

#include "masszz/error.hpp"

namespace masszz {

std::string_view to_string(BackendKind k) noexcept {
    switch (k) {
    case BackendKind::Live: return "live";
    case BackendKind::Replay: return "replay";
    case BackendKind::Record: return "record";
    }
    return "live";
}

BackendKind backend_from_string(std::string_view s) {
    if (s == "live") return BackendKind::Live;
    if (s == "replay") return BackendKind::Replay;
    if (s == "record") return BackendKind::Record;
    throw Error(ErrorKind::InvalidArgument, "unknown backend '" + std::string(s) + "'");
}

void RunConfig::validate() const {
    auto at_least = [](const char* name, long long v, long long min) {
        if (v < min) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be >= " + std::to_string(min));
    };
    at_least("context_lines", context_lines, 0);
    at_least("budget", budget, 1);
    at_least("max_tool_rounds", max_tool_rounds, 0);
    at_least("max_depth", max_depth, 1);
    at_least("parallelism", parallelism, 1);
    at_least("max_in_flight", max_in_flight, 1);
    at_least("requests_per_minute", requests_per_minute, 1);
    at_least("max_tokens", max_tokens, 1);
    if (!(vszz_threshold >= 0.0 && vszz_threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "vszz_threshold must lie in [0, 1]");
    }
    if (backend == BackendKind::Replay && transcript.empty()) {
        throw Error(ErrorKind::InvalidArgument, "replay backend needs --transcript");
    }
}

}  // namespace masszz

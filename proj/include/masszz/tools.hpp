#pragma once

#include "json.hpp"
#include "masszz/llm.hpp"
#include "masszz/repo.hpp"

#include <limits>
#include <string>
#include <vector>

namespace masszz {

inline constexpr int kPayloadLineCap = 400;
inline constexpr int kDefaultMaxHits = 50;
inline constexpr int kDefaultMaxToolRounds = 6;

struct ToolCall {
    std::string name;  // ExpandContext or LocateSymbol
    nlohmann::json arguments;
    std::string revision;
};

struct ToolResult {
    ToolCall call;
    std::string payload;
    bool truncated = false;
};

/// Lines [max(1,start), min(end, EOF)] of `file` at `revision`, each as
/// "N: text". Throws FileAbsent, or InvalidArgument when start > end.
ToolResult expand_context(const RepoHandle& repo, const std::string& revision, const std::string& file, int start,
                          int end);

struct SymbolHit {
    std::string path;
    int line = 0;
    std::string text;
    bool operator==(const SymbolHit&) const = default;
};

/// Fixed-string, case-sensitive search over `blobs` (sorted by path). Hits
/// come back in path then line order; a line matching several times is
/// reported once. Parallel over blobs.
std::vector<SymbolHit> search_blobs(const std::vector<Blob>& blobs, std::string_view query);

/// Single-threaded reference implementation of search_blobs.
std::vector<SymbolHit> search_blobs_serial(const std::vector<Blob>& blobs, std::string_view query);

/// Every tracked text file at `revision` searched for `query`; at most
/// `max_hits` "path:line: text" rows. Throws InvalidArgument on an empty query.
ToolResult locate_symbol(const RepoHandle& repo, const std::string& revision, const std::string& query,
                         int max_hits = kDefaultMaxHits);

/// Runs a single call. Argument and repository problems come back as an
/// "error: ..." payload instead of an exception.
ToolResult execute_tool(const RepoHandle& repo, const ToolCall& call);

/// ExpandContext{file, start_line, end_line} and LocateSymbol{query, max_hits?}.
const std::vector<ToolSpec>& context_tool_specs();

struct ToolLoopStats {
    int completions = 0;
    int tool_executions = 0;
    bool budget_exhausted = false;
    std::vector<ToolResult> results;
};

/// Alternates completions and tool executions until the model answers
/// without tool calls. After `max_tool_rounds` executions one last completion
/// is made with the tools withdrawn.
ChatResponse run_tool_loop(Backend& backend, ChatRequest request, const RepoHandle& repo, const std::string& revision,
                           int max_tool_rounds = kDefaultMaxToolRounds, ToolLoopStats* stats = nullptr);

}  // namespace masszz

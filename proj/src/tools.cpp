#include "masszz/tools.hpp"

#include "masszz/error.hpp"

#include <algorithm>
#include <functional>

#include <omp.h>

namespace masszz {

using nlohmann::json;

namespace {

void cap_payload(ToolResult& r, const std::vector<std::string>& rows) {
    std::size_t n = std::min<std::size_t>(rows.size(), kPayloadLineCap);
    for (std::size_t i = 0; i < n; ++i) {
        r.payload += rows[i];
        r.payload += '\n';
    }
    if (rows.size() > n) {
        r.truncated = true;
        r.payload += "[truncated: " + std::to_string(rows.size() - n) + " more lines]\n";
    }
}

void scan_blob(const Blob& blob, std::string_view query, std::vector<SymbolHit>& out) {
    std::string_view text = blob.content;
    std::boyer_moore_horspool_searcher searcher(query.begin(), query.end());
    int line = 1;
    std::size_t counted_to = 0;  // newlines before this offset are already in `line`
    auto it = text.begin();
    while (true) {
        auto found = std::search(it, text.end(), searcher);
        if (found == text.end()) break;
        std::size_t off = static_cast<std::size_t>(found - text.begin());
        line += static_cast<int>(std::count(text.begin() + counted_to, text.begin() + off, '\n'));
        counted_to = off;
        std::size_t bol = text.rfind('\n', off);
        bol = bol == std::string_view::npos ? 0 : bol + 1;
        std::size_t eol = text.find('\n', off);
        if (eol == std::string_view::npos) eol = text.size();
        // a query containing newlines can still span lines; it is reported at its first line
        out.push_back({blob.path, line, std::string(text.substr(bol, eol - bol))});
        if (eol >= text.size()) break;
        line += static_cast<int>(std::count(text.begin() + counted_to, text.begin() + eol + 1, '\n'));
        counted_to = eol + 1;
        it = text.begin() + eol + 1;
    }
}

int int_arg(const json& args, const char* key) {
    if (!args.contains(key)) throw Error(ErrorKind::InvalidArgument, std::string("missing argument '") + key + "'");
    const json& v = args.at(key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        try {
            std::size_t used = 0;
            int n = std::stoi(v.get<std::string>(), &used);
            if (used == v.get<std::string>().size()) return n;
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorKind::InvalidArgument, std::string("argument '") + key + "' must be an integer");
}

std::string string_arg(const json& args, const char* key) {
    if (!args.contains(key) || !args.at(key).is_string()) {
        throw Error(ErrorKind::InvalidArgument, std::string("argument '") + key + "' must be a string");
    }
    return args.at(key).get<std::string>();
}

}  // namespace

ToolResult expand_context(const RepoHandle& repo, const std::string& revision, const std::string& file, int start,
                          int end) {
    if (start > end) throw Error(ErrorKind::InvalidArgument, "start_line > end_line");
    auto content = repo.file_at(revision, file);
    if (!content) throw Error(ErrorKind::FileAbsent, file + " at " + revision);
    auto lines = split_lines(*content);
    ToolResult r;
    r.call = {"ExpandContext", {{"file", file}, {"start_line", start}, {"end_line", end}}, revision};
    int lo = std::max(1, start);
    int hi = std::min(end, static_cast<int>(lines.size()));
    std::vector<std::string> rows;
    for (int i = lo; i <= hi; ++i) rows.push_back(std::to_string(i) + ": " + lines[static_cast<std::size_t>(i - 1)]);
    cap_payload(r, rows);
    return r;
}

std::vector<SymbolHit> search_blobs_serial(const std::vector<Blob>& blobs, std::string_view query) {
    std::vector<SymbolHit> hits;
    if (query.empty()) return hits;
    for (const auto& b : blobs) scan_blob(b, query, hits);
    return hits;
}

std::vector<SymbolHit> search_blobs(const std::vector<Blob>& blobs, std::string_view query) {
    if (query.empty()) return {};
    std::vector<std::vector<SymbolHit>> per_blob(blobs.size());
    const auto n = static_cast<std::ptrdiff_t>(blobs.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) scan_blob(blobs[static_cast<std::size_t>(i)], query, per_blob[static_cast<std::size_t>(i)]);
    std::vector<SymbolHit> hits;
    for (auto& v : per_blob) {
        hits.insert(hits.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    return hits;
}

ToolResult locate_symbol(const RepoHandle& repo, const std::string& revision, const std::string& query, int max_hits) {
    if (query.empty()) throw Error(ErrorKind::InvalidArgument, "query must not be empty");
    if (max_hits < 1) throw Error(ErrorKind::InvalidArgument, "max_hits must be >= 1");
    auto hits = search_blobs(repo.tree_blobs(revision), query);
    ToolResult r;
    r.call = {"LocateSymbol", {{"query", query}, {"max_hits", max_hits}}, revision};
    std::vector<std::string> rows;
    std::size_t n = std::min(hits.size(), static_cast<std::size_t>(max_hits));
    for (std::size_t i = 0; i < n; ++i) rows.push_back(hits[i].path + ":" + std::to_string(hits[i].line) + ": " + hits[i].text);
    cap_payload(r, rows);
    if (hits.size() > n) {
        r.truncated = true;
        r.payload += "[truncated: " + std::to_string(hits.size() - n) + " more hits]\n";
    }
    return r;
}

ToolResult execute_tool(const RepoHandle& repo, const ToolCall& call) {
    try {
        if (!call.arguments.is_object()) throw Error(ErrorKind::InvalidArgument, "arguments must be a JSON object");
        if (call.name == "ExpandContext") {
            auto r = expand_context(repo, call.revision, string_arg(call.arguments, "file"),
                                    int_arg(call.arguments, "start_line"), int_arg(call.arguments, "end_line"));
            r.call = call;
            return r;
        }
        if (call.name == "LocateSymbol") {
            int max_hits = call.arguments.contains("max_hits") ? int_arg(call.arguments, "max_hits") : kDefaultMaxHits;
            auto r = locate_symbol(repo, call.revision, string_arg(call.arguments, "query"), max_hits);
            r.call = call;
            return r;
        }
        throw Error(ErrorKind::InvalidArgument, "unknown tool '" + call.name + "'");
    } catch (const Error& e) {
        return {call, std::string("error: ") + e.what() + "\n", false};
    }
}

const std::vector<ToolSpec>& context_tool_specs() {
    static const std::vector<ToolSpec> specs = {
        {"ExpandContext",
         "Return the lines start_line..end_line of a file at the revision under analysis, prefixed with line numbers.",
         {{"type", "object"},
          {"properties",
           {{"file", {{"type", "string"}, {"description", "repository-relative path"}}},
            {"start_line", {{"type", "integer"}, {"minimum", 1}}},
            {"end_line", {{"type", "integer"}, {"minimum", 1}}}}},
          {"required", {"file", "start_line", "end_line"}}}},
        {"LocateSymbol",
         "Search every tracked file at the revision under analysis for a fixed string (case-sensitive). Returns "
         "path:line: text rows.",
         {{"type", "object"},
          {"properties",
           {{"query", {{"type", "string"}}}, {"max_hits", {{"type", "integer"}, {"minimum", 1}}}}},
          {"required", {"query"}}}},
    };
    return specs;
}

ChatResponse run_tool_loop(Backend& backend, ChatRequest request, const RepoHandle& repo, const std::string& revision,
                           int max_tool_rounds, ToolLoopStats* stats) {
    ToolLoopStats local;
    ToolLoopStats& st = stats ? *stats : local;
    int budget = std::max(0, max_tool_rounds);
    for (;;) {
        bool forced = st.tool_executions >= budget && !request.tool_specs.empty();
        if (forced) {
            st.budget_exhausted = true;
            request.tool_specs.clear();
            request.messages.push_back({"user", "The tool budget is used up. Give your final answer now.", {}, {}});
        }
        ChatResponse resp = backend.complete(request);
        ++st.completions;
        if (resp.tool_calls.empty() || request.tool_specs.empty()) {
            resp.tool_calls.clear();
            return resp;
        }
        request.messages.push_back({"assistant", resp.text, resp.tool_calls, {}});
        for (std::size_t i = 0; i < resp.tool_calls.size(); ++i) {
            const auto& c = resp.tool_calls[i];
            std::string id = c.id.empty() ? "call_" + std::to_string(st.completions) + "_" + std::to_string(i) : c.id;
            std::string payload;
            if (st.tool_executions < budget) {
                json args = json::parse(c.arguments, nullptr, false);
                ToolResult r;
                if (args.is_discarded()) {
                    r = {{c.name, json(c.arguments), revision}, "error: arguments are not valid JSON\n", false};
                } else {
                    r = execute_tool(repo, {c.name, args, revision});
                }
                ++st.tool_executions;
                payload = r.payload;
                st.results.push_back(std::move(r));
            } else {
                payload = "error: tool budget exhausted; call not executed\n";
            }
            request.messages.push_back({"tool", payload, {}, id});
        }
    }
}

}  // namespace masszz

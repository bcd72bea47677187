#include "masszz/llm.hpp"

#include "masszz/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace masszz {

using nlohmann::json;

namespace {

constexpr std::string_view kAgentNames[] = {"Auditor", "Judge", "Reviewer", "Evaluator", "Locator", "Tracer"};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

json tool_call_to_json(const ToolCallRequest& c) {
    json args = json::parse(c.arguments, nullptr, false);
    if (args.is_discarded()) args = c.arguments;
    return {{"id", c.id}, {"name", c.name}, {"arguments", std::move(args)}};
}

ToolCallRequest tool_call_from_json(const json& j) {
    ToolCallRequest c;
    c.id = j.value("id", std::string{});
    c.name = j.at("name").get<std::string>();
    const json& args = j.contains("arguments") ? j.at("arguments") : json::object();
    c.arguments = args.is_string() ? args.get<std::string>() : args.dump();
    return c;
}

}  // namespace

std::string_view to_string(Agent agent) noexcept { return kAgentNames[static_cast<int>(agent)]; }

Agent agent_from_string(std::string_view name) {
    auto want = lower(name);
    for (int i = 0; i < 6; ++i) {
        if (lower(kAgentNames[i]) == want) return static_cast<Agent>(i);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown agent '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// transcripts

json to_json(const Transcript& t) {
    json entries = json::array();
    for (const auto& e : t.entries) {
        json calls = json::array();
        for (const auto& c : e.response.tool_calls) calls.push_back(tool_call_to_json(c));
        json response = {{"text", e.response.text}};
        if (!calls.empty()) response["tool_calls"] = std::move(calls);
        entries.push_back({{"agent", to_string(e.agent)}, {"ordinal", e.ordinal}, {"response", std::move(response)}});
    }
    if (t.strict) return entries;
    return {{"strict", false}, {"entries", std::move(entries)}};
}

Transcript transcript_from_json(const json& j) {
    Transcript t;
    const json* entries = &j;
    if (j.is_object()) {
        t.strict = j.value("strict", true);
        entries = &j.at("entries");
    }
    if (!entries->is_array()) throw Error(ErrorKind::InvalidArgument, "transcript must be a JSON array");
    for (const auto& je : *entries) {
        TranscriptEntry e;
        e.agent = agent_from_string(je.at("agent").get<std::string>());
        e.ordinal = je.at("ordinal").get<int>();
        const auto& r = je.at("response");
        e.response.text = r.value("text", std::string{});
        if (r.contains("tool_calls")) {
            for (const auto& c : r.at("tool_calls")) e.response.tool_calls.push_back(tool_call_from_json(c));
        }
        t.entries.push_back(std::move(e));
    }
    return t;
}

Transcript load_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read transcript " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::InvalidArgument, "transcript " + path.string() + " is not valid JSON");
    return transcript_from_json(j);
}

void save_transcript(const Transcript& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write transcript " + path.string());
    out << to_json(t).dump(2) << "\n";
}

ReplayBackend::ReplayBackend(Transcript transcript) : transcript_(std::move(transcript)) {}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mu_);
    int ordinal = counts_[request.agent]++;
    log_.push_back(request);
    std::string who = std::string(to_string(request.agent)) + "#" + std::to_string(ordinal);
    if (transcript_.strict) {
        if (cursor_ >= transcript_.entries.size()) throw Error(ErrorKind::TranscriptExhausted, "no entry left for " + who);
        const auto& e = transcript_.entries[cursor_];
        if (e.agent != request.agent || e.ordinal != ordinal) {
            throw Error(ErrorKind::TranscriptMismatch, "expected " + std::string(to_string(e.agent)) + "#" +
                                                           std::to_string(e.ordinal) + ", got " + who);
        }
        ++cursor_;
        return e.response;
    }
    for (const auto& e : transcript_.entries) {
        if (e.agent == request.agent && e.ordinal == ordinal) {
            ++cursor_;
            return e.response;
        }
    }
    throw Error(ErrorKind::TranscriptExhausted, "no entry for " + who);
}

std::vector<ChatRequest> ReplayBackend::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

int ReplayBackend::calls(Agent agent) const {
    std::lock_guard lock(mu_);
    auto it = counts_.find(agent);
    return it == counts_.end() ? 0 : it->second;
}

std::size_t ReplayBackend::remaining() const {
    std::lock_guard lock(mu_);
    return transcript_.entries.size() - std::min(cursor_, transcript_.entries.size());
}

RecordingBackend::RecordingBackend(Backend& inner) : inner_(inner) {}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse r = inner_.complete(request);
    std::lock_guard lock(mu_);
    transcript_.entries.push_back({request.agent, counts_[request.agent]++, r});
    return r;
}

Transcript RecordingBackend::transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
}

// ---------------------------------------------------------------------------
// live backend

std::string api_key_from_env() {
    const char* key = std::getenv("MAS_SZZ_API_KEY");
    return key ? std::string(key) : std::string{};
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) throw Error(ErrorKind::BackendError, "MAS_SZZ_API_KEY is not set");
    if (config_.model.empty()) throw Error(ErrorKind::BackendError, "no model configured");
    auto scheme = config_.base_url.find("://");
    if (scheme == std::string::npos) throw Error(ErrorKind::BackendError, "base URL needs a scheme: " + config_.base_url);
    auto slash = config_.base_url.find('/', scheme + 3);
    scheme_host_port_ = config_.base_url.substr(0, slash);
    path_prefix_ = slash == std::string::npos ? std::string{} : config_.base_url.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    config_.max_in_flight = std::max(1, config_.max_in_flight);
    config_.requests_per_minute = std::max(1, config_.requests_per_minute);
    config_.max_attempts = std::max(1, config_.max_attempts);
}

json LiveBackend::request_body(const ChatRequest& request) const {
    json messages = json::array();
    if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    for (const auto& m : request.messages) {
        json jm = {{"role", m.role}, {"content", m.text}};
        if (!m.tool_calls.empty()) {
            json calls = json::array();
            for (const auto& c : m.tool_calls) {
                calls.push_back({{"id", c.id}, {"type", "function"}, {"function", {{"name", c.name}, {"arguments", c.arguments}}}});
            }
            jm["tool_calls"] = std::move(calls);
            if (m.text.empty()) jm["content"] = nullptr;
        }
        if (m.role == "tool") jm["tool_call_id"] = m.tool_call_id;
        messages.push_back(std::move(jm));
    }
    json body = {{"model", config_.model},
                 {"temperature", config_.temperature},
                 {"max_tokens", request.max_tokens},
                 {"messages", std::move(messages)}};
    if (!request.tool_specs.empty()) {
        json tools = json::array();
        for (const auto& t : request.tool_specs) {
            tools.push_back({{"type", "function"},
                             {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        }
        body["tools"] = std::move(tools);
    }
    return body;
}

ChatResponse parse_chat_completion(const json& body) {
    if (!body.contains("choices") || !body.at("choices").is_array() || body.at("choices").empty()) {
        throw Error(ErrorKind::BackendError, "completion has no choices");
    }
    const json& msg = body.at("choices").at(0).at("message");
    ChatResponse r;
    if (msg.contains("content") && msg.at("content").is_string()) r.text = msg.at("content").get<std::string>();
    if (msg.contains("tool_calls") && msg.at("tool_calls").is_array()) {
        for (const auto& c : msg.at("tool_calls")) {
            ToolCallRequest call;
            call.id = c.value("id", std::string{});
            const json& fn = c.at("function");
            call.name = fn.value("name", std::string{});
            const json& args = fn.contains("arguments") ? fn.at("arguments") : json("{}");
            call.arguments = args.is_string() ? args.get<std::string>() : args.dump();
            r.tool_calls.push_back(std::move(call));
        }
    }
    if (body.contains("usage") && body.at("usage").is_object()) {
        r.usage.prompt_tokens = body.at("usage").value("prompt_tokens", 0);
        r.usage.completion_tokens = body.at("usage").value("completion_tokens", 0);
    }
    return r;
}

void LiveBackend::acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        while (!recent_.empty() && now - recent_.front() >= std::chrono::minutes(1)) recent_.pop_front();
        bool slot = in_flight_ < config_.max_in_flight;
        bool rate = static_cast<int>(recent_.size()) < config_.requests_per_minute;
        if (slot && rate) break;
        if (!rate) cv_.wait_until(lock, recent_.front() + std::chrono::minutes(1));
        else cv_.wait(lock);
    }
    ++in_flight_;
    recent_.push_back(std::chrono::steady_clock::now());
}

void LiveBackend::release() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_all();
}

ChatResponse LiveBackend::complete(const ChatRequest& request) {
    std::string payload = request_body(request).dump();
    std::string path = path_prefix_ + "/chat/completions";
    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        acquire();
        httplib::Result res;
        {
            httplib::Client client(scheme_host_port_);
            client.set_bearer_token_auth(config_.api_key);
            client.set_connection_timeout(std::chrono::seconds(30));
            client.set_read_timeout(std::chrono::seconds(config_.timeout_seconds));
            client.set_write_timeout(std::chrono::seconds(30));
            res = client.Post(path, payload, "application/json");
        }
        release();
        if (!res) {
            last_error = "network: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorKind::BackendError, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
        }
        json body = json::parse(res->body, nullptr, false);
        if (body.is_discarded()) throw Error(ErrorKind::BackendError, "completion body is not JSON");
        return parse_chat_completion(body);
    }
    throw Error(ErrorKind::BackendError,
                last_error + " after " + std::to_string(config_.max_attempts) + " attempts");
}

// ---------------------------------------------------------------------------
// sanitization

namespace {

bool is_reference_line(const std::string& line) {
    static const std::string hex = R"(\b[0-9a-f]{7,40}\b)";
    static const std::regex hex_token(hex, std::regex::icase);
    if (!std::regex_search(line, hex_token)) return false;

    static const std::regex keyword_trailer(
        R"(^\s*[-*]?\s*(fix(es|ed)?|close[sd]?|resolve[sd]?|refs?|references|see( also)?|reverts?|related(-to)?|)"
        R"(follow[- ]?ups?([- ](to|for|of))?|cherry[- ]?pick(ed)?([- ]from)?|backport(ed)?([- ](of|from))?|)"
        R"(introduced[- ]by|regressed[- ]by|caused[- ]by|upstream([- ]commit)?|original[- ]commit|commit)\s*[:=].*)" + hex,
        std::regex::icase);
    static const std::regex cherry_pick(R"(^\s*\(?\s*cherry[- ]picked from commit\s+[0-9a-f]{7,40}\s*\)?\s*$)",
                                        std::regex::icase);
    static const std::regex reverts(R"(^\s*this reverts commit\s+[0-9a-f]{7,40})", std::regex::icase);
    static const std::regex upstream(R"(^\s*\[\s*(upstream\s+)?commit\s+[0-9a-f]{7,40}\s*\]?)", std::regex::icase);
    static const std::regex url(R"(/commits?/[0-9a-f]{7,40}\b)", std::regex::icase);
    static const std::regex bare(R"(^\s*[(\[]?\s*(commit\s+)?[0-9a-f]{7,40}\s*[)\].,;]?\s*$)", std::regex::icase);
    static const std::regex generic_trailer(R"(^\s*([A-Za-z][A-Za-z0-9_-]{0,40})\s*:\s*\S.*)" + hex, std::regex::icase);
    static const std::regex person_trailer(
        R"(^\s*(signed-off-by|co-authored-by|reviewed-by|acked-by|tested-by|reported-by|suggested-by|cc|)"
        R"(author|from|to|helped-by|mentored-by)\s*:)",
        std::regex::icase);

    if (std::regex_search(line, keyword_trailer) || std::regex_search(line, cherry_pick) ||
        std::regex_search(line, reverts) || std::regex_search(line, upstream) || std::regex_search(line, url) ||
        std::regex_search(line, bare)) {
        return true;
    }
    return std::regex_search(line, generic_trailer) && !std::regex_search(line, person_trailer);
}

}  // namespace

std::string sanitize_commit_message(std::string_view text) {
    bool final_newline = !text.empty() && text.back() == '\n';
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    std::string_view body = final_newline ? text.substr(0, text.size() - 1) : text;
    while (start <= body.size()) {
        auto nl = body.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(body.substr(start));
            break;
        }
        lines.push_back(body.substr(start, nl - start));
        start = nl + 1;
    }

    std::vector<std::string_view> kept;
    bool removed = false;
    for (auto l : lines) {
        if (is_reference_line(std::string(l))) removed = true;
        else kept.push_back(l);
    }
    if (!removed) return std::string(text);
    while (!kept.empty() && trimmed(kept.back()).empty()) kept.pop_back();

    std::string out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i) out += '\n';
        out += kept[i];
    }
    if (final_newline && !kept.empty()) out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// structured output

namespace {

std::string key_form(std::string_view key) {
    std::string out;
    for (char c : trimmed(key)) {
        if (c == ' ' || c == '-') out.push_back('_');
        else out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string strip_decoration(std::string s) {
    s = trimmed(s);
    auto is_deco = [](char c) { return c == '*' || c == '`' || c == '"' || c == '\'' || c == '_'; };
    while (!s.empty() && is_deco(s.front())) s.erase(s.begin());
    while (!s.empty() && is_deco(s.back())) s.pop_back();
    return trimmed(s);
}

std::optional<std::string> normalize_enum(const FieldSpec& spec, std::string raw) {
    std::string v = lower(strip_decoration(raw));
    // Conventional-commit noise: "fix(core)!" -> "fix"
    if (auto paren = v.find('('); paren != std::string::npos && paren > 0) v = v.substr(0, paren);
    while (!v.empty() && (v.back() == '!' || v.back() == ':' || v.back() == '.' || v.back() == ',')) v.pop_back();
    v = trimmed(v);
    if (auto it = spec.aliases.find(v); it != spec.aliases.end()) v = lower(it->second);
    for (const auto& canonical : spec.values) {
        if (lower(canonical) == v) return canonical;
    }
    return std::nullopt;
}

std::optional<json> conform(const json& obj, const std::vector<FieldSpec>& fields, std::string& why);

std::optional<json> conform_value(const json& v, const FieldSpec& spec, std::string& why) {
    switch (spec.type) {
    case FieldType::String:
        if (v.is_string()) return v;
        if (v.is_number() || v.is_boolean()) return json(v.dump());
        break;
    case FieldType::Boolean:
        if (v.is_boolean()) return v;
        if (v.is_number_integer() && (v.get<long long>() == 0 || v.get<long long>() == 1)) return json(v.get<long long>() == 1);
        if (v.is_string()) {
            auto s = lower(strip_decoration(v.get<std::string>()));
            if (s == "true" || s == "yes") return json(true);
            if (s == "false" || s == "no") return json(false);
        }
        break;
    case FieldType::Integer:
        if (v.is_number_integer()) return v;
        if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>()))) {
            return json(static_cast<long long>(v.get<double>()));
        }
        if (v.is_string()) {
            auto s = strip_decoration(v.get<std::string>());
            if (!s.empty() && s.front() == '#') s.erase(s.begin());
            char* end = nullptr;
            long long n = std::strtoll(s.c_str(), &end, 10);
            if (!s.empty() && end && *end == '\0') return json(n);
        }
        break;
    case FieldType::Enum:
        if (v.is_string()) {
            if (auto e = normalize_enum(spec, v.get<std::string>())) return json(*e);
            why = "field '" + spec.name + "' has unexpected value '" + v.get<std::string>() + "'";
            return std::nullopt;
        }
        break;
    case FieldType::ObjectArray: {
        json items = v.is_object() ? json::array({v}) : v;
        if (!items.is_array()) break;
        json out = json::array();
        for (const auto& item : items) {
            if (!item.is_object()) {
                why = "field '" + spec.name + "' must hold objects";
                return std::nullopt;
            }
            auto c = conform(item, spec.items, why);
            if (!c) return std::nullopt;
            out.push_back(std::move(*c));
        }
        return out;
    }
    }
    why = "field '" + spec.name + "' has the wrong type";
    return std::nullopt;
}

std::optional<json> conform(const json& obj, const std::vector<FieldSpec>& fields, std::string& why) {
    std::map<std::string, const json*> by_key;
    for (auto it = obj.begin(); it != obj.end(); ++it) by_key.emplace(key_form(it.key()), &it.value());
    json out = json::object();
    for (const auto& f : fields) {
        auto it = by_key.find(key_form(f.name));
        if (it == by_key.end() || it->second->is_null()) {
            if (f.required) {
                why = "missing field '" + f.name + "'";
                return std::nullopt;
            }
            continue;
        }
        auto v = conform_value(*it->second, f, why);
        if (!v) return std::nullopt;
        out[f.name] = std::move(*v);
    }
    return out;
}

/// End of the balanced object starting at `open`, skipping string literals.
std::optional<std::size_t> object_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i;
    }
    return std::nullopt;
}

std::optional<json> labeled_block(std::string_view text, const OutputSchema& schema) {
    static const std::regex label(R"(^\s*(?:[-*#>]+\s*)?\**\s*([A-Za-z][A-Za-z _-]{0,40}?)\s*\**\s*:\s*\**\s*(.*)$)");
    std::map<std::string, std::string> wanted;
    for (const auto& f : schema.fields) wanted.emplace(key_form(f.name), f.name);

    json obj = json::object();
    std::string current;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, label)) {
            auto it = wanted.find(key_form(m[1].str()));
            if (it != wanted.end()) {
                current = it->second;
                obj[current] = strip_decoration(m[2].str());
                continue;
            }
        }
        if (trimmed(line).empty()) {
            current.clear();
        } else if (!current.empty()) {
            std::string v = obj[current].get<std::string>();
            obj[current] = v.empty() ? trimmed(line) : v + "\n" + trimmed(line);
        }
    }
    if (obj.empty()) return std::nullopt;
    return obj;
}

void describe_fields(const std::vector<FieldSpec>& fields, json& out) {
    for (const auto& f : fields) {
        switch (f.type) {
        case FieldType::String: out[f.name] = "<text>"; break;
        case FieldType::Boolean: out[f.name] = "<true|false>"; break;
        case FieldType::Integer: out[f.name] = f.required ? "<integer>" : "<integer, only when applicable>"; break;
        case FieldType::Enum: {
            std::string alts;
            for (const auto& v : f.values) alts += (alts.empty() ? "" : "|") + v;
            out[f.name] = alts;
            break;
        }
        case FieldType::ObjectArray: {
            json item = json::object();
            describe_fields(f.items, item);
            out[f.name] = json::array({item});
            break;
        }
        }
    }
}

}  // namespace

nlohmann::json parse_structured(const ChatResponse& response, const OutputSchema& schema) {
    std::string_view text = response.text;
    std::string why = "no JSON object found";
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
        auto end = object_end(text, pos);
        if (!end) continue;
        json candidate = json::parse(text.substr(pos, *end - pos + 1), nullptr, false);
        if (candidate.is_discarded() || !candidate.is_object()) continue;
        if (auto v = conform(candidate, schema.fields, why)) return *v;
        pos = *end;
    }
    bool flat = std::none_of(schema.fields.begin(), schema.fields.end(),
                             [](const FieldSpec& f) { return f.type == FieldType::ObjectArray && f.required; });
    if (flat) {
        if (auto block = labeled_block(text, schema)) {
            std::string block_why;
            if (auto v = conform(*block, schema.fields, block_why)) return *v;
            why = block_why;
        }
    }
    throw SchemaViolation(schema.name + ": " + why, response.text);
}

std::string describe_schema(const OutputSchema& schema) {
    json out = json::object();
    describe_fields(schema.fields, out);
    return out.dump(2);
}

StructuredReply complete_structured(const CompleteFn& complete, ChatRequest request, const OutputSchema& schema) {
    StructuredReply reply;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        reply.attempts = attempt;
        reply.response = complete(request);
        try {
            reply.value = parse_structured(reply.response, schema);
            return reply;
        } catch (const SchemaViolation& e) {
            if (attempt == 2) {
                throw Error(ErrorKind::AgentOutputError, std::string(to_string(request.agent)) + " output unusable after retry: " +
                                                             e.what() + "\n--- raw ---\n" + e.raw());
            }
            request.messages.push_back({"assistant", e.raw(), {}, {}});
            request.messages.push_back({"user",
                                        "Your previous reply could not be parsed (" + std::string(e.what()) +
                                            "). Respond with one JSON object only, no prose, shaped like:\n" +
                                            describe_schema(schema),
                                        {},
                                        {}});
        }
    }
    return reply;
}

}  // namespace masszz

#pragma once

#include "json.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace masszz {

enum class Agent { Auditor, Judge, Reviewer, Evaluator, Locator, Tracer };

std::string_view to_string(Agent agent) noexcept;
Agent agent_from_string(std::string_view name);

struct ToolSpec {
    std::string name;
    std::string description;
    nlohmann::json parameters;  // JSON schema of the argument object
};

struct ToolCallRequest {
    std::string id;
    std::string name;
    std::string arguments;  // raw JSON text as produced by the model
};

struct Message {
    std::string role;  // system, user, assistant, tool
    std::string text;
    std::vector<ToolCallRequest> tool_calls;  // assistant turns only
    std::string tool_call_id;                 // tool turns only
};

struct ChatRequest {
    Agent agent = Agent::Auditor;
    std::string system_prompt;
    std::vector<Message> messages;
    std::vector<ToolSpec> tool_specs;
    int max_rounds = 1;
    int max_tokens = 2048;
};

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::vector<ToolCallRequest> tool_calls;
    Usage usage;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct TranscriptEntry {
    Agent agent = Agent::Auditor;
    int ordinal = 0;  // 0-based count of earlier requests from the same agent
    ChatResponse response;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;
    bool strict = true;
};

/// File shape: [{agent, ordinal, response:{text, tool_calls:[{id,name,arguments}]}}].
/// An object {"strict": bool, "entries": [...]} is accepted as well.
nlohmann::json to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);
Transcript load_transcript(const std::filesystem::path& path);
void save_transcript(const Transcript& t, const std::filesystem::path& path);

/// Answers from a transcript. Strict mode requires requests to arrive in the
/// transcript's order; lenient mode looks entries up by (agent, ordinal).
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(Transcript transcript);

    ChatResponse complete(const ChatRequest& request) override;

    std::vector<ChatRequest> requests() const;
    int calls(Agent agent) const;
    std::size_t remaining() const;

private:
    mutable std::mutex mu_;
    Transcript transcript_;
    std::size_t cursor_ = 0;
    std::map<Agent, int> counts_;
    std::vector<ChatRequest> log_;
};

struct LiveConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model;
    std::string api_key;
    double temperature = 0.0;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    int max_in_flight = 4;
    int requests_per_minute = 60;
    int timeout_seconds = 120;
};

/// Reads the credential from MAS_SZZ_API_KEY.
std::string api_key_from_env();

/// OpenAI-compatible chat-completions client.
class LiveBackend : public Backend {
public:
    explicit LiveBackend(LiveConfig config);
    ChatResponse complete(const ChatRequest& request) override;

    /// Request body sent for `request`; exposed for tests.
    nlohmann::json request_body(const ChatRequest& request) const;

private:
    void acquire();
    void release();

    LiveConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    std::deque<std::chrono::steady_clock::time_point> recent_;
};

ChatResponse parse_chat_completion(const nlohmann::json& body);

/// Forwards to `inner` and records every response for later replay.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(Backend& inner);
    ChatResponse complete(const ChatRequest& request) override;
    Transcript transcript() const;

private:
    Backend& inner_;
    mutable std::mutex mu_;
    Transcript transcript_;
    std::map<Agent, int> counts_;
};

/// Drops commit-reference lines (Fixes:, cherry-pick notes, reverts, bare hash
/// trailers) so agents cannot shortcut to a known commit. Other lines are kept
/// byte for byte.
std::string sanitize_commit_message(std::string_view text);

// ---------------------------------------------------------------------------
// structured output

enum class FieldType { String, Boolean, Integer, Enum, ObjectArray };

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::String;
    bool required = true;
    std::vector<std::string> values;            // Enum: canonical spellings
    std::map<std::string, std::string> aliases;  // Enum: lowercase alias -> canonical
    std::vector<FieldSpec> items;               // ObjectArray: fields of each element
};

struct OutputSchema {
    std::string name;
    std::vector<FieldSpec> fields;
};

/// Extracts the first JSON object (fenced or bare) that fits `schema`, falling
/// back to a "Key: value" block for schemas without array fields. Enum values
/// come back in their canonical spelling. Throws SchemaViolation.
nlohmann::json parse_structured(const ChatResponse& response, const OutputSchema& schema);

/// JSON rendering of the schema's expected shape, for prompts.
std::string describe_schema(const OutputSchema& schema);

using CompleteFn = std::function<ChatResponse(const ChatRequest&)>;

struct StructuredReply {
    nlohmann::json value;
    ChatResponse response;
    int attempts = 0;
};

/// Completes and parses; on SchemaViolation retries once with a JSON-only
/// reminder, then throws AgentOutputError.
StructuredReply complete_structured(const CompleteFn& complete, ChatRequest request, const OutputSchema& schema);

}  // namespace masszz

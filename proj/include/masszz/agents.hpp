#pragma once

#include "masszz/diff.hpp"
#include "masszz/llm.hpp"
#include "masszz/prompts.hpp"
#include "masszz/repo.hpp"
#include "masszz/tools.hpp"

#include <string>

namespace masszz {

/// What every agent call needs: the gateway, the prompt templates and the
/// per-invocation tool budget.
struct AgentEnv {
    Backend& backend;
    const PromptLibrary& prompts;
    int max_tool_rounds = kDefaultMaxToolRounds;
};

struct AgentReply {
    nlohmann::json value;
    std::string raw;
    int attempts = 0;
    int tool_rounds = 0;  // tool executions across all attempts
};

/// Renders `<name>.system` and `<name>.user` and asks `agent` for output
/// matching `schema`. With a repository the call runs inside the tool loop,
/// scoped to `revision`.
AgentReply ask_agent(AgentEnv& env, Agent agent, std::string_view name, std::map<std::string, std::string> vars,
                     const OutputSchema& schema, const RepoHandle* repo = nullptr, const std::string& revision = {});

/// Diff text for prompts, each hunk introduced by "[hunk N] <path>".
std::string format_hunks(const Diff& diff);
std::string format_hunk(const FileDiff& file, const Hunk& hunk);

}  // namespace masszz

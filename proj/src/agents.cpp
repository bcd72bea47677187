#include "masszz/agents.hpp"

namespace masszz {

AgentReply ask_agent(AgentEnv& env, Agent agent, std::string_view name, std::map<std::string, std::string> vars,
                     const OutputSchema& schema, const RepoHandle* repo, const std::string& revision) {
    vars.emplace("schema", describe_schema(schema));
    ChatRequest req;
    req.agent = agent;
    req.system_prompt = env.prompts.render(std::string(name) + ".system", vars);
    req.messages.push_back({"user", env.prompts.render(std::string(name) + ".user", vars), {}, {}});
    if (repo) {
        req.tool_specs = context_tool_specs();
        req.max_rounds = env.max_tool_rounds + 1;
    }

    AgentReply reply;
    CompleteFn complete = [&](const ChatRequest& r) {
        if (!repo) return env.backend.complete(r);
        ToolLoopStats stats;
        auto resp = run_tool_loop(env.backend, r, *repo, revision, env.max_tool_rounds, &stats);
        reply.tool_rounds += stats.tool_executions;
        return resp;
    };
    auto out = complete_structured(complete, std::move(req), schema);
    reply.value = std::move(out.value);
    reply.raw = std::move(out.response.text);
    reply.attempts = out.attempts;
    return reply;
}

std::string format_hunk(const FileDiff& file, const Hunk& hunk) {
    std::string out = "[hunk " + std::to_string(hunk.index) + "] " + file.path();
    if (file.is_new_file()) out += " (new file)";
    else if (file.is_deleted_file()) out += " (deleted file)";
    else if (*file.old_path != *file.new_path) out += " (renamed from " + *file.old_path + ")";
    out += "\n";
    out += render_hunk(hunk);
    return out;
}

std::string format_hunks(const Diff& diff) {
    std::string out;
    for (const auto& f : diff) {
        if (f.binary) out += "[binary] " + f.path() + "\n";
        for (const auto& h : f.hunks) out += format_hunk(f, h) + "\n";
    }
    return out;
}

}  // namespace masszz

#include "masszz/anchor.hpp"

#include "masszz/error.hpp"

#include <algorithm>
#include <set>

namespace masszz {

using nlohmann::json;

const OutputSchema& reviewer_schema() {
    static const OutputSchema s{
        "Reviewer",
        {{"modification", FieldType::String},
         {"runtime_effect", FieldType::String},
         {"intent", FieldType::String},
         {"category",
          FieldType::Enum,
          true,
          {kCategories.begin(), kCategories.end()},
          {{"feature", "feat"},
           {"features", "feat"},
           {"bugfix", "fix"},
           {"bug fix", "fix"},
           {"bug", "fix"},
           {"documentation", "docs"},
           {"doc", "docs"},
           {"tests", "test"},
           {"testing", "test"},
           {"performance", "perf"},
           {"formatting", "style"},
           {"refactoring", "refactor"}}},
         {"summary", FieldType::String}}};
    return s;
}

const OutputSchema& evaluator_schema() {
    static const OutputSchema s{"Evaluator",
                                {{"verdict",
                                  FieldType::Enum,
                                  true,
                                  {"RELEVANT", "IRRELEVANT"},
                                  {{"not relevant", "IRRELEVANT"}, {"yes", "RELEVANT"}, {"no", "IRRELEVANT"}}},
                                 {"rationale", FieldType::String}}};
    return s;
}

const OutputSchema& locator_schema() {
    static const OutputSchema s{
        "Locator",
        {{"anchors",
          FieldType::ObjectArray,
          true,
          {},
          {},
          {{"line", FieldType::Integer},
           {"side",
            FieldType::Enum,
            true,
            {"old", "new"},
            {{"pre", "old"}, {"before", "old"}, {"-", "old"}, {"post", "new"}, {"after", "new"}, {"+", "new"}}},
           {"reason", FieldType::String, false}}}}};
    return s;
}

namespace {

struct HunkRef {
    const FileDiff* file = nullptr;
    const Hunk* hunk = nullptr;
};

HunkRef hunk_at(const Diff& diff, int index) {
    HunkRef r;
    r.hunk = find_hunk(diff, index, &r.file);
    if (!r.hunk) throw Error(ErrorKind::InvalidArgument, "no hunk " + std::to_string(index));
    return r;
}

std::string root_cause_text(const RootCauseReport& rc) {
    std::string out = rc.summary + "\n";
    for (const auto& e : rc.evidence) {
        out += "- [" + std::string(to_string(e.source));
        if (e.hunk_index) out += " " + std::to_string(*e.hunk_index);
        out += "] " + e.claim + "\n";
    }
    return out;
}

std::string non_empty(const json& v, const char* key, Agent agent) {
    auto s = v.at(key).get<std::string>();
    if (s.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorKind::AgentOutputError, std::string(to_string(agent)) + " left '" + key + "' empty");
    }
    return s;
}

}  // namespace

HunkIntent infer_intent(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix, const Diff& diff,
                        int hunk_index) {
    auto ref = hunk_at(diff, hunk_index);
    std::map<std::string, std::string> vars = {
        {"commit_message", sanitize_commit_message(fix.message)},
        {"hunk", format_hunk(*ref.file, *ref.hunk)},
        {"hunk_index", std::to_string(hunk_index)},
        {"file", ref.file->path()},
        {"categories", [] {
             std::string s;
             for (auto c : kCategories) s += (s.empty() ? "" : ", ") + std::string(c);
             return s;
         }()}};
    auto reply = ask_agent(env, Agent::Reviewer, "reviewer", vars, reviewer_schema(), &repo, fix.id);

    HunkIntent intent;
    intent.hunk_index = hunk_index;
    intent.category = reply.value.at("category").get<std::string>();
    intent.intent_summary = non_empty(reply.value, "summary", Agent::Reviewer);
    intent.trace[0] = non_empty(reply.value, "modification", Agent::Reviewer);
    intent.trace[1] = non_empty(reply.value, "runtime_effect", Agent::Reviewer);
    intent.trace[2] = non_empty(reply.value, "intent", Agent::Reviewer);
    intent.trace[3] = "<" + intent.category + ", " + intent.intent_summary + ">";
    intent.tool_rounds = reply.tool_rounds;
    return intent;
}

RelevanceDecision check_relevance(AgentEnv& env, const HunkIntent& intent, const Diff& diff,
                                  const RootCauseReport& root_cause) {
    if (intent.category != "fix") {
        throw Error(ErrorKind::PreconditionViolation,
                    "relevance check on hunk " + std::to_string(intent.hunk_index) + " of category " + intent.category);
    }
    auto ref = hunk_at(diff, intent.hunk_index);
    std::map<std::string, std::string> vars = {{"root_cause", root_cause_text(root_cause)},
                                               {"hunk", format_hunk(*ref.file, *ref.hunk)},
                                               {"hunk_index", std::to_string(intent.hunk_index)},
                                               {"intent", intent.intent_summary},
                                               {"modification", intent.trace[0]},
                                               {"runtime_effect", intent.trace[1]}};
    auto reply = ask_agent(env, Agent::Evaluator, "evaluator", vars, evaluator_schema());
    RelevanceDecision d;
    d.hunk_index = intent.hunk_index;
    d.verdict = reply.value.at("verdict").get<std::string>() == "RELEVANT" ? Relevance::Relevant : Relevance::Irrelevant;
    d.rationale = reply.value.at("rationale").get<std::string>();
    return d;
}

int new_to_old_line(const FileDiff& file, const Hunk& hunk, int new_no) {
    if (file.is_new_file()) throw Error(ErrorKind::AnchorUnmappable, file.path() + " is a new file");
    const auto& lines = hunk.lines;
    std::size_t i = 0;
    while (i < lines.size() && !(lines[i].new_no && *lines[i].new_no == new_no)) ++i;
    if (i == lines.size()) {
        throw Error(ErrorKind::AnchorUnmappable, "new line " + std::to_string(new_no) + " is outside hunk " +
                                                     std::to_string(hunk.index));
    }
    if (lines[i].kind == LineKind::Context) return *lines[i].old_no;

    std::size_t lo = i, hi = i;
    while (lo > 0 && lines[lo - 1].kind != LineKind::Context) --lo;
    while (hi + 1 < lines.size() && lines[hi + 1].kind != LineKind::Context) ++hi;
    std::optional<std::size_t> best;
    for (std::size_t k = lo; k <= hi; ++k) {
        if (lines[k].kind != LineKind::Deleted) continue;
        auto dist = [&](std::size_t a) { return a > i ? a - i : i - a; };
        if (!best || dist(k) < dist(*best)) best = k;
    }
    if (best) return *lines[*best].old_no;
    for (std::size_t k = lo; k-- > 0;) {
        if (lines[k].kind == LineKind::Context) return *lines[k].old_no;
    }
    for (std::size_t k = hi + 1; k < lines.size(); ++k) {
        if (lines[k].kind == LineKind::Context) return *lines[k].old_no;
    }
    throw Error(ErrorKind::AnchorUnmappable, "hunk " + std::to_string(hunk.index) + " has no pre-patch line");
}

std::vector<AnchorStatement> locate_anchors(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix,
                                            const Diff& diff, int hunk_index, const RootCauseReport& root_cause,
                                            std::vector<std::string>* notes) {
    auto ref = hunk_at(diff, hunk_index);
    if (ref.file->is_new_file()) throw Error(ErrorKind::AnchorUnmappable, ref.file->path() + " is a new file");
    if (fix.is_root()) throw Error(ErrorKind::RootCommitFix, fix.id);
    const std::string& parent = fix.parent_ids.front();
    const std::string& path = *ref.file->old_path;
    auto content = repo.file_at(parent, path);
    if (!content) throw Error(ErrorKind::AnchorUnmappable, path + " is absent at the parent of the fix");
    auto file_lines = split_lines(*content);

    std::map<std::string, std::string> vars = {{"root_cause", root_cause_text(root_cause)},
                                               {"hunk", format_hunk(*ref.file, *ref.hunk)},
                                               {"hunk_index", std::to_string(hunk_index)},
                                               {"file", path}};
    auto reply = ask_agent(env, Agent::Locator, "locator", vars, locator_schema(), &repo, parent);

    const Hunk& h = *ref.hunk;
    auto note = [&](std::string s) {
        if (notes) notes->push_back(std::move(s));
    };
    std::vector<AnchorStatement> out;
    for (const auto& a : reply.value.at("anchors")) {
        int line = a.at("line").get<int>();
        std::string side = a.at("side").get<std::string>();
        int old_no = 0;
        try {
            if (side == "new") {
                old_no = new_to_old_line(*ref.file, h, line);
            } else {
                auto it = std::find_if(h.lines.begin(), h.lines.end(),
                                       [&](const ChangedLine& l) { return l.old_no && *l.old_no == line; });
                if (it == h.lines.end()) {
                    throw Error(ErrorKind::AnchorUnmappable, "old line " + std::to_string(line) + " is outside hunk " +
                                                                 std::to_string(hunk_index));
                }
                old_no = line;
            }
        } catch (const Error& e) {
            note(std::string("Locator anchor dropped: ") + e.what());
            continue;
        }
        if (old_no < 1 || old_no > static_cast<int>(file_lines.size())) {
            note("Locator anchor dropped: line " + std::to_string(old_no) + " beyond " + path);
            continue;
        }
        out.push_back({path, old_no, file_lines[static_cast<std::size_t>(old_no - 1)], hunk_index});
    }
    if (out.empty()) throw Error(ErrorKind::AnchorUnmappable, "Locator named no usable line in hunk " + std::to_string(hunk_index));
    return out;
}

std::vector<AnchorStatement> fallback_anchors(const Diff& diff, const RepoHandle& repo, const std::string& parent) {
    std::vector<AnchorStatement> out;
    for (const auto& d : deleted_or_modified_lines(diff)) {
        if (!repo.file_at(parent, d.path)) continue;
        out.push_back({d.path, d.old_no, d.text, d.hunk_index});
    }
    return out;
}

AnchorSelection select_anchors(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix, const Diff& diff,
                               const RootCauseReport& root_cause) {
    AnchorSelection sel;
    for (const auto& f : diff) {
        for (const auto& h : f.hunks) sel.intents.push_back(infer_intent(env, repo, fix, diff, h.index));
    }
    std::vector<int> relevant;
    for (const auto& intent : sel.intents) {
        if (intent.category != "fix") continue;
        sel.relevance.push_back(check_relevance(env, intent, diff, root_cause));
        if (sel.relevance.back().verdict == Relevance::Relevant) relevant.push_back(intent.hunk_index);
    }
    std::set<std::pair<std::string, int>> seen;
    for (int idx : relevant) {
        std::vector<AnchorStatement> found;
        try {
            found = locate_anchors(env, repo, fix, diff, idx, root_cause, &sel.notes);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::AnchorUnmappable) throw;
            sel.notes.push_back(e.what());
            continue;
        }
        for (auto& a : found) {
            if (seen.insert({a.file, a.line_no}).second) sel.anchors.push_back(std::move(a));
        }
    }
    if (sel.anchors.empty()) {
        sel.degraded = true;
        sel.notes.push_back("no anchor selected; falling back to the deleted lines of the fix");
        for (auto& a : fallback_anchors(diff, repo, fix.parent_ids.front())) {
            if (seen.insert({a.file, a.line_no}).second) sel.anchors.push_back(std::move(a));
        }
    }
    return sel;
}

json to_json(const HunkIntent& i) {
    return {{"hunk_index", i.hunk_index},
            {"category", i.category},
            {"intent_summary", i.intent_summary},
            {"trace", {i.trace[0], i.trace[1], i.trace[2], i.trace[3]}},
            {"tool_rounds", i.tool_rounds}};
}

json to_json(const RelevanceDecision& d) {
    return {{"hunk_index", d.hunk_index},
            {"verdict", d.verdict == Relevance::Relevant ? "RELEVANT" : "IRRELEVANT"},
            {"rationale", d.rationale}};
}

json to_json(const AnchorStatement& a) {
    return {{"file", a.file}, {"line_no", a.line_no}, {"snippet", a.snippet}, {"origin_hunk", a.origin_hunk}};
}

json to_json(const AnchorSelection& s) {
    json intents = json::array(), relevance = json::array(), anchors = json::array();
    for (const auto& i : s.intents) intents.push_back(to_json(i));
    for (const auto& d : s.relevance) relevance.push_back(to_json(d));
    for (const auto& a : s.anchors) anchors.push_back(to_json(a));
    return {{"intents", std::move(intents)},
            {"relevance", std::move(relevance)},
            {"anchors", std::move(anchors)},
            {"degraded", s.degraded},
            {"notes", s.notes}};
}

}  // namespace masszz

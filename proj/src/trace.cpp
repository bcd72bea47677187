#include "masszz/trace.hpp"

#include "masszz/error.hpp"

#include <algorithm>

namespace masszz {

using nlohmann::json;

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Present ? "Present" : "Absent"; }

std::string_view to_string(Termination t) noexcept {
    switch (t) {
    case Termination::AbsenceFound: return "AbsenceFound";
    case Termination::HistoryRoot: return "HistoryRoot";
    case Termination::DepthCap: return "DepthCap";
    case Termination::Error: return "Error";
    }
    return "Error";
}

const OutputSchema& tracer_schema() {
    static const OutputSchema s{"Tracer",
                                {{"verdict",
                                  FieldType::Enum,
                                  true,
                                  {"Present", "Absent"},
                                  {{"vulnerable", "Present"}, {"yes", "Present"}, {"not present", "Absent"}, {"no", "Absent"}}},
                                 {"rationale", FieldType::String}}};
    return s;
}

namespace {

constexpr int kSnippetRadius = 10;

std::string numbered_window(const std::string& content, int center) {
    auto lines = split_lines(content);
    int lo = std::max(1, center - kSnippetRadius);
    int hi = std::min(static_cast<int>(lines.size()), center + kSnippetRadius);
    std::string out;
    for (int i = lo; i <= hi; ++i) {
        out += (i == center ? ">" : " ") + std::to_string(i) + ": " + lines[static_cast<std::size_t>(i - 1)] + "\n";
    }
    return out;
}

std::string file_change(const RepoHandle& repo, const CommitMeta& c, const std::string& path) {
    if (c.is_root()) return "(root commit: file added)\n";
    Diff d = parse_unified_diff(repo.commit_file_diff(c.id, path, repo.default_context()));
    for (const auto& f : d) {
        if (f.path() == path) {
            std::string out;
            for (const auto& h : f.hunks) out += render_hunk(h);
            return out.empty() ? "(no textual change to this file)\n" : out;
        }
    }
    return "(this commit does not change the file)\n";
}

}  // namespace

PresenceVerdict assess_presence(AgentEnv& env, const RepoHandle& repo, const std::string& commit,
                                const LinePosition& anchor_pos, const RootCauseReport& root_cause) {
    CommitMeta c = repo.commit(commit);
    auto content = repo.file_at(c.id, anchor_pos.file);
    if (!content) return {Verdict::Absent, anchor_pos.file + " does not exist at " + c.short_id, 0, true};

    std::string rc = root_cause.summary + "\n";
    for (const auto& e : root_cause.evidence) rc += "- " + e.claim + "\n";
    std::map<std::string, std::string> vars = {{"root_cause", rc},
                                               {"commit", c.id},
                                               {"commit_message", sanitize_commit_message(c.message)},
                                               {"file", anchor_pos.file},
                                               {"line", std::to_string(anchor_pos.line_no)},
                                               {"code", numbered_window(*content, anchor_pos.line_no)},
                                               {"change", file_change(repo, c, anchor_pos.file)}};
    auto reply = ask_agent(env, Agent::Tracer, "tracer", vars, tracer_schema(), &repo, c.id);
    PresenceVerdict v;
    v.verdict = reply.value.at("verdict").get<std::string>() == "Present" ? Verdict::Present : Verdict::Absent;
    v.rationale = reply.value.at("rationale").get<std::string>();
    v.tool_rounds = reply.tool_rounds;
    return v;
}

TraceResult trace_anchor(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix, const AnchorStatement& anchor,
                         const RootCauseReport& root_cause, int max_depth) {
    TraceResult tr;
    tr.anchor = anchor;
    std::optional<std::string> last_present;
    auto add_step = [&](const std::string& commit, const LinePosition& pos) {
        auto v = assess_presence(env, repo, commit, pos, root_cause);
        tr.steps.push_back({commit, pos, v.verdict, v.rationale, v.tool_rounds, v.file_absent});
        return v.verdict;
    };
    auto absent_stop = [&] {
        tr.terminated_by = Termination::AbsenceFound;
        tr.vic = last_present;
        tr.needs_review = !last_present;
    };
    try {
        if (fix.is_root()) throw Error(ErrorKind::RootCommitFix, fix.id);
        std::string revision = fix.parent_ids.front();
        LinePosition pos{anchor.file, anchor.line_no};
        for (;;) {
            if (static_cast<int>(tr.steps.size()) >= max_depth) {
                tr.terminated_by = Termination::DepthCap;
                tr.vic = last_present;
                break;
            }
            BlameRecord rec = repo.blame_line(revision, pos.file, pos.line_no);
            LinePosition at{rec.file_path, rec.line_no};
            if (add_step(rec.commit_id, at) == Verdict::Absent) {
                absent_stop();
                break;
            }
            last_present = rec.commit_id;
            CommitMeta c = repo.commit(rec.commit_id);
            if (c.is_root()) {
                tr.terminated_by = Termination::HistoryRoot;
                tr.vic = c.id;
                break;
            }
            const std::string& parent = c.parent_ids.front();
            auto mapped = map_line_backward(repo, c.id, at.file, at.line_no, 0.0);
            bool usable = mapped && repo.file_at(parent, mapped->file).has_value();
            if (!usable) {
                // The line has no pre-image: judge the parent once and stop.
                if (add_step(parent, mapped.value_or(at)) == Verdict::Absent) {
                    absent_stop();
                } else {
                    tr.terminated_by = Termination::HistoryRoot;
                    tr.vic = parent;
                }
                break;
            }
            revision = parent;
            pos = *mapped;
        }
    } catch (const Error& e) {
        tr.terminated_by = Termination::Error;
        tr.error = e.what();
        tr.vic = last_present;
    }
    return tr;
}

VicResult identify_vics(std::vector<TraceResult> traces, const std::string& case_id, bool anchors_degraded) {
    VicResult r;
    r.case_id = case_id;
    r.degraded = anchors_degraded;
    for (const auto& t : traces) {
        if (t.vic) r.vics.insert(*t.vic);
        if (t.terminated_by == Termination::DepthCap || t.terminated_by == Termination::Error) r.degraded = true;
    }
    r.traces = std::move(traces);
    return r;
}

json to_json(const TraceStep& s) {
    json j = {{"commit", s.commit},
              {"file", s.anchor_pos.file},
              {"line_no", s.anchor_pos.line_no},
              {"verdict", to_string(s.verdict)},
              {"rationale", s.rationale},
              {"tool_rounds", s.tool_rounds}};
    if (s.file_absent) j["file_absent"] = true;
    return j;
}

json to_json(const TraceResult& t) {
    json steps = json::array();
    for (const auto& s : t.steps) steps.push_back(to_json(s));
    json j = {{"anchor", to_json(t.anchor)},
              {"steps", std::move(steps)},
              {"vic", t.vic ? json(*t.vic) : json(nullptr)},
              {"terminated_by", to_string(t.terminated_by)},
              {"needs_review", t.needs_review}};
    if (!t.error.empty()) j["error"] = t.error;
    return j;
}

json to_json(const VicResult& v) {
    json traces = json::array();
    for (const auto& t : v.traces) traces.push_back(to_json(t));
    return {{"case_id", v.case_id},
            {"vics", std::vector<std::string>(v.vics.begin(), v.vics.end())},
            {"traces", std::move(traces)},
            {"degraded", v.degraded}};
}

}  // namespace masszz

#include "masszz/root_cause.hpp"

#include "masszz/error.hpp"

namespace masszz {

using nlohmann::json;

CaseInputs prepare_inputs(const RepoHandle& repo, const std::string& cve_id, const std::string& description,
                          std::string_view fix) {
    auto cd = repo.show_commit(fix);
    return {cve_id, description, sanitize_commit_message(cd.meta.message), parse_unified_diff(cd.diff)};
}

std::string_view to_string(EvidenceSource s) noexcept {
    switch (s) {
    case EvidenceSource::CveDescription: return "cve_description";
    case EvidenceSource::CommitMessage: return "commit_message";
    case EvidenceSource::Hunk: return "hunk";
    }
    return "hunk";
}

std::string_view to_string(Decision d) noexcept { return d == Decision::Pass ? "Pass" : "Fail"; }

const OutputSchema& auditor_schema() {
    static const OutputSchema s{
        "Auditor",
        {{"summary", FieldType::String},
         {"evidence",
          FieldType::ObjectArray,
          true,
          {},
          {},
          {{"claim", FieldType::String},
           {"source",
            FieldType::Enum,
            true,
            {"cve_description", "commit_message", "hunk"},
            {{"cve", "cve_description"},
             {"description", "cve_description"},
             {"cve description", "cve_description"},
             {"message", "commit_message"},
             {"commit message", "commit_message"},
             {"commit", "commit_message"},
             {"diff", "hunk"},
             {"patch", "hunk"},
             {"patch hunk", "hunk"}}},
           {"hunk_index", FieldType::Integer, false}}}}};
    return s;
}

const OutputSchema& judge_schema() {
    static const OutputSchema s{"Judge",
                                {{"decision", FieldType::Enum, true, {"Pass", "Fail"}, {{"passed", "Pass"}, {"failed", "Fail"}}},
                                 {"traceability_ok", FieldType::Boolean},
                                 {"consistency_ok", FieldType::Boolean},
                                 {"feedback", FieldType::String, false}}};
    return s;
}

namespace {

std::map<std::string, std::string> base_vars(const CaseInputs& in) {
    return {{"cve_id", in.cve_id},
            {"cve_description", in.description},
            {"commit_message", in.commit_message},
            {"diff", format_hunks(in.diff)},
            {"hunk_count", std::to_string(total_hunks(in.diff))}};
}

EvidenceSource source_from(const std::string& s) {
    if (s == "cve_description") return EvidenceSource::CveDescription;
    if (s == "commit_message") return EvidenceSource::CommitMessage;
    return EvidenceSource::Hunk;
}

}  // namespace

RootCauseReport audit(AgentEnv& env, const CaseInputs& inputs, const std::optional<std::string>& feedback, int attempt) {
    auto vars = base_vars(inputs);
    vars["feedback"] = feedback.value_or("");
    auto reply = ask_agent(env, Agent::Auditor, "auditor", vars, auditor_schema());

    RootCauseReport r;
    r.attempt = attempt;
    r.summary = reply.value.at("summary").get<std::string>();
    if (r.summary.empty()) throw Error(ErrorKind::AgentOutputError, "Auditor returned an empty summary");
    int hunks = static_cast<int>(total_hunks(inputs.diff));
    for (const auto& e : reply.value.at("evidence")) {
        EvidencePoint p;
        p.claim = e.at("claim").get<std::string>();
        p.source = source_from(e.at("source").get<std::string>());
        if (p.source == EvidenceSource::Hunk) {
            if (!e.contains("hunk_index")) throw Error(ErrorKind::AgentOutputError, "hunk evidence without hunk_index");
            int idx = e.at("hunk_index").get<int>();
            if (idx < 0 || idx >= hunks) {
                throw Error(ErrorKind::AgentOutputError,
                            "evidence cites hunk " + std::to_string(idx) + " of " + std::to_string(hunks));
            }
            p.hunk_index = idx;
        }
        r.evidence.push_back(std::move(p));
    }
    if (r.evidence.empty()) throw Error(ErrorKind::AgentOutputError, "Auditor returned no evidence");
    return r;
}

JudgeVerdict judge(AgentEnv& env, const RootCauseReport& report, const CaseInputs& inputs) {
    auto vars = base_vars(inputs);
    vars["report"] = to_json(report).dump(2);
    auto reply = ask_agent(env, Agent::Judge, "judge", vars, judge_schema());

    JudgeVerdict v;
    v.decision = reply.value.at("decision").get<std::string>() == "Pass" ? Decision::Pass : Decision::Fail;
    v.traceability_ok = reply.value.at("traceability_ok").get<bool>();
    v.consistency_ok = reply.value.at("consistency_ok").get<bool>();
    v.feedback = reply.value.value("feedback", std::string{});
    bool both = v.traceability_ok && v.consistency_ok;
    if ((v.decision == Decision::Pass) != both) {
        throw Error(ErrorKind::AgentOutputError, "Judge decision " + std::string(to_string(v.decision)) +
                                                     " contradicts traceability_ok=" + (v.traceability_ok ? "true" : "false") +
                                                     ", consistency_ok=" + (v.consistency_ok ? "true" : "false"));
    }
    if (v.decision == Decision::Fail && v.feedback.empty()) {
        throw Error(ErrorKind::AgentOutputError, "Judge failed the report without feedback");
    }
    return v;
}

RootCauseOutcome root_cause_loop(AgentEnv& env, const CaseInputs& inputs, int budget) {
    if (budget < 1) throw Error(ErrorKind::InvalidArgument, "budget must be >= 1");
    RootCauseOutcome out;
    std::optional<std::string> feedback;
    for (int round = 1; round <= budget; ++round) {
        auto report = audit(env, inputs, feedback, round);
        auto verdict = judge(env, report, inputs);
        out.history.emplace_back(report, verdict);
        out.report = std::move(report);
        out.verdict = std::move(verdict);
        out.rounds_used = round;
        if (out.verdict.decision == Decision::Pass) return out;
        feedback = out.verdict.feedback;
    }
    out.degraded = true;
    return out;
}

json to_json(const RootCauseReport& r) {
    json ev = json::array();
    for (const auto& e : r.evidence) {
        json je = {{"claim", e.claim}, {"source", to_string(e.source)}};
        if (e.hunk_index) je["hunk_index"] = *e.hunk_index;
        ev.push_back(std::move(je));
    }
    return {{"summary", r.summary}, {"evidence", std::move(ev)}, {"attempt", r.attempt}};
}

json to_json(const JudgeVerdict& v) {
    return {{"decision", to_string(v.decision)},
            {"traceability_ok", v.traceability_ok},
            {"consistency_ok", v.consistency_ok},
            {"feedback", v.feedback}};
}

json to_json(const RootCauseOutcome& o) {
    json history = json::array();
    for (const auto& [r, v] : o.history) history.push_back({{"report", to_json(r)}, {"verdict", to_json(v)}});
    return {{"report", to_json(o.report)},
            {"verdict", to_json(o.verdict)},
            {"rounds_used", o.rounds_used},
            {"degraded", o.degraded},
            {"history", std::move(history)}};
}

}  // namespace masszz

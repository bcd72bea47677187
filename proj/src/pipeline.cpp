#include "masszz/pipeline.hpp"

namespace masszz {

CaseRecord run_mas(AgentEnv& env, const RepoHandle& repo, const std::string& cve_id, const std::string& description,
                   std::string_view fix, const RunConfig& config) {
    CommitMeta meta = repo.commit(fix);
    CaseInputs inputs = prepare_inputs(repo, cve_id, description, meta.id);

    CaseRecord rec;
    rec.cve_id = cve_id;
    rec.fix_commit = meta.id;
    rec.root_cause = root_cause_loop(env, inputs, config.budget);
    rec.anchors = select_anchors(env, repo, meta, inputs.diff, rec.root_cause.report);

    std::vector<TraceResult> traces;
    for (const auto& a : rec.anchors.anchors) {
        traces.push_back(trace_anchor(env, repo, meta, a, rec.root_cause.report, config.max_depth));
    }
    rec.result = identify_vics(std::move(traces), cve_id, rec.anchors.degraded);
    return rec;
}

nlohmann::json to_json(const CaseRecord& r) {
    return {{"cve_id", r.cve_id},
            {"fix_commit", r.fix_commit},
            {"root_cause", to_json(r.root_cause)},
            {"anchor_selection", to_json(r.anchors)},
            {"result", to_json(r.result)},
            {"degraded", r.degraded()}};
}

}  // namespace masszz

#pragma once

#include "masszz/anchor.hpp"
#include "masszz/config.hpp"
#include "masszz/root_cause.hpp"
#include "masszz/trace.hpp"

namespace masszz {

/// Everything one MAS-SZZ run produced for a case, kept for auditing.
struct CaseRecord {
    std::string cve_id;
    std::string fix_commit;
    RootCauseOutcome root_cause;
    AnchorSelection anchors;
    VicResult result;

    bool degraded() const noexcept { return root_cause.degraded || anchors.degraded || result.degraded; }
};

/// Root-cause analysis, anchor selection, then one trace per anchor.
CaseRecord run_mas(AgentEnv& env, const RepoHandle& repo, const std::string& cve_id, const std::string& description,
                   std::string_view fix, const RunConfig& config);

nlohmann::json to_json(const CaseRecord& r);

}  // namespace masszz

#pragma once

#include "masszz/agents.hpp"

#include <optional>
#include <string>
#include <vector>

namespace masszz {

/// Inputs shared by the stage-1 agents. The commit message is already
/// sanitized.
struct CaseInputs {
    std::string cve_id;
    std::string description;
    std::string commit_message;
    Diff diff;
};

CaseInputs prepare_inputs(const RepoHandle& repo, const std::string& cve_id, const std::string& description,
                          std::string_view fix);

enum class EvidenceSource { CveDescription, CommitMessage, Hunk };

struct EvidencePoint {
    std::string claim;
    EvidenceSource source = EvidenceSource::Hunk;
    std::optional<int> hunk_index;  // set iff source == Hunk
};

struct RootCauseReport {
    std::string summary;
    std::vector<EvidencePoint> evidence;
    int attempt = 1;
};

enum class Decision { Pass, Fail };

struct JudgeVerdict {
    Decision decision = Decision::Fail;
    bool traceability_ok = false;
    bool consistency_ok = false;
    std::string feedback;
};

struct RootCauseOutcome {
    RootCauseReport report;
    JudgeVerdict verdict;
    int rounds_used = 0;
    bool degraded = false;  // budget ran out without a Pass
    std::vector<std::pair<RootCauseReport, JudgeVerdict>> history;
};

inline constexpr int kDefaultBudget = 3;

const OutputSchema& auditor_schema();
const OutputSchema& judge_schema();

/// Throws AgentOutputError when the reply cannot be parsed after one retry or
/// cites a hunk the diff does not have.
RootCauseReport audit(AgentEnv& env, const CaseInputs& inputs, const std::optional<std::string>& feedback,
                      int attempt = 1);

/// Throws AgentOutputError when the decision contradicts the two checks.
JudgeVerdict judge(AgentEnv& env, const RootCauseReport& report, const CaseInputs& inputs);

/// Audit/judge rounds until a Pass or `budget` audits.
RootCauseOutcome root_cause_loop(AgentEnv& env, const CaseInputs& inputs, int budget = kDefaultBudget);

std::string_view to_string(EvidenceSource s) noexcept;
std::string_view to_string(Decision d) noexcept;
nlohmann::json to_json(const RootCauseReport& r);
nlohmann::json to_json(const JudgeVerdict& v);
nlohmann::json to_json(const RootCauseOutcome& o);

}  // namespace masszz

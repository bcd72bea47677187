#pragma once

#include "masszz/anchor.hpp"
#include "masszz/root_cause.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace masszz {

enum class Verdict { Present, Absent };
enum class Termination { AbsenceFound, HistoryRoot, DepthCap, Error };

struct TraceStep {
    std::string commit;
    LinePosition anchor_pos;  // at `commit`
    Verdict verdict = Verdict::Absent;
    std::string rationale;
    int tool_rounds = 0;
    bool file_absent = false;  // verdict forced without asking the Tracer
};

struct TraceResult {
    AnchorStatement anchor;
    std::vector<TraceStep> steps;  // newest first
    std::optional<std::string> vic;
    Termination terminated_by = Termination::Error;
    bool needs_review = false;  // first verdict was Absent
    std::string error;
};

struct VicResult {
    std::string case_id;
    std::set<std::string> vics;
    std::vector<TraceResult> traces;
    bool degraded = false;
};

inline constexpr int kDefaultMaxDepth = 50;

const OutputSchema& tracer_schema();

struct PresenceVerdict {
    Verdict verdict = Verdict::Absent;
    std::string rationale;
    int tool_rounds = 0;
    bool file_absent = false;
};

/// Tracer verdict at `commit`, tools scoped to that commit. When the anchor's
/// file does not exist there the verdict is Absent without a model call.
PresenceVerdict assess_presence(AgentEnv& env, const RepoHandle& repo, const std::string& commit,
                                const LinePosition& anchor_pos, const RootCauseReport& root_cause);

/// Blame-driven walk from the parent of the fix back to the last revision the
/// Tracer still judges vulnerable. Repository and agent failures end the walk
/// with Termination::Error and keep the steps made so far.
TraceResult trace_anchor(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix, const AnchorStatement& anchor,
                         const RootCauseReport& root_cause, int max_depth = kDefaultMaxDepth);

/// Union of the per-anchor VICs. Degraded when a trace hit the depth cap or an
/// error, or when `anchors_degraded`.
VicResult identify_vics(std::vector<TraceResult> traces, const std::string& case_id, bool anchors_degraded = false);

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(Termination t) noexcept;
nlohmann::json to_json(const TraceStep& s);
nlohmann::json to_json(const TraceResult& t);
nlohmann::json to_json(const VicResult& v);

}  // namespace masszz

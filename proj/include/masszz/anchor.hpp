#pragma once

#include "masszz/agents.hpp"
#include "masszz/root_cause.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace masszz {

/// Conventional Commits change categories.
inline constexpr std::array<std::string_view, 10> kCategories = {"feat",     "fix",  "build", "chore", "ci",
                                                                 "docs",     "style", "refactor", "perf", "test"};

struct HunkIntent {
    int hunk_index = 0;
    std::string category;
    std::string intent_summary;
    std::array<std::string, 4> trace;  // modification, runtime effect, inferred intent, distilled tuple
    int tool_rounds = 0;
};

enum class Relevance { Relevant, Irrelevant };

struct RelevanceDecision {
    int hunk_index = 0;
    Relevance verdict = Relevance::Irrelevant;
    std::string rationale;
};

struct AnchorStatement {
    std::string file;  // path at the parent of the fix
    int line_no = 0;   // 1-based, at the parent of the fix
    std::string snippet;
    int origin_hunk = 0;
    bool operator==(const AnchorStatement&) const = default;
};

struct AnchorSelection {
    std::vector<HunkIntent> intents;
    std::vector<RelevanceDecision> relevance;
    std::vector<AnchorStatement> anchors;
    bool degraded = false;  // anchors came from the deleted-lines fallback
    std::vector<std::string> notes;
};

const OutputSchema& reviewer_schema();
const OutputSchema& evaluator_schema();
const OutputSchema& locator_schema();

/// Reviewer, with tools scoped to the fix commit.
HunkIntent infer_intent(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix, const Diff& diff,
                        int hunk_index);

/// Evaluator. Throws PreconditionViolation unless intent.category is "fix".
RelevanceDecision check_relevance(AgentEnv& env, const HunkIntent& intent, const Diff& diff,
                                  const RootCauseReport& root_cause);

/// Old-side line hosting a line the fix names in new-file coordinates. A
/// context line maps to itself; an added line maps to the nearest deleted line
/// of its change block, or, for an added-only block, to the nearest preceding
/// (else following) context line. Throws AnchorUnmappable.
int new_to_old_line(const FileDiff& file, const Hunk& hunk, int new_no);

/// Locator, with tools scoped to the parent of the fix. Throws
/// AnchorUnmappable for hunks of new files.
/// Lines the Locator names outside the hunk are dropped with a note; when
/// none is usable the call throws AnchorUnmappable as well.
std::vector<AnchorStatement> locate_anchors(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix,
                                            const Diff& diff, int hunk_index, const RootCauseReport& root_cause,
                                            std::vector<std::string>* notes = nullptr);

/// Reviewer over every hunk, Evaluator over "fix" hunks, Locator over the
/// relevant ones, deduplicated by (file, line). Falls back to the deleted lines
/// of the fix when nothing survives.
AnchorSelection select_anchors(AgentEnv& env, const RepoHandle& repo, const CommitMeta& fix, const Diff& diff,
                               const RootCauseReport& root_cause);

/// Deleted lines of the fix as anchors.
std::vector<AnchorStatement> fallback_anchors(const Diff& diff, const RepoHandle& repo, const std::string& parent);

nlohmann::json to_json(const HunkIntent& i);
nlohmann::json to_json(const RelevanceDecision& d);
nlohmann::json to_json(const AnchorStatement& a);
nlohmann::json to_json(const AnchorSelection& s);

}  // namespace masszz

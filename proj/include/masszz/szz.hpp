#pragma once

#include "json.hpp"
#include "masszz/repo.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace masszz {

struct CandidateSet {
    std::string algorithm;
    std::string fix_commit;
    std::set<std::string> candidates;
    /// (old path, old line) of each considered fix line -> commit blamed for it.
    std::map<std::pair<std::string, int>, std::string> per_line;
    std::vector<std::string> warnings;
};

/// {algorithm, fix, candidates:[...], per_line:{"path:line":"hash"}, warnings:[...]}
nlohmann::json to_json(const CandidateSet& set);

inline constexpr double kDefaultVszzThreshold = 0.75;
inline constexpr int kVszzMaxSteps = 200;

CandidateSet run_bszz(const RepoHandle& repo, std::string_view fix);
CandidateSet run_agszz(const RepoHandle& repo, std::string_view fix);
CandidateSet run_maszz(const RepoHandle& repo, std::string_view fix);

/// Both throw EmptyCandidates when MA-SZZ finds nothing.
CandidateSet run_lszz(const RepoHandle& repo, std::string_view fix);
CandidateSet run_rszz(const RepoHandle& repo, std::string_view fix);

CandidateSet run_vszz(const RepoHandle& repo, std::string_view fix, double threshold = kDefaultVszzThreshold);

/// Baseline names accepted by run_baseline, in report order.
const std::vector<std::string>& baseline_names();

/// Dispatches on "bszz", "agszz", "maszz", "lszz", "rszz" or "vszz".
CandidateSet run_baseline(std::string_view algorithm, const RepoHandle& repo, std::string_view fix,
                          double vszz_threshold = kDefaultVszzThreshold);

}  // namespace masszz

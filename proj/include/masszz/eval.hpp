#pragma once

#include "json.hpp"
#include "masszz/config.hpp"
#include "masszz/llm.hpp"
#include "masszz/pipeline.hpp"
#include "masszz/prompts.hpp"
#include "masszz/repo.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace masszz {

struct VulnCase {
    std::string cve_id;
    std::string repo;  // clone URL, absolute path, or path relative to the dataset file
    std::string fix_commit;
    std::vector<std::string> true_vics;
    std::string description;
    std::string language;
};

struct Dataset {
    std::string name;
    std::filesystem::path dir;
    std::vector<VulnCase> cases;
};

/// JSON-lines, one object per case:
/// {"cve_id","repo","fix_commit","true_vics":[...],"description","language"}.
/// Throws SchemaError carrying the 1-based line number.
Dataset load_dataset(const std::filesystem::path& path);

enum class Convention { Standard, Swapped };
std::string_view to_string(Convention c) noexcept;

struct Metrics {
    int hits = 0;
    int n_true = 0;
    int n_identified = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Convention convention = Convention::Standard;
};

/// Same commit when one id is a prefix of the other (case-insensitive).
bool same_commit(std::string_view a, std::string_view b) noexcept;

/// Identified ids that match some truth id; every truth id is matched at most once.
int count_hits(const std::vector<std::string>& identified, const std::vector<std::string>& truth);

double harmonic_mean(double p, double r) noexcept;

/// Per-case sets, aligned by index. Duplicates inside a set are ignored.
Metrics compute_metrics(const std::vector<std::vector<std::string>>& identified,
                        const std::vector<std::vector<std::string>>& truth, Convention convention);

struct CaseOutcome {
    std::string cve_id;
    std::vector<std::string> identified;
    std::vector<std::string> hits;  // identified ids that matched the truth
    bool degraded = false;
    std::string error;  // non-empty when the case failed
    nlohmann::json detail;  // candidate set or MAS-SZZ case record
};

struct AlgorithmRow {
    std::string algorithm;
    Metrics standard;
    Metrics swapped;
    int failed_cases = 0;
    int degraded_cases = 0;
};

struct SkippedCase {
    std::string cve_id;
    std::string reason;
};

struct EvalReport {
    std::string dataset;
    int cases = 0;
    std::vector<AlgorithmRow> rows;
    std::map<std::string, std::vector<CaseOutcome>> per_case;
    std::vector<SkippedCase> skipped;
};

using BackendFactory = std::function<std::unique_ptr<Backend>(const VulnCase&)>;

struct EvalOptions {
    RunConfig config;
    BackendFactory backend_factory;  // required for "mas"
    const PromptLibrary* prompts = nullptr;  // required for "mas"
};

/// Local path for a case's repository. URLs are cloned (bare) once into
/// `cache_dir/<sha1 of URL>`. Throws NotARepository or GitFailure.
std::filesystem::path materialize_repo(const std::string& repo, const std::filesystem::path& dataset_dir,
                                       const std::filesystem::path& cache_dir);

/// "bszz".."vszz" and "mas". Cases run concurrently up to
/// config.parallelism; a failing case is recorded, never fatal.
EvalReport run_evaluation(const std::vector<std::string>& algorithms, const Dataset& dataset, const EvalOptions& options);

/// Same result computed one case at a time.
EvalReport run_evaluation_serial(const std::vector<std::string>& algorithms, const Dataset& dataset,
                                 const EvalOptions& options);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EvalReport& r);
std::string render_markdown(const EvalReport& r);
std::string render_csv(const EvalReport& r);

}  // namespace masszz

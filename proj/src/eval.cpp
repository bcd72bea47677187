#include "masszz/eval.hpp"

#include "masszz/error.hpp"
#include "masszz/process.hpp"
#include "masszz/szz.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include <omp.h>
#include <openssl/evp.h>

namespace fs = std::filesystem;

namespace masszz {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string sha1_hex(const std::string& s) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(s.data(), s.size(), md, &len, EVP_sha1(), nullptr);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += digits[md[i] >> 4];
        out += digits[md[i] & 15];
    }
    return out;
}

bool is_url(const std::string& repo) {
    return repo.find("://") != std::string::npos || repo.rfind("git@", 0) == 0;
}

std::vector<std::string> unique_ids(const std::vector<std::string>& ids) {
    std::vector<std::string> out;
    for (const auto& id : ids) {
        if (std::none_of(out.begin(), out.end(), [&](const std::string& o) { return same_commit(o, id); })) out.push_back(id);
    }
    return out;
}

std::string format_ratio(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string_view to_string(Convention c) noexcept { return c == Convention::Standard ? "standard" : "swapped"; }

Dataset load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read dataset " + path.string());
    Dataset ds;
    ds.name = path.stem().string();
    ds.dir = fs::absolute(path).parent_path();
    std::set<std::string> seen;
    std::size_t ln = 0;
    for (std::string line; std::getline(in, line);) {
        ++ln;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw SchemaError(ln, "not a JSON object");
        auto str = [&](const char* key, bool required) {
            if (!j.contains(key)) {
                if (required) throw SchemaError(ln, std::string("missing '") + key + "'");
                return std::string{};
            }
            if (!j.at(key).is_string()) throw SchemaError(ln, std::string("'") + key + "' must be a string");
            return j.at(key).get<std::string>();
        };
        VulnCase c;
        c.cve_id = str("cve_id", true);
        c.repo = str("repo", true);
        c.fix_commit = lower(str("fix_commit", true));
        c.description = str("description", true);
        c.language = str("language", false);
        if (c.cve_id.empty()) throw SchemaError(ln, "empty cve_id");
        if (c.repo.empty()) throw SchemaError(ln, "empty repo");
        if (!is_hex_id(c.fix_commit, 7, 40)) throw SchemaError(ln, "fix_commit is not a 7-40 char hex id");
        if (!j.contains("true_vics")) throw SchemaError(ln, "missing 'true_vics'");
        const json& vics = j.at("true_vics");
        if (!vics.is_array() || vics.empty()) throw SchemaError(ln, "'true_vics' must be a non-empty array");
        for (const auto& v : vics) {
            if (!v.is_string() || !is_hex_id(v.get<std::string>(), 7, 40)) {
                throw SchemaError(ln, "true_vics entries must be 7-40 char hex ids");
            }
            std::string id = lower(v.get<std::string>());
            if (same_commit(id, c.fix_commit)) throw SchemaError(ln, "fix_commit listed among true_vics");
            c.true_vics.push_back(id);
        }
        if (!seen.insert(c.cve_id).second) throw SchemaError(ln, "duplicate cve_id " + c.cve_id);
        ds.cases.push_back(std::move(c));
    }
    return ds;
}

bool same_commit(std::string_view a, std::string_view b) noexcept {
    if (a.empty() || b.empty()) return false;
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
    }
    return true;
}

int count_hits(const std::vector<std::string>& identified, const std::vector<std::string>& truth) {
    auto ids = unique_ids(identified);
    auto t = unique_ids(truth);
    std::vector<bool> used(t.size(), false);
    int hits = 0;
    for (const auto& id : ids) {
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (!used[k] && same_commit(id, t[k])) {
                used[k] = true;
                ++hits;
                break;
            }
        }
    }
    return hits;
}

double harmonic_mean(double p, double r) noexcept { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Metrics compute_metrics(const std::vector<std::vector<std::string>>& identified,
                        const std::vector<std::vector<std::string>>& truth, Convention convention) {
    if (identified.size() != truth.size()) throw Error(ErrorKind::InvalidArgument, "case lists are not aligned");
    Metrics m;
    m.convention = convention;
    for (std::size_t i = 0; i < identified.size(); ++i) {
        m.hits += count_hits(identified[i], truth[i]);
        m.n_identified += static_cast<int>(unique_ids(identified[i]).size());
        m.n_true += static_cast<int>(unique_ids(truth[i]).size());
    }
    double by_identified = m.n_identified ? static_cast<double>(m.hits) / m.n_identified : 0.0;
    double by_true = m.n_true ? static_cast<double>(m.hits) / m.n_true : 0.0;
    m.precision = convention == Convention::Standard ? by_identified : by_true;
    m.recall = convention == Convention::Standard ? by_true : by_identified;
    m.f1 = harmonic_mean(m.precision, m.recall);
    return m;
}

fs::path materialize_repo(const std::string& repo, const fs::path& dataset_dir, const fs::path& cache_dir) {
    if (!is_url(repo)) {
        fs::path p(repo);
        return p.is_absolute() ? p : dataset_dir / p;
    }
    fs::path dest = cache_dir / sha1_hex(repo);
    if (fs::exists(dest / "HEAD")) return dest;
    fs::create_directories(cache_dir);
    fs::path tmp = dest;
    tmp += ".partial";
    fs::remove_all(tmp);
    auto r = run_process({"git", "clone", "--bare", "--quiet", "--", repo, tmp.string()},
                         {.cwd = {}, .env = {{"GIT_TERMINAL_PROMPT", "0"}}, .input = {}});
    if (r.exit_code != 0) {
        fs::remove_all(tmp);
        throw Error(ErrorKind::NotARepository, "clone of " + repo + " failed: " + r.err);
    }
    std::error_code ec;
    fs::rename(tmp, dest, ec);
    if (ec && !fs::exists(dest / "HEAD")) throw Error(ErrorKind::GitFailure, "cannot move clone into " + dest.string());
    fs::remove_all(tmp);
    return dest;
}

namespace {

struct Task {
    std::size_t case_index;
    std::size_t algo_index;
};

CaseOutcome run_one(const std::string& algorithm, const VulnCase& c, const fs::path& repo_path, const EvalOptions& opt) {
    CaseOutcome out;
    out.cve_id = c.cve_id;
    try {
        RepoHandle repo = open_repo(repo_path, opt.config.context_lines);
        if (algorithm == "mas") {
            if (!opt.backend_factory || !opt.prompts) {
                throw Error(ErrorKind::InvalidArgument, "mas needs a backend and prompt templates");
            }
            auto backend = opt.backend_factory(c);
            AgentEnv env{*backend, *opt.prompts, opt.config.max_tool_rounds};
            CaseRecord rec = run_mas(env, repo, c.cve_id, c.description, c.fix_commit, opt.config);
            out.identified.assign(rec.result.vics.begin(), rec.result.vics.end());
            out.degraded = rec.degraded();
            out.detail = to_json(rec);
        } else {
            CandidateSet s = run_baseline(algorithm, repo, c.fix_commit, opt.config.vszz_threshold);
            out.identified.assign(s.candidates.begin(), s.candidates.end());
            out.degraded = !s.warnings.empty();
            out.detail = to_json(s);
        }
    } catch (const std::exception& e) {
        out.identified.clear();
        out.error = e.what();
    }
    for (const auto& id : out.identified) {
        if (std::any_of(c.true_vics.begin(), c.true_vics.end(), [&](const std::string& t) { return same_commit(id, t); })) {
            out.hits.push_back(id);
        }
    }
    return out;
}

EvalReport evaluate(const std::vector<std::string>& algorithms, const Dataset& dataset, const EvalOptions& opt,
                    bool parallel) {
    for (const auto& a : algorithms) {
        const auto& names = baseline_names();
        if (a != "mas" && std::find(names.begin(), names.end(), a) == names.end()) {
            throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + a + "'");
        }
    }
    EvalReport report;
    report.dataset = dataset.name;

    // Clones happen up front and serially so concurrent cases never race on the cache.
    std::vector<std::size_t> usable;
    std::vector<fs::path> paths(dataset.cases.size());
    for (std::size_t i = 0; i < dataset.cases.size(); ++i) {
        const auto& c = dataset.cases[i];
        try {
            paths[i] = materialize_repo(c.repo, dataset.dir, opt.config.cache_dir);
            open_repo(paths[i]);
            usable.push_back(i);
        } catch (const std::exception& e) {
            report.skipped.push_back({c.cve_id, e.what()});
        }
    }
    report.cases = static_cast<int>(usable.size());

    std::vector<Task> tasks;
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        for (auto i : usable) tasks.push_back({i, a});
    }
    std::vector<CaseOutcome> outcomes(tasks.size());
    const auto n = static_cast<std::ptrdiff_t>(tasks.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opt.config.parallelism))
        for (std::ptrdiff_t t = 0; t < n; ++t) {
            const auto& task = tasks[static_cast<std::size_t>(t)];
            outcomes[static_cast<std::size_t>(t)] =
                run_one(algorithms[task.algo_index], dataset.cases[task.case_index], paths[task.case_index], opt);
        }
    } else {
        for (std::ptrdiff_t t = 0; t < n; ++t) {
            const auto& task = tasks[static_cast<std::size_t>(t)];
            outcomes[static_cast<std::size_t>(t)] =
                run_one(algorithms[task.algo_index], dataset.cases[task.case_index], paths[task.case_index], opt);
        }
    }

    std::size_t t = 0;
    for (const auto& algorithm : algorithms) {
        AlgorithmRow row;
        row.algorithm = algorithm;
        std::vector<std::vector<std::string>> identified, truth;
        auto& list = report.per_case[algorithm];
        for (auto i : usable) {
            CaseOutcome& o = outcomes[t++];
            identified.push_back(o.identified);
            truth.push_back(dataset.cases[i].true_vics);
            if (!o.error.empty()) ++row.failed_cases;
            if (o.degraded) ++row.degraded_cases;
            list.push_back(std::move(o));
        }
        row.standard = compute_metrics(identified, truth, Convention::Standard);
        row.swapped = compute_metrics(identified, truth, Convention::Swapped);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace

EvalReport run_evaluation(const std::vector<std::string>& algorithms, const Dataset& dataset, const EvalOptions& options) {
    return evaluate(algorithms, dataset, options, true);
}

EvalReport run_evaluation_serial(const std::vector<std::string>& algorithms, const Dataset& dataset,
                                 const EvalOptions& options) {
    return evaluate(algorithms, dataset, options, false);
}

json to_json(const Metrics& m) {
    return {{"convention", to_string(m.convention)},
            {"hits", m.hits},
            {"n_true", m.n_true},
            {"n_identified", m.n_identified},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1}};
}

json to_json(const EvalReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"algorithm", row.algorithm},
                        {"standard", to_json(row.standard)},
                        {"swapped", to_json(row.swapped)},
                        {"failed_cases", row.failed_cases},
                        {"degraded_cases", row.degraded_cases}});
    }
    json per_case = json::object();
    for (const auto& [algorithm, list] : r.per_case) {
        json arr = json::array();
        for (const auto& o : list) {
            json jo = {{"cve_id", o.cve_id}, {"identified", o.identified}, {"hits", o.hits}, {"degraded", o.degraded}};
            if (!o.error.empty()) jo["error"] = o.error;
            if (!o.detail.is_null()) jo["detail"] = o.detail;
            arr.push_back(std::move(jo));
        }
        per_case[algorithm] = std::move(arr);
    }
    json skipped = json::array();
    for (const auto& s : r.skipped) skipped.push_back({{"cve_id", s.cve_id}, {"reason", s.reason}});
    return {{"dataset", r.dataset},
            {"cases", r.cases},
            {"rows", std::move(rows)},
            {"per_case", std::move(per_case)},
            {"skipped", std::move(skipped)}};
}

std::string render_markdown(const EvalReport& r) {
    std::string out = "### " + r.dataset + " (" + std::to_string(r.cases) + " cases";
    if (!r.skipped.empty()) out += ", " + std::to_string(r.skipped.size()) + " skipped";
    out += ")\n\n";
    out += "| Algorithm | Pre | Re | F1 | Pre* | Re* | F1* | Hits | Identified | True | Failed |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& row : r.rows) {
        out += "| " + row.algorithm + " | " + format_ratio(row.standard.precision) + " | " +
               format_ratio(row.standard.recall) + " | " + format_ratio(row.standard.f1) + " | " +
               format_ratio(row.swapped.precision) + " | " + format_ratio(row.swapped.recall) + " | " +
               format_ratio(row.swapped.f1) + " | " + std::to_string(row.standard.hits) + " | " +
               std::to_string(row.standard.n_identified) + " | " + std::to_string(row.standard.n_true) + " | " +
               std::to_string(row.failed_cases) + " |\n";
    }
    out += "\n\\* precision over true VICs, recall over identified commits.\n";
    return out;
}

std::string render_csv(const EvalReport& r) {
    std::string out = "dataset,algorithm,convention,hits,n_true,n_identified,precision,recall,f1\n";
    for (const auto& row : r.rows) {
        for (const Metrics* m : {&row.standard, &row.swapped}) {
            out += r.dataset + "," + row.algorithm + "," + std::string(to_string(m->convention)) + "," +
                   std::to_string(m->hits) + "," + std::to_string(m->n_true) + "," + std::to_string(m->n_identified) +
                   "," + format_ratio(m->precision) + "," + format_ratio(m->recall) + "," + format_ratio(m->f1) + "\n";
        }
    }
    return out;
}

}  // namespace masszz

// Acceptance checks; prints one PASS/FAIL line per criterion.

#include "json.hpp"
#include "masszz/cli.hpp"
#include "masszz/error.hpp"
#include "masszz/eval.hpp"
#include "masszz/root_cause.hpp"
#include "masszz/szz.hpp"
#include "oracles.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace masszz;
using namespace masszz::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome fail(std::string why) { return {false, std::move(why)}; }

// 1 ----------------------------------------------------------------------------
Outcome syncope_trace() {
    TempDir tmp;
    materialize_syncope(tmp / "syncope.git");
    auto t0 = Clock::now();
    std::ostringstream out, err;
    int code = run_cli({"trace", "--backend", "replay", "--transcript",
                        (fixture_dir() / "syncope" / "transcripts").string(), "--cve", "CVE-2018-1322", "--repo",
                        (tmp / "syncope.git").string(), "--fix", "735579b", "--description-file",
                        (fixture_dir() / "syncope" / "description.txt").string(), "--cache-dir", (tmp / "cache").string()},
                       out, err);
    double secs = seconds_since(t0);
    if (code != 0) return fail("exit " + std::to_string(code) + ": " + err.str());
    json r = json::parse(out.str());
    if (r["traces"].size() != 1) return fail("expected one anchor, got " + std::to_string(r["traces"].size()));
    const json& tr = r["traces"][0];
    std::string file = tr["anchor"]["file"];
    if (!file.ends_with("/SearchableFields.java") || tr["anchor"]["line_no"] != 39) {
        return fail("anchor " + file + ":" + tr["anchor"]["line_no"].dump());
    }
    const std::vector<std::pair<std::string, std::string>> want = {
        {"e1a9a9e", "Present"}, {"bbee3af", "Present"}, {"07aa458", "Present"}, {"246ff1f", "Absent"}};
    const json& steps = tr["steps"];
    if (steps.size() != want.size()) return fail("walked " + std::to_string(steps.size()) + " commits");
    std::string walk;
    for (std::size_t i = 0; i < want.size(); ++i) {
        std::string c = steps[i]["commit"];
        if (!c.starts_with(want[i].first) || steps[i]["verdict"] != want[i].second) {
            return fail("step " + std::to_string(i) + " is " + c.substr(0, 7) + "/" + steps[i]["verdict"].get<std::string>());
        }
        walk += (i ? " -> " : "") + c.substr(0, 7) + "(" + want[i].second + ")";
    }
    if (r["vics"].size() != 1 || !r["vics"][0].get<std::string>().starts_with("07aa458")) return fail("vics " + r["vics"].dump());
    if (secs >= 60) return fail("took " + std::to_string(secs) + " s");
    std::ostringstream d;
    d << "anchor SearchableFields.java:39, " << walk << ", vics={07aa458}, " << secs << " s";
    return {true, d.str()};
}

// 2 ----------------------------------------------------------------------------
Outcome bszz_oracle() {
    constexpr int kRepos = 100;
    std::mt19937_64 rng(0x5a5a2024);
    auto t0 = Clock::now();
    int lines_checked = 0;
    for (int i = 0; i < kRepos; ++i) {
        TempDir tmp;
        LinearRepo lr = random_linear_repo(rng);
        lr.ids = lr.builder.build(tmp / "r");
        RepoHandle repo = open_repo(tmp / "r");
        CandidateSet s = run_bszz(repo, lr.ids[static_cast<std::size_t>(lr.fix)]);
        std::map<std::pair<std::string, int>, std::string> want;
        std::set<std::string> want_set;
        for (const auto& [key, idx] : lr.expected) {
            want[key] = lr.ids[static_cast<std::size_t>(idx)];
            want_set.insert(want[key]);
        }
        if (s.per_line != want || s.candidates != want_set) return fail("repo " + std::to_string(i) + " disagrees");
        lines_checked += static_cast<int>(want.size());
    }
    double secs = seconds_since(t0);
    if (secs >= 120) return fail("took " + std::to_string(secs) + " s");
    std::ostringstream d;
    d << kRepos << " repos, " << lines_checked << " deleted lines, " << secs << " s";
    return {true, d.str()};
}

// 3 ----------------------------------------------------------------------------
Outcome vszz_threshold() {
    constexpr int kChains = 24;
    std::mt19937_64 rng(0x75);
    int stopped_early = 0, reached_root = 0, boundary_steps = 0;
    for (int i = 0; i < kChains; ++i) {
        TempDir tmp;
        Chain ch = random_chain(rng, kDefaultVszzThreshold);
        ch.ids = ch.builder.build(tmp / "r");
        RepoHandle repo = open_repo(tmp / "r");
        CandidateSet s = run_vszz(repo, ch.ids[static_cast<std::size_t>(ch.fix)], kDefaultVszzThreshold);
        const std::string& want = ch.ids[static_cast<std::size_t>(ch.expected)];
        if (s.candidates != std::set<std::string>{want}) {
            std::ostringstream d;
            d << "chain " << i << ": similarities";
            for (double x : ch.similarities) d << " " << x;
            return fail(d.str());
        }
        if (ch.expected == 0) ++reached_root;
        else ++stopped_early;
        for (double x : ch.similarities) boundary_steps += std::abs(x - kDefaultVszzThreshold) < 0.05;
    }
    if (stopped_early == 0 || reached_root == 0) return fail("chains did not exercise both outcomes");
    std::ostringstream d;
    d << kChains << " chains, " << stopped_early << " stopped below 0.75, " << reached_root << " reached the root, "
      << boundary_steps << " steps within 0.05 of the threshold";
    return {true, d.str()};
}

// 4 ----------------------------------------------------------------------------
struct PublishedRow {
    const char* approach;
    const char* dataset;
    double p, r, f1;
};

// Baseline rows of the published comparison (precision, recall, F1).
const PublishedRow kPublished[] = {
    {"B-SZZ", "V-SZZ-c", 0.67, 0.69, 0.68},   {"B-SZZ", "V-SZZ-j", 0.52, 0.63, 0.57},
    {"B-SZZ", "Java-SZZ", 0.07, 0.44, 0.13},  {"AG-SZZ", "V-SZZ-c", 0.59, 0.52, 0.55},
    {"AG-SZZ", "V-SZZ-j", 0.52, 0.48, 0.50},  {"AG-SZZ", "Java-SZZ", 0.06, 0.30, 0.10},
    {"L-SZZ", "V-SZZ-c", 0.70, 0.46, 0.56},   {"L-SZZ", "V-SZZ-j", 0.58, 0.32, 0.41},
    {"L-SZZ", "Java-SZZ", 0.18, 0.14, 0.16},  {"R-SZZ", "V-SZZ-c", 0.70, 0.46, 0.56},
    {"R-SZZ", "V-SZZ-j", 0.54, 0.31, 0.39},   {"R-SZZ", "Java-SZZ", 0.15, 0.12, 0.13},
    {"MA-SZZ", "V-SZZ-c", 0.56, 0.50, 0.53},  {"MA-SZZ", "V-SZZ-j", 0.48, 0.48, 0.48},
    {"MA-SZZ", "Java-SZZ", 0.06, 0.30, 0.10}, {"V-SZZ", "V-SZZ-c", 0.95, 0.57, 0.71},
    {"V-SZZ", "V-SZZ-j", 0.41, 0.83, 0.55},   {"V-SZZ", "Java-SZZ", 0.14, 0.30, 0.19},
    {"LLM4SZZ", "V-SZZ-c", 0.72, 0.40, 0.51}, {"LLM4SZZ", "V-SZZ-j", 0.73, 0.23, 0.35},
    {"LLM4SZZ", "Java-SZZ", 0.38, 0.16, 0.23},
};

Outcome published_f1() {
    double worst = 0;
    for (const auto& row : kPublished) {
        double f1 = harmonic_mean(row.p, row.r);
        double diff = std::abs(f1 - row.f1);
        worst = std::max(worst, diff);
        if (diff > 0.01 + 1e-9) {
            std::ostringstream d;
            d << row.approach << " on " << row.dataset << ": F1(" << row.p << ", " << row.r << ") = " << f1 << ", printed "
              << row.f1;
            return fail(d.str());
        }
    }
    // compute_metrics goes through the same formula
    Metrics m = compute_metrics({{"aaaaaaa", "bbbbbbb", "ccccccc"}}, {{"aaaaaaa", "ddddddd"}}, Convention::Standard);
    if (std::abs(m.f1 - harmonic_mean(m.precision, m.recall)) > 1e-12) return fail("compute_metrics F1 differs");
    std::ostringstream d;
    d << std::size(kPublished) << " rows, max |F1 - printed| = " << worst;
    return {true, d.str()};
}

// 5 ----------------------------------------------------------------------------
Outcome critique_loop() {
    CaseInputs in;
    in.cve_id = "CVE-0000-0000";
    in.description = "length not checked";
    in.commit_message = "check length\n";
    in.diff = parse_unified_diff("diff --git a/p.c b/p.c\n--- a/p.c\n+++ b/p.c\n@@ -1,2 +1,3 @@\n int n;\n+if (n > 8) return;\n"
                                 " memcpy(b, s, n);\n");
    json report = {{"summary", "memcpy trusts n"}, {"evidence", {{{"claim", "no bound"}, {"source", "hunk"}, {"hunk_index", 0}}}}};
    json fail_v = {{"decision", "Fail"}, {"traceability_ok", false}, {"consistency_ok", true}, {"feedback", "be specific"}};
    json pass_v = {{"decision", "Pass"}, {"traceability_ok", true}, {"consistency_ok", true}};
    PromptLibrary prompts(PromptLibrary::default_dir());

    auto run = [&](const std::vector<json>& verdicts) {
        Transcript t;
        int k = 0;
        for (const auto& v : verdicts) {
            t.entries.push_back({Agent::Auditor, k, json_reply(report)});
            t.entries.push_back({Agent::Judge, k, json_reply(v)});
            ++k;
        }
        ReplayBackend backend(t);
        AgentEnv env{backend, prompts, 0};
        auto out = root_cause_loop(env, in, 3);
        return std::make_tuple(backend.calls(Agent::Auditor), out.verdict.decision, out.degraded);
    };
    auto [a1, d1, g1] = run({fail_v, fail_v, pass_v});
    if (a1 != 3 || d1 != Decision::Pass || g1) return fail("Fail/Fail/Pass gave " + std::to_string(a1) + " audits");
    auto [a2, d2, g2] = run({fail_v, fail_v, fail_v});
    if (a2 != 3 || d2 != Decision::Fail || !g2) return fail("Fail x3 gave " + std::to_string(a2) + " audits");
    return {true, "Fail/Fail/Pass -> 3 audits, Pass; Fail x3 -> 3 audits, degraded"};
}

// 6 ----------------------------------------------------------------------------
Outcome determinism() {
    TempDir tmp;
    fs::path ds = materialize_eval_fixture(tmp.path());
    auto eval = [&](const std::string& out_dir, const std::string& parallelism) {
        std::ostringstream out, err;
        int code = run_cli({"eval", "--dataset", ds.string(), "--algorithms", "bszz,agszz,maszz,lszz,rszz,vszz,mas",
                            "--backend", "replay", "--transcript", (fixture_dir() / "syncope" / "transcripts").string(),
                            "--parallelism", parallelism, "--cache-dir", (tmp / "cache").string(), "--out",
                            (tmp / out_dir).string()},
                           out, err);
        if (code != 0) throw std::runtime_error("eval exited " + std::to_string(code) + ": " + err.str());
        return slurp(tmp / out_dir / "report.json");
    };
    std::string a = eval("run1", "4");
    std::string b = eval("run2", "4");
    if (a != b) return fail("report.json differs between runs");
    json r = json::parse(a);
    for (const auto& row : r["per_case"]["mas"]) {
        if (row.contains("error")) return fail("mas case failed: " + row["error"].get<std::string>());
    }
    return {true, "two replay runs, " + std::to_string(a.size()) + " identical bytes"};
}

// 7 ----------------------------------------------------------------------------
Outcome sanitizer() {
    std::mt19937_64 rng(0x5eed);
    int refs = 0;
    for (int i = 0; i < 50; ++i) {
        GeneratedMessage m = random_commit_message(rng);
        refs += m.references;
        std::string s = sanitize_commit_message(m.text);
        if (contains_hex_token(s)) return fail("message " + std::to_string(i) + " keeps a hex token");
        std::vector<std::string> kept;
        std::istringstream in(s);
        for (std::string line; std::getline(in, line);) kept.push_back(line);
        if (kept != m.prose) return fail("message " + std::to_string(i) + " altered a non-reference line");
        if (sanitize_commit_message(s) != s) return fail("message " + std::to_string(i) + " is not a fixpoint");
    }
    return {true, "50 messages, " + std::to_string(refs) + " reference lines removed, idempotent"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"Syncope replay trace", syncope_trace},
        {"B-SZZ matches brute-force oracle", bszz_oracle},
        {"V-SZZ similarity threshold", vszz_threshold},
        {"published baseline F1 self-consistency", published_f1},
        {"critique loop budget", critique_loop},
        {"replay evaluation determinism", determinism},
        {"commit message sanitizer", sanitizer},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        failures += !o.ok;
        std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}

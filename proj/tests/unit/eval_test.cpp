#include "doctest.h"
#include "masszz/error.hpp"
#include "masszz/eval.hpp"
#include "support.hpp"

#include <fstream>

using namespace masszz;
using namespace masszz::testing;
using nlohmann::json;

namespace {

std::filesystem::path write(const TempDir& tmp, const std::string& name, const std::string& content) {
    auto p = tmp / name;
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_CASE("hit matching is prefix tolerant and one-to-one") {
    CHECK(same_commit("07aa458", "07AA4581234"));
    CHECK_FALSE(same_commit("07aa458", "07ab"));
    CHECK_FALSE(same_commit("", "07"));
    CHECK(count_hits({"07aa458", "07aa4581"}, {"07aa458"}) == 1);
    CHECK(count_hits({"aaaaaaa", "bbbbbbb"}, {"aaaaaaa", "ccccccc"}) == 1);
    CHECK(count_hits({}, {"aaaaaaa"}) == 0);
}

TEST_CASE("metrics under both conventions") {
    std::vector<std::vector<std::string>> ident = {{"a1b2c3d", "eeeeeee"}, {}, {"1234567"}};
    std::vector<std::vector<std::string>> truth = {{"a1b2c3d"}, {"fffffff"}, {"1234567", "7654321"}};
    Metrics s = compute_metrics(ident, truth, Convention::Standard);
    CHECK(s.hits == 2);
    CHECK(s.n_identified == 3);
    CHECK(s.n_true == 4);
    CHECK(s.precision == doctest::Approx(2.0 / 3));
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(s.f1 == doctest::Approx(2 * (2.0 / 3) * 0.5 / (2.0 / 3 + 0.5)));
    Metrics w = compute_metrics(ident, truth, Convention::Swapped);
    CHECK(w.precision == doctest::Approx(0.5));
    CHECK(w.recall == doctest::Approx(2.0 / 3));
    CHECK(w.f1 == doctest::Approx(s.f1));
    Metrics empty = compute_metrics({{}}, {{"aaaaaaa"}}, Convention::Standard);
    CHECK(empty.f1 == 0.0);
    CHECK_THROWS_AS(compute_metrics({}, {{"a"}}, Convention::Standard), Error);
    CHECK(to_json(w)["convention"] == "swapped");
}

TEST_CASE("load_dataset validates every row") {
    TempDir tmp;
    auto good = write(tmp, "d.jsonl",
                      R"({"cve_id":"CVE-1","repo":"r","fix_commit":"ABCDEF1","true_vics":["1234567"],"description":"d"})"
                      "\n\n");
    Dataset ds = load_dataset(good);
    CHECK(ds.name == "d");
    CHECK(ds.cases.size() == 1);
    CHECK(ds.cases[0].fix_commit == "abcdef1");

    auto line_of = [&](const std::string& content) -> std::size_t {
        try {
            load_dataset(write(tmp, "bad.jsonl", content));
        } catch (const SchemaError& e) {
            return e.line();
        }
        return 0;
    };
    std::string row = R"({"cve_id":"CVE-1","repo":"r","fix_commit":"abcdef1","true_vics":["1234567"],"description":"d"})";
    CHECK(line_of(row + "\nnot json\n") == 2);
    CHECK(line_of(R"({"cve_id":"CVE-2","repo":"r","fix_commit":"xyz","true_vics":["1234567"],"description":"d"})") == 1);
    CHECK(line_of(R"({"cve_id":"CVE-2","repo":"r","fix_commit":"abcdef1","true_vics":[],"description":"d"})") == 1);
    CHECK(line_of(R"({"cve_id":"CVE-2","repo":"r","fix_commit":"abcdef1","true_vics":["abcdef1"],"description":"d"})") == 1);
    CHECK(line_of(R"({"repo":"r","fix_commit":"abcdef1","true_vics":["1234567"],"description":"d"})") == 1);
    CHECK(line_of(row + "\n" + row + "\n") == 2);
    CHECK_THROWS_AS(load_dataset(tmp / "missing.jsonl"), Error);
}

TEST_CASE("baseline evaluation over the syncope fixture") {
    TempDir tmp;
    Dataset ds = load_dataset(materialize_eval_fixture(tmp.path()));
    EvalOptions opt;
    opt.config.parallelism = 4;
    opt.config.cache_dir = tmp / "cache";
    auto par = run_evaluation({"bszz", "lszz", "vszz"}, ds, opt);
    auto ser = run_evaluation_serial({"bszz", "lszz", "vszz"}, ds, opt);
    CHECK(to_json(par) == to_json(ser));
    CHECK(par.cases == 2);
    REQUIRE(par.rows.size() == 3);
    CHECK(par.rows[0].algorithm == "bszz");
    CHECK(par.rows[0].standard.n_true == 2);
    CHECK(par.per_case.at("lszz").size() == 2);
    CHECK(render_markdown(par).find("| lszz |") != std::string::npos);
    CHECK(render_csv(par).find("syncope,vszz,swapped,") != std::string::npos);
}

TEST_CASE("evaluation records failures and skips unreachable repositories") {
    TempDir tmp;
    materialize_syncope(tmp / "syncope.git");
    auto path = write(tmp, "mixed.jsonl",
                      R"({"cve_id":"A","repo":"syncope.git","fix_commit":"0312c6c","true_vics":["1234567"],"description":"root fix"})"
                      "\n"
                      R"({"cve_id":"B","repo":"nowhere.git","fix_commit":"735579b","true_vics":["07aa458"],"description":"d"})"
                      "\n"
                      R"({"cve_id":"C","repo":"syncope.git","fix_commit":"735579b","true_vics":["07aa458"],"description":"d"})"
                      "\n");
    Dataset ds = load_dataset(path);
    EvalOptions opt;
    opt.config.cache_dir = tmp / "cache";
    auto r = run_evaluation({"bszz", "mas"}, ds, opt);
    CHECK(r.cases == 2);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].cve_id == "B");
    const auto& b = r.per_case.at("bszz");
    CHECK(b[0].error.find("RootCommitFix") != std::string::npos);
    CHECK(b[0].identified.empty());
    CHECK(r.rows[0].failed_cases == 1);
    CHECK(r.rows[1].failed_cases == 2);  // mas without a backend
    CHECK(r.rows[0].standard.n_true == 2);
    CHECK_THROWS_AS(run_evaluation({"zszz"}, ds, opt), Error);
}

TEST_CASE("materialize_repo resolves relative paths and rejects bad URLs") {
    TempDir tmp;
    CHECK(materialize_repo("x.git", tmp.path(), tmp / "c") == tmp / "x.git");
    CHECK(materialize_repo("/abs/x.git", tmp.path(), tmp / "c") == "/abs/x.git");
    CHECK_THROWS_AS(materialize_repo("file:///definitely/not/here.git", tmp.path(), tmp / "c"), Error);
    CHECK_FALSE(std::filesystem::exists(tmp / "c" / "x.partial"));
}

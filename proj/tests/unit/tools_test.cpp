#include "doctest.h"
#include "masszz/error.hpp"
#include "masszz/tools.hpp"
#include "oracles.hpp"

#include <random>

using namespace masszz;
using namespace masszz::testing;
using nlohmann::json;

namespace {

struct Fixture {
    TempDir tmp;
    std::vector<std::string> ids;
    RepoHandle repo;

    static RepoHandle build(TempDir& tmp, std::vector<std::string>& ids) {
        RepoBuilder b;
        std::vector<std::string> big;
        for (int i = 1; i <= 500; ++i) big.push_back("row " + std::to_string(i) + " needle");
        b.commit("one", {{"a.c", lines({"int needle;", "int other;", "needle(needle);"})}, {"big.txt", lines(big)}});
        b.commit("two", {{"b.c", lines({"no match", "needle"})}});
        ids = b.build(tmp / "r");
        return open_repo(tmp / "r");
    }
    Fixture() : repo(build(tmp, ids)) {}
};

std::vector<SymbolHit> brute_force(const std::vector<Blob>& blobs, const std::string& q) {
    std::vector<SymbolHit> out;
    for (const auto& b : blobs) {
        auto rows = split_lines(b.content);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].find(q) != std::string::npos) out.push_back({b.path, static_cast<int>(i) + 1, rows[i]});
        }
    }
    return out;
}

}  // namespace

TEST_CASE("expand_context numbers and clamps lines") {
    Fixture f;
    auto r = expand_context(f.repo, f.ids[0], "a.c", 0, 2);
    CHECK(r.payload == "1: int needle;\n2: int other;\n");
    CHECK(expand_context(f.repo, f.ids[0], "a.c", 3, 99).payload == "3: needle(needle);\n");
    CHECK(expand_context(f.repo, f.ids[0], "a.c", 10, 20).payload.empty());
    CHECK_THROWS_AS(expand_context(f.repo, f.ids[0], "a.c", 3, 2), Error);
    CHECK_THROWS_AS(expand_context(f.repo, f.ids[0], "b.c", 1, 2), Error);
    auto big = expand_context(f.repo, f.ids[0], "big.txt", 1, 500);
    CHECK(big.truncated);
    CHECK(big.payload.find("[truncated: 100 more lines]") != std::string::npos);
}

TEST_CASE("locate_symbol is scoped to the revision") {
    Fixture f;
    auto r0 = locate_symbol(f.repo, f.ids[0], "needle(", 10);
    CHECK(r0.payload == "a.c:3: needle(needle);\n");
    auto r1 = locate_symbol(f.repo, f.ids[1], "needle", 3);
    CHECK(r1.truncated);
    CHECK(r1.payload.rfind("a.c:1: int needle;\n", 0) == 0);
    CHECK_THROWS_AS(locate_symbol(f.repo, f.ids[0], "", 5), Error);
}

TEST_CASE("search kernels agree with a brute-force scan") {
    std::mt19937_64 rng(3);
    const std::string alphabet = "ab\n";
    for (int round = 0; round < 50; ++round) {
        std::vector<Blob> blobs;
        int n = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            std::string content;
            int len = static_cast<int>(rng() % 200);
            for (int k = 0; k < len; ++k) content += alphabet[rng() % alphabet.size()];
            blobs.push_back({"f" + std::to_string(1000 + i), content});
        }
        std::string q;
        int qlen = 1 + static_cast<int>(rng() % 3);
        for (int k = 0; k < qlen; ++k) q += "ab"[rng() % 2];
        auto want = brute_force(blobs, q);
        CHECK(search_blobs_serial(blobs, q) == want);
        CHECK(search_blobs(blobs, q) == want);
    }
}

TEST_CASE("execute_tool reports problems as payloads") {
    Fixture f;
    auto ok = execute_tool(f.repo, {"ExpandContext", {{"file", "a.c"}, {"start_line", "1"}, {"end_line", 1}}, f.ids[0]});
    CHECK(ok.payload == "1: int needle;\n");
    auto missing = execute_tool(f.repo, {"ExpandContext", {{"file", "a.c"}}, f.ids[0]});
    CHECK(missing.payload.rfind("error:", 0) == 0);
    auto unknown = execute_tool(f.repo, {"Grep", json::object(), f.ids[0]});
    CHECK(unknown.payload.find("unknown tool") != std::string::npos);
    auto absent = execute_tool(f.repo, {"ExpandContext", {{"file", "zzz"}, {"start_line", 1}, {"end_line", 1}}, f.ids[0]});
    CHECK(absent.payload.rfind("error:", 0) == 0);
    CHECK(context_tool_specs().size() == 2);
}

TEST_CASE("tool loop executes calls until an answer arrives") {
    Fixture f;
    int n = 0;
    ScriptedBackend backend([&](const ChatRequest& r) {
        ChatResponse resp;
        if (++n <= 2) {
            resp.tool_calls.push_back({"c" + std::to_string(n), "LocateSymbol", R"({"query":"other"})"});
            return resp;
        }
        resp.text = "done after " + std::to_string(r.messages.size()) + " messages";
        return resp;
    });
    ChatRequest req;
    req.agent = Agent::Tracer;
    req.messages.push_back({"user", "go", {}, {}});
    req.tool_specs = context_tool_specs();
    ToolLoopStats st;
    auto out = run_tool_loop(backend, req, f.repo, f.ids[0], 6, &st);
    CHECK(out.text == "done after 5 messages");
    CHECK(st.completions == 3);
    CHECK(st.tool_executions == 2);
    CHECK_FALSE(st.budget_exhausted);
    CHECK(backend.requests[1].messages.back().role == "tool");
    CHECK(backend.requests[1].messages.back().tool_call_id == "c1");
    CHECK(backend.requests[1].messages.back().text == "a.c:2: int other;\n");
}

TEST_CASE("tool loop forces an answer once the budget is spent") {
    Fixture f;
    ScriptedBackend backend([&](const ChatRequest& r) {
        ChatResponse resp;
        if (r.tool_specs.empty()) {
            resp.text = "final";
            return resp;
        }
        resp.tool_calls.push_back({"", "ExpandContext", R"({"file":"a.c","start_line":1,"end_line":1})"});
        resp.tool_calls.push_back({"", "ExpandContext", "{not json"});
        return resp;
    });
    ChatRequest req;
    req.agent = Agent::Reviewer;
    req.messages.push_back({"user", "go", {}, {}});
    req.tool_specs = context_tool_specs();
    ToolLoopStats st;
    auto out = run_tool_loop(backend, req, f.repo, f.ids[0], 3, &st);
    CHECK(out.text == "final");
    CHECK(st.tool_executions == 3);
    CHECK(st.budget_exhausted);
    const auto& last = backend.requests.back();
    CHECK(last.tool_specs.empty());
    // second round: one executed call, one refused
    bool refused = false, bad_json = false;
    for (const auto& m : last.messages) {
        if (m.text.find("tool budget exhausted") != std::string::npos) refused = true;
        if (m.text.find("not valid JSON") != std::string::npos) bad_json = true;
    }
    CHECK(refused);
    CHECK(bad_json);
}

TEST_CASE("zero tool budget means a single completion without tools") {
    Fixture f;
    ScriptedBackend backend([](const ChatRequest& r) {
        ChatResponse resp;
        resp.text = r.tool_specs.empty() ? "plain" : "tools offered";
        return resp;
    });
    ChatRequest req;
    req.messages.push_back({"user", "go", {}, {}});
    req.tool_specs = context_tool_specs();
    ToolLoopStats st;
    CHECK(run_tool_loop(backend, req, f.repo, f.ids[0], 0, &st).text == "plain");
    CHECK(st.completions == 1);
}

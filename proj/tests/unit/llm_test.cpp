#include "doctest.h"
#include "httplib.h"
#include "masszz/error.hpp"
#include "masszz/llm.hpp"
#include "oracles.hpp"

#include <atomic>
#include <random>
#include <thread>

using namespace masszz;
using namespace masszz::testing;
using nlohmann::json;

namespace {

ChatRequest req(Agent a, std::string text = "hi") {
    ChatRequest r;
    r.agent = a;
    r.messages.push_back({"user", std::move(text), {}, {}});
    return r;
}

ChatResponse text(std::string s) {
    ChatResponse r;
    r.text = std::move(s);
    return r;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string::npos) nl = s.size();
        out.push_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("agent names") {
    CHECK(to_string(Agent::Locator) == "Locator");
    CHECK(agent_from_string("tracer") == Agent::Tracer);
    CHECK_THROWS_AS(agent_from_string("Oracle"), Error);
}

TEST_CASE("transcripts round-trip through JSON") {
    Transcript t;
    ChatResponse with_tool;
    with_tool.tool_calls.push_back({"c1", "ExpandContext", R"({"file":"a","start_line":1,"end_line":2})"});
    t.entries.push_back({Agent::Auditor, 0, text("{}")});
    t.entries.push_back({Agent::Tracer, 0, with_tool});
    Transcript back = transcript_from_json(to_json(t));
    REQUIRE(back.entries.size() == 2);
    CHECK(back.strict);
    CHECK(back.entries[1].response.tool_calls[0].name == "ExpandContext");
    CHECK(json::parse(back.entries[1].response.tool_calls[0].arguments)["end_line"] == 2);

    json lenient = {{"strict", false}, {"entries", to_json(t)}};
    CHECK_FALSE(transcript_from_json(lenient).strict);
    CHECK_THROWS_AS(transcript_from_json(json::array({{{"agent", "Nobody"}, {"ordinal", 0}, {"response", {{"text", ""}}}}})),
                    Error);

    TempDir tmp;
    save_transcript(t, tmp / "t.json");
    CHECK(to_json(load_transcript(tmp / "t.json")) == to_json(t));
}

TEST_CASE("strict replay enforces order") {
    Transcript t;
    t.entries.push_back({Agent::Auditor, 0, text("a0")});
    t.entries.push_back({Agent::Judge, 0, text("j0")});
    ReplayBackend rb(t);
    CHECK(rb.complete(req(Agent::Auditor)).text == "a0");
    try {
        rb.complete(req(Agent::Auditor));
        FAIL("expected mismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TranscriptMismatch);
    }
    ReplayBackend rb2(t);
    rb2.complete(req(Agent::Auditor));
    rb2.complete(req(Agent::Judge));
    CHECK(rb2.remaining() == 0);
    CHECK(rb2.calls(Agent::Judge) == 1);
    CHECK(rb2.requests().size() == 2);
    try {
        rb2.complete(req(Agent::Judge));
        FAIL("expected exhaustion");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TranscriptExhausted);
    }
}

TEST_CASE("lenient replay looks entries up by agent and ordinal") {
    Transcript t;
    t.strict = false;
    t.entries.push_back({Agent::Judge, 0, text("j0")});
    t.entries.push_back({Agent::Auditor, 0, text("a0")});
    ReplayBackend rb(t);
    CHECK(rb.complete(req(Agent::Auditor)).text == "a0");
    CHECK(rb.complete(req(Agent::Judge)).text == "j0");
    CHECK_THROWS_AS(rb.complete(req(Agent::Judge)), Error);
}

TEST_CASE("recording backend numbers entries per agent") {
    ScriptedBackend inner([](const ChatRequest& r) { return text(std::string(to_string(r.agent))); });
    RecordingBackend rec(inner);
    rec.complete(req(Agent::Reviewer));
    rec.complete(req(Agent::Evaluator));
    rec.complete(req(Agent::Reviewer));
    auto t = rec.transcript();
    REQUIRE(t.entries.size() == 3);
    CHECK(t.entries[2].agent == Agent::Reviewer);
    CHECK(t.entries[2].ordinal == 1);
    ReplayBackend replay(t);
    CHECK(replay.complete(req(Agent::Reviewer)).text == "Reviewer");
}

TEST_CASE("parse_structured accepts JSON in several wrappings") {
    OutputSchema s{"T",
                   {{"verdict", FieldType::Enum, true, {"Present", "Absent"}, {{"vulnerable", "Present"}}},
                    {"rationale", FieldType::String},
                    {"count", FieldType::Integer, false},
                    {"ok", FieldType::Boolean, false}}};
    CHECK(parse_structured(text(R"({"verdict":"Present","rationale":"r"})"), s)["verdict"] == "Present");
    CHECK(parse_structured(text("Sure.\n```json\n{\"Verdict\": \"absent\", \"rationale\": \"x\"}\n```"), s)["verdict"] ==
          "Absent");
    CHECK(parse_structured(text(R"({"verdict":"**VULNERABLE**","rationale":"r"})"), s)["verdict"] == "Present");
    auto v = parse_structured(text(R"({"verdict":"Present","rationale":"r","count":"3","ok":"yes"})"), s);
    CHECK(v["count"] == 3);
    CHECK(v["ok"] == true);
    // first object that conforms wins
    CHECK(parse_structured(text(R"({"x":1} then {"verdict":"Absent","rationale":"{braces}"})"), s)["rationale"] ==
          "{braces}");
    // labeled block fallback
    auto lb = parse_structured(text("**Verdict:** Present\nRationale: spans\ntwo lines\n"), s);
    CHECK(lb["verdict"] == "Present");
    CHECK(lb["rationale"] == "spans\ntwo lines");

    CHECK_THROWS_AS(parse_structured(text(R"({"verdict":"Maybe","rationale":"r"})"), s), SchemaViolation);
    CHECK_THROWS_AS(parse_structured(text("no structure"), s), SchemaViolation);
    try {
        parse_structured(text(R"({"verdict":"Present"})"), s);
    } catch (const SchemaViolation& e) {
        CHECK(std::string(e.what()).find("rationale") != std::string::npos);
        CHECK(e.raw() == R"({"verdict":"Present"})");
    }
}

TEST_CASE("parse_structured handles arrays of objects") {
    OutputSchema s{"L",
                   {{"anchors",
                     FieldType::ObjectArray,
                     true,
                     {},
                     {},
                     {{"line", FieldType::Integer}, {"side", FieldType::Enum, true, {"old", "new"}, {}}}}}};
    auto v = parse_structured(text(R"({"anchors":[{"line":4,"side":"OLD"},{"line":"#7","side":"new"}]})"), s);
    CHECK(v["anchors"].size() == 2);
    CHECK(v["anchors"][0]["side"] == "old");
    CHECK(v["anchors"][1]["line"] == 7);
    CHECK_THROWS_AS(parse_structured(text("Anchors: 4"), s), SchemaViolation);
    CHECK(describe_schema(s).find("old|new") != std::string::npos);
}

TEST_CASE("complete_structured retries once") {
    OutputSchema s{"T", {{"answer", FieldType::String}}};
    int calls = 0;
    std::vector<ChatRequest> seen;
    CompleteFn flaky = [&](const ChatRequest& r) {
        seen.push_back(r);
        return ++calls == 1 ? text("I think so.") : text(R"({"answer":"yes"})");
    };
    auto reply = complete_structured(flaky, req(Agent::Judge), s);
    CHECK(reply.attempts == 2);
    CHECK(reply.value["answer"] == "yes");
    REQUIRE(seen.size() == 2);
    CHECK(seen[1].messages.size() == 3);
    CHECK(seen[1].messages.back().text.find("one JSON object") != std::string::npos);

    CompleteFn hopeless = [](const ChatRequest&) { return text("nope"); };
    try {
        complete_structured(hopeless, req(Agent::Judge), s);
        FAIL("expected AgentOutputError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AgentOutputError);
    }
}

TEST_CASE("sanitize_commit_message drops reference lines only") {
    std::string msg =
        "Fix overflow in parser\n\nCheck the size first.\nFixes: 1a2b3c4d5e6f (\"add parser\")\n"
        "Signed-off-by: A B <a@b.c>\n(cherry picked from commit 0123456789abcdef0123456789abcdef01234567)\n";
    std::string out = sanitize_commit_message(msg);
    CHECK(out == "Fix overflow in parser\n\nCheck the size first.\nSigned-off-by: A B <a@b.c>\n");
    CHECK(sanitize_commit_message(out) == out);
    std::string clean = "No refs here\n\n";
    CHECK(sanitize_commit_message(clean) == clean);
    // a hash mentioned in prose is left alone
    std::string prose = "Partially undo the change made in 1a2b3c4d since it broke builds\n";
    CHECK(sanitize_commit_message(prose) == prose);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto m = random_commit_message(rng);
        std::string s = sanitize_commit_message(m.text);
        CHECK_FALSE(contains_hex_token(s));
        CHECK(split(s) == m.prose);
        CHECK(sanitize_commit_message(s) == s);
    }
}

TEST_CASE("contains_hex_token") {
    CHECK(contains_hex_token("see 1a2b3c4"));
    CHECK_FALSE(contains_hex_token("see 1a2b3c"));
    CHECK_FALSE(contains_hex_token("x1a2b3c4d"));
    CHECK_FALSE(contains_hex_token(""));
}

TEST_CASE("live backend talks to an OpenAI-compatible endpoint") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::atomic<int> mode{0};  // 0: fail once with 503, 1: 400, 2: always 500
    std::string last_auth, last_body;
    std::mutex mu;
    server.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
        int n = ++hits;
        {
            std::lock_guard lock(mu);
            last_auth = r.get_header_value("Authorization");
            last_body = r.body;
        }
        if ((mode == 0 && n == 1) || mode == 2) {
            res.status = 503;
            return;
        }
        if (mode == 1) {
            res.status = 400;
            res.set_content("bad request", "text/plain");
            return;
        }
        json body = {{"choices",
                      {{{"message",
                         {{"role", "assistant"},
                          {"content", nullptr},
                          {"tool_calls",
                           {{{"id", "c1"},
                             {"type", "function"},
                             {"function", {{"name", "LocateSymbol"}, {"arguments", R"({"query":"x"})"}}}}}}}}}}},
                     {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 3}}}};
        res.set_content(body.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LiveConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
    cfg.model = "test-model";
    cfg.api_key = "sk-test";
    cfg.initial_backoff = std::chrono::milliseconds(1);
    LiveBackend live(cfg);

    ChatRequest r = req(Agent::Locator);
    r.system_prompt = "sys";
    r.tool_specs.push_back({"LocateSymbol", "search", {{"type", "object"}}});
    ChatResponse out = live.complete(r);
    CHECK(hits == 2);
    REQUIRE(out.tool_calls.size() == 1);
    CHECK(out.tool_calls[0].name == "LocateSymbol");
    CHECK(out.usage.prompt_tokens == 10);
    {
        std::lock_guard lock(mu);
        CHECK(last_auth == "Bearer sk-test");
        json sent = json::parse(last_body);
        CHECK(sent["model"] == "test-model");
        CHECK(sent["temperature"] == 0.0);
        CHECK(sent["messages"][0]["role"] == "system");
        CHECK(sent["tools"][0]["function"]["name"] == "LocateSymbol");
    }

    mode = 1;
    hits = 0;
    CHECK_THROWS_AS(live.complete(r), Error);
    CHECK(hits == 1);

    mode = 2;
    hits = 0;
    try {
        live.complete(r);
        FAIL("expected BackendError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BackendError);
    }
    CHECK(hits == cfg.max_attempts);

    server.stop();
    th.join();
}

TEST_CASE("live backend needs a key and a model") {
    LiveConfig cfg;
    cfg.model = "m";
    CHECK_THROWS_AS(LiveBackend{cfg}, Error);
    cfg.api_key = "k";
    cfg.model.clear();
    CHECK_THROWS_AS(LiveBackend{cfg}, Error);
}

TEST_CASE("request body carries tool turns") {
    LiveConfig cfg;
    cfg.model = "m";
    cfg.api_key = "k";
    LiveBackend live(cfg);
    ChatRequest r = req(Agent::Tracer);
    r.messages.push_back({"assistant", "", {{"c9", "ExpandContext", "{}"}}, {}});
    r.messages.push_back({"tool", "1: x", {}, "c9"});
    json body = live.request_body(r);
    CHECK(body["messages"][1]["content"].is_null());
    CHECK(body["messages"][1]["tool_calls"][0]["id"] == "c9");
    CHECK(body["messages"][2]["tool_call_id"] == "c9");
    CHECK_FALSE(body.contains("tools"));
}

#pragma once

#include "masszz/llm.hpp"
#include "support.hpp"

#include <functional>
#include <random>
#include <set>

namespace masszz::testing {

/// Backend answering through a callback; keeps every request it saw.
class ScriptedBackend : public Backend {
public:
    using Handler = std::function<ChatResponse(const ChatRequest&)>;
    explicit ScriptedBackend(Handler handler) : handler_(std::move(handler)) {}

    ChatResponse complete(const ChatRequest& request) override {
        requests.push_back(request);
        return handler_(request);
    }

    std::vector<ChatRequest> requests;

private:
    Handler handler_;
};

ChatResponse json_reply(const nlohmann::json& value);

/// A random linear history where every line is unique, together with the
/// commit that introduced each line of the fix's parent.
struct LinearRepo {
    RepoBuilder builder;
    std::vector<std::string> ids;
    int fix = 0;  // index of the last commit
    // expected B-SZZ attribution: (path, old line) -> commit index
    std::map<std::pair<std::string, int>, int> expected;
};

/// 3..15 commits over 1..5 files; the last commit edits at least one line.
LinearRepo random_linear_repo(std::mt19937_64& rng);

/// Edit distance by the full (n+1)x(m+1) table.
std::size_t levenshtein_table(std::string_view a, std::string_view b);

/// 1 - d/max over trimmed text, computed with levenshtein_table.
double similarity_oracle(std::string_view a, std::string_view b);

/// One line rewritten over a chain of commits, with filler commits touching
/// other files in between.
struct Chain {
    RepoBuilder builder;
    std::vector<std::string> ids;
    int fix = 0;
    std::vector<int> version_commit;  // commit index that wrote version i (0 = root)
    std::vector<std::string> versions;
    int expected = 0;  // commit index V-SZZ should stop at
    std::vector<double> similarities;  // similarities[i] = sim(versions[i], versions[i+1])
};

Chain random_chain(std::mt19937_64& rng, double threshold);

}  // namespace masszz::testing

namespace masszz::testing {

struct GeneratedMessage {
    std::string text;
    std::vector<std::string> prose;  // lines a sanitizer must keep, in order
    int references = 0;
};

/// Commit message mixing prose, person trailers and commit-reference lines.
GeneratedMessage random_commit_message(std::mt19937_64& rng);

/// True when `text` contains a 7..40 character hex token.
bool contains_hex_token(std::string_view text);

}  // namespace masszz::testing

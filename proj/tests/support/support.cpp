#include "support.hpp"

#include "masszz/process.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace masszz::testing {

namespace {

constexpr std::int64_t kBaseTime = 1600000000;

void must(const std::vector<std::string>& argv, const ProcessOptions& opt = {}) {
    auto r = run_process(argv, opt);
    if (r.exit_code != 0) throw std::runtime_error(argv[0] + " " + argv[1] + " failed: " + r.err);
}

void data(std::ostringstream& os, const std::string& s) { os << "data " << s.size() << "\n" << s << "\n"; }

}  // namespace

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "masszz-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

int RepoBuilder::commit(const std::string& message, const Changes& changes, std::int64_t time) {
    std::vector<int> parents;
    if (!entries_.empty()) parents.push_back(static_cast<int>(entries_.size()) - 1);
    return commit_with_parents(message, changes, parents, time);
}

int RepoBuilder::commit_with_parents(const std::string& message, const Changes& changes,
                                     const std::vector<int>& parents, std::int64_t time) {
    int idx = static_cast<int>(entries_.size());
    if (time == 0) time = kBaseTime + 3600LL * idx;
    entries_.push_back({message, changes, parents, time});
    return idx;
}

std::string RepoBuilder::stream() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        std::string ident = "Test Author <author@example.invalid> " + std::to_string(e.time) + " +0000";
        os << "commit refs/heads/master\nmark :" << i + 1 << "\n";
        os << "author " << ident << "\ncommitter " << ident << "\n";
        data(os, e.message.empty() || e.message.back() != '\n' ? e.message + "\n" : e.message);
        for (std::size_t p = 0; p < e.parents.size(); ++p) {
            os << (p == 0 ? "from :" : "merge :") << e.parents[p] + 1 << "\n";
        }
        if (e.parents.empty() && i > 0) os << "deleteall\n";
        for (const auto& [path, content] : e.changes) {
            if (!content) {
                os << "D " << path << "\n";
            } else {
                os << "M 100644 inline " << path << "\n";
                data(os, *content);
            }
        }
        os << "\n";
    }
    return os.str();
}

std::vector<std::string> RepoBuilder::build(const fs::path& dir) const {
    fs::create_directories(dir);
    must({"git", "init", "--bare", "-q", dir.string()});
    fs::path marks = dir / "fixture-marks";
    ProcessOptions opt;
    opt.cwd = dir;
    opt.input = stream();
    must({"git", "fast-import", "--quiet", "--export-marks=" + marks.string()}, opt);
    std::map<int, std::string> by_mark;
    std::ifstream in(marks);
    std::string mark, id;
    while (in >> mark >> id) by_mark[std::stoi(mark.substr(1))] = id;
    fs::remove(marks);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < entries_.size(); ++i) ids.push_back(by_mark.at(static_cast<int>(i) + 1));
    return ids;
}

fs::path fixture_dir() { return MASSZZ_FIXTURE_DIR; }

RepoHandle materialize_syncope(const fs::path& dir) {
    fs::create_directories(dir);
    must({"git", "init", "--bare", "-q", dir.string()});
    std::ifstream in(fixture_dir() / "syncope" / "syncope.fi", std::ios::binary);
    if (!in) throw std::runtime_error("syncope.fi missing");
    std::ostringstream buf;
    buf << in.rdbuf();
    ProcessOptions opt;
    opt.cwd = dir;
    opt.input = buf.str();
    must({"git", "fast-import", "--quiet"}, opt);
    return open_repo(dir);
}

fs::path materialize_eval_fixture(const fs::path& dir) {
    materialize_syncope(dir / "syncope.git");
    fs::path ds = dir / "syncope.jsonl";
    fs::copy_file(fixture_dir() / "eval" / "syncope.jsonl", ds, fs::copy_options::overwrite_existing);
    return ds;
}

std::string lines(const std::vector<std::string>& rows) {
    std::string out;
    for (const auto& r : rows) out += r + "\n";
    return out;
}

}  // namespace masszz::testing

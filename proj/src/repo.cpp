#include "masszz/repo.hpp"

#include "masszz/error.hpp"
#include "masszz/process.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <unordered_map>

namespace fs = std::filesystem;

namespace masszz {
namespace {

const std::vector<std::pair<std::string, std::string>>& git_env() {
    static const std::vector<std::pair<std::string, std::string>> env = {
        {"LC_ALL", "C"},
        {"GIT_TERMINAL_PROMPT", "0"},
        {"GIT_PAGER", "cat"},
        {"GIT_OPTIONAL_LOCKS", "0"},
    };
    return env;
}

std::string trim_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

int parse_int(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{}) throw Error(ErrorKind::GitFailure, "expected integer, got '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_fields(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace

bool is_hex_id(std::string_view s, std::size_t min_len, std::size_t max_len) noexcept {
    if (s.size() < min_len || s.size() > max_len) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c) != 0; });
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

RepoHandle::RepoHandle(fs::path root, int context)
    : root_(std::move(root)), default_context_(context), cache_(std::make_shared<Cache>()) {}

RepoHandle open_repo(const fs::path& path, std::optional<int> context_lines) {
    int ctx = context_lines.value_or(RepoHandle::kDefaultContext);
    if (ctx < 0) throw Error(ErrorKind::InvalidArgument, "context_lines must be >= 0");
    std::error_code ec;
    if (!fs::is_directory(path, ec)) throw Error(ErrorKind::NotARepository, path.string() + " is not a directory");
    fs::path canon = fs::canonical(path, ec);
    if (ec) throw Error(ErrorKind::NotARepository, path.string());

    auto r = run_process({"git", "-C", canon.string(), "rev-parse", "--is-bare-repository", "--absolute-git-dir",
                          "--show-toplevel"},
                         {.cwd = {}, .env = git_env(), .input = {}});
    if (r.exit_code != 0) {
        // --show-toplevel fails inside bare repositories on older gits; retry without it.
        r = run_process({"git", "-C", canon.string(), "rev-parse", "--is-bare-repository", "--absolute-git-dir"},
                        {.cwd = {}, .env = git_env(), .input = {}});
        if (r.exit_code != 0) throw Error(ErrorKind::NotARepository, canon.string() + ": " + trim_newline(r.err));
    }
    auto lines = split_lines(r.out);
    if (lines.size() < 2) throw Error(ErrorKind::NotARepository, canon.string());
    bool bare = lines[0] == "true";
    fs::path owner = bare ? fs::path(lines[1]) : (lines.size() >= 3 ? fs::path(lines[2]) : fs::path{});
    if (fs::canonical(owner, ec) != canon) {
        throw Error(ErrorKind::NotARepository, canon.string() + " is not the root of a git repository");
    }
    return RepoHandle(canon, ctx);
}

RepoHandle::Raw RepoHandle::git_raw(const std::vector<std::string>& args, const std::string& input) const {
    std::vector<std::string> argv = {"git",
                                     "-C",
                                     root_.string(),
                                     "--no-pager",
                                     "-c",
                                     "core.quotepath=false",
                                     "-c",
                                     "color.ui=never",
                                     "-c",
                                     "diff.noprefix=false",
                                     "-c",
                                     "diff.mnemonicprefix=false",
                                     "-c",
                                     "blame.ignoreRevsFile=",
                                     "-c",
                                     "core.autocrlf=false"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto r = run_process(argv, {.cwd = {}, .env = git_env(), .input = input});
    return {r.exit_code, std::move(r.out), std::move(r.err)};
}

std::string RepoHandle::git(const std::vector<std::string>& args, const std::string& input) const {
    auto r = git_raw(args, input);
    if (r.code != 0) {
        std::string cmd;
        for (const auto& a : args) cmd += a + " ";
        throw Error(ErrorKind::GitFailure, "git " + cmd + "failed: " + trim_newline(r.err));
    }
    return std::move(r.out);
}

std::string RepoHandle::resolve(std::string_view id_or_prefix) const {
    std::string key(id_or_prefix);
    {
        std::lock_guard lock(cache_->mu);
        if (auto it = cache_->resolved.find(key); it != cache_->resolved.end()) return it->second;
    }
    if (key.empty() || key.front() == '-' || key.find_first_of(" \t\n:") != std::string::npos) {
        throw Error(ErrorKind::UnknownCommit, "'" + key + "'");
    }
    auto r = git_raw({"rev-parse", "--verify", "--end-of-options", key + "^{commit}"});
    if (r.code != 0) {
        if (r.err.find("ambiguous") != std::string::npos) throw Error(ErrorKind::AmbiguousPrefix, "'" + key + "'");
        throw Error(ErrorKind::UnknownCommit, "'" + key + "'");
    }
    // rev-parse may still warn about an ambiguous short id while picking one
    if (r.err.find("ambiguous") != std::string::npos) throw Error(ErrorKind::AmbiguousPrefix, "'" + key + "'");
    std::string full = trim_newline(r.out);
    if (!is_hex_id(full, 40, 64)) throw Error(ErrorKind::UnknownCommit, "'" + key + "'");
    std::lock_guard lock(cache_->mu);
    cache_->resolved.emplace(key, full);
    return full;
}

CommitMeta RepoHandle::commit(std::string_view id_or_prefix) const {
    std::string id = resolve(id_or_prefix);
    {
        std::lock_guard lock(cache_->mu);
        if (auto it = cache_->metas.find(id); it != cache_->metas.end()) return it->second;
    }
    std::string out = git({"show", "-s", "--no-show-signature", "--format=%H%x00%h%x00%at%x00%P%x00%B", id});
    auto fields = split_fields(out, '\0');
    if (fields.size() < 5) throw Error(ErrorKind::GitFailure, "unexpected show output for " + id);
    CommitMeta meta;
    meta.id = std::string(fields[0]);
    meta.short_id = std::string(fields[1]);
    meta.author_time = parse_int(fields[2]);
    std::istringstream parents{std::string(fields[3])};
    for (std::string p; parents >> p;) meta.parent_ids.push_back(p);
    // %B is followed by the newline the format itself appends.
    std::string message(fields[4]);
    if (!message.empty() && message.back() == '\n') message.pop_back();
    meta.message = std::move(message);

    std::lock_guard lock(cache_->mu);
    cache_->metas.emplace(id, meta);
    return meta;
}

CommitDiff RepoHandle::show_commit(std::string_view id_or_prefix) const {
    CommitMeta meta = commit(id_or_prefix);
    std::string key = meta.id + "\x1f*\x1f" + std::to_string(default_context_);
    {
        std::lock_guard lock(cache_->mu);
        if (auto it = cache_->diffs.find(key); it != cache_->diffs.end()) return {meta, it->second};
    }
    std::vector<std::string> args = {"diff-tree",     "-p",          "--no-color", "--no-ext-diff", "--no-textconv",
                                     "--no-commit-id", "-M",
                                     "-U" + std::to_string(default_context_)};
    if (meta.is_root()) {
        args.push_back("--root");
        args.push_back(meta.id);
    } else {
        args.push_back(meta.parent_ids.front());
        args.push_back(meta.id);
    }
    std::string diff = git(args);
    std::lock_guard lock(cache_->mu);
    cache_->diffs.emplace(key, diff);
    return {meta, diff};
}

std::string RepoHandle::commit_file_diff(std::string_view commit_id, const std::string& /*path*/, int context) const {
    CommitMeta meta = commit(commit_id);
    std::string key = meta.id + "\x1f" + std::to_string(context);
    {
        std::lock_guard lock(cache_->mu);
        if (auto it = cache_->diffs.find(key); it != cache_->diffs.end()) return it->second;
    }
    // Rename detection needs both sides of the pair, so the path filter is
    // applied by the caller on the parsed model rather than as a pathspec.
    std::vector<std::string> args = {"diff-tree",     "-p",          "--no-color", "--no-ext-diff", "--no-textconv",
                                     "--no-commit-id", "-M",
                                     "-U" + std::to_string(context)};
    if (meta.is_root()) {
        args.push_back("--root");
        args.push_back(meta.id);
    } else {
        args.push_back(meta.parent_ids.front());
        args.push_back(meta.id);
    }
    std::string diff = git(args);
    std::lock_guard lock(cache_->mu);
    cache_->diffs.emplace(key, diff);
    return diff;
}

std::optional<std::string> RepoHandle::file_at(std::string_view revision, const std::string& file) const {
    std::string id = resolve(revision);
    std::string key = id + "\x1f" + file;
    {
        std::lock_guard lock(cache_->mu);
        if (auto it = cache_->files.find(key); it != cache_->files.end()) return it->second;
    }
    std::optional<std::string> content;
    if (!file.empty() && file.front() != '/') {
        auto type = git_raw({"cat-file", "-t", id + ":" + file});
        if (type.code == 0 && trim_newline(type.out) == "blob") {
            auto r = git_raw({"cat-file", "blob", id + ":" + file});
            if (r.code == 0) content = std::move(r.out);
        }
    }
    std::lock_guard lock(cache_->mu);
    cache_->files.emplace(key, content);
    return content;
}

BlameRecord RepoHandle::blame_line(std::string_view revision, const std::string& file, int line) const {
    return blame_lines(revision, file, {line}).front();
}

std::vector<BlameRecord> RepoHandle::blame_lines(std::string_view revision, const std::string& file,
                                                 const std::vector<int>& lines) const {
    std::string id = resolve(revision);
    auto content = file_at(id, file);
    if (!content) throw Error(ErrorKind::FileAbsent, file + " at " + id);
    int count = static_cast<int>(split_lines(*content).size());
    for (int l : lines) {
        if (l < 1 || l > count) {
            throw Error(ErrorKind::LineOutOfRange,
                        file + ":" + std::to_string(l) + " (file has " + std::to_string(count) + " lines)");
        }
    }
    if (lines.empty()) return {};

    std::vector<int> unique = lines;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

    std::vector<std::string> args = {"blame", "--line-porcelain"};
    for (int l : unique) {
        args.push_back("-L");
        args.push_back(std::to_string(l) + "," + std::to_string(l));
    }
    args.push_back(id);
    args.push_back("--");
    args.push_back(file);
    std::string out = git(args);

    std::unordered_map<int, BlameRecord> by_final;
    BlameRecord current;
    int final_line = 0;
    bool in_entry = false;
    for (const auto& raw : split_lines(out)) {
        if (!in_entry) {
            auto parts = split_fields(raw, ' ');
            if (parts.size() < 3 || !is_hex_id(parts[0], 40, 64)) continue;
            current = BlameRecord{};
            current.commit_id = std::string(parts[0]);
            current.line_no = parse_int(parts[1]);
            final_line = parse_int(parts[2]);
            in_entry = true;
            continue;
        }
        if (!raw.empty() && raw.front() == '\t') {
            current.line_text = raw.substr(1);
            by_final[final_line] = current;
            in_entry = false;
        } else if (raw.rfind("filename ", 0) == 0) {
            current.file_path = raw.substr(9);
        }
    }

    std::vector<BlameRecord> result;
    result.reserve(lines.size());
    for (int l : lines) {
        auto it = by_final.find(l);
        if (it == by_final.end()) throw Error(ErrorKind::GitFailure, "blame produced no entry for line " + std::to_string(l));
        result.push_back(it->second);
    }
    return result;
}

bool RepoHandle::is_ancestor(std::string_view a, std::string_view b) const {
    std::string ida = resolve(a);
    std::string idb = resolve(b);
    if (ida == idb) return true;
    auto r = git_raw({"merge-base", "--is-ancestor", ida, idb});
    if (r.code == 0) return true;
    if (r.code == 1) return false;
    throw Error(ErrorKind::GitFailure, "merge-base --is-ancestor: " + trim_newline(r.err));
}

std::vector<std::string> RepoHandle::tracked_files(std::string_view revision) const {
    std::string id = resolve(revision);
    std::string out = git({"ls-tree", "-r", "-z", "--full-tree", "--name-only", id});
    std::vector<std::string> files;
    for (auto f : split_fields(out, '\0')) {
        if (!f.empty()) files.emplace_back(f);
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<Blob> RepoHandle::tree_blobs(std::string_view revision) const {
    std::string id = resolve(revision);
    std::string listing = git({"ls-tree", "-r", "-z", "--full-tree", id});
    std::vector<std::pair<std::string, std::string>> entries;  // (path, oid)
    for (auto rec : split_fields(listing, '\0')) {
        if (rec.empty()) continue;
        auto tab = rec.find('\t');
        if (tab == std::string_view::npos) continue;
        auto meta = split_fields(rec.substr(0, tab), ' ');
        if (meta.size() < 3 || meta[1] != "blob" || meta[0] == "120000") continue;
        entries.emplace_back(std::string(rec.substr(tab + 1)), std::string(meta[2]));
    }
    std::sort(entries.begin(), entries.end());
    if (entries.empty()) return {};

    std::string request;
    for (const auto& [path, oid] : entries) request += oid + "\n";
    std::string out = git({"cat-file", "--batch"}, request);

    std::vector<Blob> blobs;
    blobs.reserve(entries.size());
    std::size_t pos = 0;
    for (const auto& [path, oid] : entries) {
        auto nl = out.find('\n', pos);
        if (nl == std::string::npos) throw Error(ErrorKind::GitFailure, "truncated cat-file --batch output");
        auto header = split_fields(std::string_view(out).substr(pos, nl - pos), ' ');
        if (header.size() < 3) throw Error(ErrorKind::GitFailure, "bad cat-file header");
        std::size_t size = static_cast<std::size_t>(std::stoull(std::string(header[2])));
        std::string content = out.substr(nl + 1, size);
        pos = nl + 1 + size + 1;
        if (content.find('\0') != std::string::npos) continue;
        blobs.push_back({path, std::move(content)});
    }
    return blobs;
}

}  // namespace masszz

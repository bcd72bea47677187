#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace masszz {

struct CommitMeta {
    std::string id;        // 40 lowercase hex
    std::string short_id;  // unique prefix as git abbreviates it
    std::int64_t author_time = 0;  // seconds since epoch, UTC
    std::string message;
    std::vector<std::string> parent_ids;  // first parent first

    bool is_root() const noexcept { return parent_ids.empty(); }
    bool is_merge() const noexcept { return parent_ids.size() >= 2; }
    std::optional<std::string> first_parent() const {
        if (parent_ids.empty()) return std::nullopt;
        return parent_ids.front();
    }
};

struct BlameRecord {
    std::string commit_id;  // last commit at or before the queried revision touching the line
    std::string file_path;  // path in commit_id (renames followed)
    int line_no = 0;        // 1-based position in commit_id
    std::string line_text;
};

struct CommitDiff {
    CommitMeta meta;
    std::string diff;  // unified diff against first parent (empty tree for roots)
};

/// A tracked file at some revision, as handed to the symbol-search kernel.
struct Blob {
    std::string path;
    std::string content;
};

/// Read-only facade over a local git clone. Queries shell out to the git
/// plumbing commands and never touch the working tree. Results that are
/// immutable for a given object id are memoized per handle.
class RepoHandle {
public:
    static constexpr int kDefaultContext = 5;

    const std::filesystem::path& root() const noexcept { return root_; }
    int default_context() const noexcept { return default_context_; }

    /// Full 40-hex id for a commit id, unique prefix, or ref name.
    std::string resolve(std::string_view id_or_prefix) const;

    CommitMeta commit(std::string_view id_or_prefix) const;
    CommitDiff show_commit(std::string_view id_or_prefix) const;

    /// Diff of `commit` against its first parent with `context` lines, for
    /// looking up `path`. The whole commit is returned so renames keep both
    /// sides; callers select the file from the parsed model. Cached.
    std::string commit_file_diff(std::string_view commit, const std::string& path, int context) const;

    BlameRecord blame_line(std::string_view revision, const std::string& file, int line) const;

    /// Blames several lines of one file with a single git invocation. Output is
    /// in the order of `lines`.
    std::vector<BlameRecord> blame_lines(std::string_view revision, const std::string& file,
                                         const std::vector<int>& lines) const;

    std::optional<std::string> file_at(std::string_view revision, const std::string& file) const;

    bool is_ancestor(std::string_view a, std::string_view b) const;

    std::vector<std::string> tracked_files(std::string_view revision) const;

    /// Every tracked regular text file at the revision (binary blobs skipped),
    /// sorted by path.
    std::vector<Blob> tree_blobs(std::string_view revision) const;

private:
    friend RepoHandle open_repo(const std::filesystem::path&, std::optional<int>);
    RepoHandle(std::filesystem::path root, int context);

    std::string git(const std::vector<std::string>& args, const std::string& input = {}) const;
    struct Raw {
        int code;
        std::string out;
        std::string err;
    };
    Raw git_raw(const std::vector<std::string>& args, const std::string& input = {}) const;

    std::filesystem::path root_;
    int default_context_ = kDefaultContext;

    struct Cache {
        std::mutex mu;
        std::map<std::string, std::string> resolved;
        std::map<std::string, CommitMeta> metas;
        std::map<std::string, std::string> diffs;
        std::map<std::string, std::optional<std::string>> files;
    };
    std::shared_ptr<Cache> cache_;
};

/// Opens a clone rooted at `path` (working tree root or bare repository).
/// Throws Error{NotARepository} when `path` holds no git metadata of its own.
RepoHandle open_repo(const std::filesystem::path& path, std::optional<int> context_lines = std::nullopt);

/// Splits file content into lines; a trailing newline does not produce an
/// extra empty line.
std::vector<std::string> split_lines(std::string_view text);

bool is_hex_id(std::string_view s, std::size_t min_len = 4, std::size_t max_len = 40) noexcept;

}  // namespace masszz

#pragma once

#include "masszz/repo.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace masszz::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Path -> content; nullopt deletes the file.
using Changes = std::map<std::string, std::optional<std::string>>;

/// Builds small repositories through `git fast-import`, so object ids only
/// depend on the commits described.
class RepoBuilder {
public:
    /// Commit on top of the previous one (or a root when first). Returns the
    /// index used to refer to it in later calls.
    int commit(const std::string& message, const Changes& changes, std::int64_t time = 0);

    /// Commit with explicit parents (indices from earlier calls); two or more
    /// parents make a merge.
    int commit_with_parents(const std::string& message, const Changes& changes, const std::vector<int>& parents,
                            std::int64_t time = 0);

    /// Writes a bare repository at `dir` and returns the commit ids in call order.
    std::vector<std::string> build(const std::filesystem::path& dir) const;

    std::string stream() const;

private:
    struct Entry {
        std::string message;
        Changes changes;
        std::vector<int> parents;
        std::int64_t time;
    };
    std::vector<Entry> entries_;
};

/// Imports tests/fixtures/syncope/syncope.fi into a bare repository at `dir`.
RepoHandle materialize_syncope(const std::filesystem::path& dir);

/// Writes the syncope evaluation dataset and its repository under `dir`;
/// returns the dataset path.
std::filesystem::path materialize_eval_fixture(const std::filesystem::path& dir);

/// Directory holding test fixtures (set at configure time).
std::filesystem::path fixture_dir();

/// Lines joined with '\n', with a trailing newline.
std::string lines(const std::vector<std::string>& rows);

}  // namespace masszz::testing

#pragma once

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace masszz {

class RepoHandle;

enum class LineKind { Added, Deleted, Context };

struct ChangedLine {
    LineKind kind = LineKind::Context;
    std::optional<int> old_no;  // absent for Added
    std::optional<int> new_no;  // absent for Deleted
    std::string text;           // without the +/-/space prefix
    bool no_newline = false;    // followed by "\ No newline at end of file"
};

struct Hunk {
    int old_start = 0;
    int old_len = 0;
    int new_start = 0;
    int new_len = 0;
    std::string heading;  // text after the closing "@@", if any
    std::vector<ChangedLine> lines;
    int index = 0;  // position within the whole commit, file order then hunk order
};

struct FileDiff {
    std::optional<std::string> old_path;  // absent for new files
    std::optional<std::string> new_path;  // absent for deleted files
    std::vector<Hunk> hunks;
    bool binary = false;
    std::optional<std::string> old_mode;
    std::optional<std::string> new_mode;

    const std::string& path() const { return new_path ? *new_path : *old_path; }
    bool is_new_file() const noexcept { return !old_path.has_value(); }
    bool is_deleted_file() const noexcept { return !new_path.has_value(); }
};

using Diff = std::vector<FileDiff>;

/// Parses `git diff`/`git show` output. Hunk indexes are assigned across the
/// whole input. Throws MalformedDiff carrying the 1-based offending line.
Diff parse_unified_diff(std::string_view text);

/// Renders the model back to git-style text. Extended headers are normalized
/// (no index lines); hunk bodies are reproduced byte for byte.
std::string render_unified_diff(const Diff& diff);
std::string render_hunk(const Hunk& hunk);

std::size_t total_hunks(const Diff& diff) noexcept;
const Hunk* find_hunk(const Diff& diff, int index, const FileDiff** owner = nullptr) noexcept;

struct DeletedLine {
    std::string path;  // old path
    int old_no = 0;
    std::string text;
    int hunk_index = 0;
};

/// Every line with kind Deleted, in file then line order. A modification shows
/// up here as the deleted half of its delete/add pair.
std::vector<DeletedLine> deleted_or_modified_lines(const Diff& diff);

enum class Language { CLike, Java, Unknown };

Language language_for_path(std::string_view path) noexcept;

/// True iff the line is blank or consists only of a comment. Lexical only.
bool is_cosmetic(std::string_view text, Language lang) noexcept;

/// Per-line cosmetic flags for the old side (context + deleted lines) of a
/// hunk. Block-comment state is tracked inside the hunk and starts as "not in
/// a comment" at the hunk boundary. Entries for Added lines are false.
std::vector<bool> old_side_cosmetic_mask(const Hunk& hunk, Language lang);
std::vector<bool> new_side_cosmetic_mask(const Hunk& hunk, Language lang);

/// Whitespace- and comment-insensitive form of a code line, used to decide
/// whether a rewrite of a line was purely cosmetic.
std::string normalize_code(std::string_view text, Language lang);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - editDistance(trim a, trim b) / max(|trim a|, |trim b|); 1.0 when both
/// trimmed strings are empty.
double line_similarity(std::string_view a, std::string_view b);

std::string_view trim(std::string_view s) noexcept;

struct LinePosition {
    std::string file;
    int line_no = 0;
    bool operator==(const LinePosition&) const = default;
};

/// Maps a line of `file` at `commit` to its position in the first parent.
/// Unchanged lines go through hunk offsets exactly; a line the commit added is
/// paired with the most similar deleted line of the same hunk when that
/// similarity reaches `threshold`. Absent when the line has no pre-image.
std::optional<LinePosition> map_line_backward(const RepoHandle& repo, std::string_view commit, const std::string& file,
                                              int line_no, double threshold);

/// Pure form of the mapping over one file's diff.
std::optional<LinePosition> map_line_through(const FileDiff& file_diff, int line_no, double threshold);

nlohmann::json to_json(const Diff& diff);
Diff diff_from_json(const nlohmann::json& j);

}  // namespace masszz

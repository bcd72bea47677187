#include "masszz/diff.hpp"

#include "masszz/error.hpp"
#include "masszz/repo.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace masszz {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) noexcept {
    return s.substr(0, prefix.size()) == prefix;
}

std::string unquote_c(std::string_view s) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c != '\\' || i + 2 >= s.size()) {
            out.push_back(c);
            continue;
        }
        char e = s[++i];
        switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'a': out.push_back('\a'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'r': out.push_back('\r'); break;
        case 'v': out.push_back('\v'); break;
        default:
            if (e >= '0' && e <= '7') {
                int v = e - '0';
                for (int k = 0; k < 2 && i + 1 < s.size() - 1 && s[i + 1] >= '0' && s[i + 1] <= '7'; ++k) {
                    v = v * 8 + (s[++i] - '0');
                }
                out.push_back(static_cast<char>(v));
            } else {
                out.push_back(e);
            }
        }
    }
    return out;
}

std::string strip_prefix(std::string path) {
    if (path.size() > 2 && (starts_with(path, "a/") || starts_with(path, "b/"))) return path.substr(2);
    return path;
}

// "--- a/path" and "+++ b/path" may carry a trailing tab plus timestamp in
// non-git diffs.
std::optional<std::string> parse_marker_path(std::string_view rest) {
    std::string_view p = rest;
    if (!p.empty() && p.front() != '"') {
        if (auto tab = p.find('\t'); tab != std::string_view::npos) p = p.substr(0, tab);
    }
    if (p == "/dev/null") return std::nullopt;
    return strip_prefix(unquote_c(p));
}

std::pair<std::string, std::string> parse_git_header_paths(std::string_view rest) {
    if (!rest.empty() && rest.front() == '"') {
        auto close = rest.find('"', 1);
        while (close != std::string_view::npos && rest[close - 1] == '\\') close = rest.find('"', close + 1);
        if (close != std::string_view::npos && close + 1 < rest.size()) {
            auto a = unquote_c(rest.substr(0, close + 1));
            auto b = rest.substr(close + 2);
            return {strip_prefix(a), strip_prefix(unquote_c(b))};
        }
    }
    // Unquoted "a/P b/P": when both sides are equal the split is unambiguous.
    if (rest.size() >= 5 && (rest.size() - 1) % 2 == 0) {
        std::size_t half = (rest.size() - 1) / 2;
        auto a = rest.substr(0, half);
        auto b = rest.substr(half + 1);
        if (rest[half] == ' ' && a.size() > 2 && b.size() > 2 && a.substr(2) == b.substr(2)) {
            return {strip_prefix(std::string(a)), strip_prefix(std::string(b))};
        }
    }
    auto sep = rest.rfind(" b/");
    if (sep != std::string_view::npos) {
        return {strip_prefix(std::string(rest.substr(0, sep))), strip_prefix(std::string(rest.substr(sep + 1)))};
    }
    return {std::string(rest), std::string(rest)};
}

bool parse_range(std::string_view s, int& start, int& len) {
    auto comma = s.find(',');
    auto num = [](std::string_view t, int& out) {
        if (t.empty()) return false;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
        return ec == std::errc{} && p == t.data() + t.size() && out >= 0;
    };
    if (comma == std::string_view::npos) {
        len = 1;
        return num(s, start);
    }
    return num(s.substr(0, comma), start) && num(s.substr(comma + 1), len);
}

bool parse_hunk_header(std::string_view line, Hunk& h) {
    // @@ -a[,b] +c[,d] @@[ heading]
    if (!starts_with(line, "@@ -")) return false;
    auto close = line.find(" @@", 4);
    if (close == std::string_view::npos) return false;
    auto ranges = line.substr(4, close - 4);
    auto plus = ranges.find(" +");
    if (plus == std::string_view::npos) return false;
    if (!parse_range(ranges.substr(0, plus), h.old_start, h.old_len)) return false;
    if (!parse_range(ranges.substr(plus + 2), h.new_start, h.new_len)) return false;
    auto tail = line.substr(close + 3);
    if (!tail.empty() && tail.front() == ' ') tail.remove_prefix(1);
    h.heading = std::string(tail);
    return true;
}

std::string format_range(int start, int len) {
    if (len == 1) return std::to_string(start);
    return std::to_string(start) + "," + std::to_string(len);
}

}  // namespace

Diff parse_unified_diff(std::string_view text) {
    Diff files;
    FileDiff* file = nullptr;
    Hunk* hunk = nullptr;
    int old_left = 0, new_left = 0, old_no = 0, new_no = 0;
    bool skipping_binary_patch = false;
    int next_index = 0;

    std::size_t ln = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos && pos == text.size()) break;
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++ln;

        if (hunk && (old_left > 0 || new_left > 0)) {
            char tag = line.empty() ? ' ' : line.front();
            std::string_view body = line.empty() ? line : line.substr(1);
            ChangedLine cl;
            cl.text = std::string(body);
            switch (tag) {
            case ' ':
                if (old_left == 0 || new_left == 0) throw MalformedDiff(ln, "context line exceeds hunk length");
                cl.kind = LineKind::Context;
                cl.old_no = old_no++;
                cl.new_no = new_no++;
                --old_left;
                --new_left;
                break;
            case '-':
                if (old_left == 0) throw MalformedDiff(ln, "deleted line exceeds hunk length");
                cl.kind = LineKind::Deleted;
                cl.old_no = old_no++;
                --old_left;
                break;
            case '+':
                if (new_left == 0) throw MalformedDiff(ln, "added line exceeds hunk length");
                cl.kind = LineKind::Added;
                cl.new_no = new_no++;
                --new_left;
                break;
            case '\\':
                if (hunk->lines.empty()) throw MalformedDiff(ln, "no-newline marker before any line");
                hunk->lines.back().no_newline = true;
                continue;
            default:
                throw MalformedDiff(ln, "hunk ended early, unexpected '" + std::string(line.substr(0, 20)) + "'");
            }
            hunk->lines.push_back(std::move(cl));
            continue;
        }

        if (starts_with(line, "\\")) {
            if (!hunk || hunk->lines.empty()) throw MalformedDiff(ln, "no-newline marker outside a hunk");
            hunk->lines.back().no_newline = true;
            continue;
        }

        if (starts_with(line, "diff --git ")) {
            auto [a, b] = parse_git_header_paths(line.substr(11));
            files.push_back(FileDiff{});
            file = &files.back();
            file->old_path = a;
            file->new_path = b;
            hunk = nullptr;
            skipping_binary_patch = false;
            continue;
        }
        if (skipping_binary_patch) continue;

        if (starts_with(line, "@@")) {
            if (!file) throw MalformedDiff(ln, "hunk header before any file header");
            Hunk h;
            if (!parse_hunk_header(line, h)) throw MalformedDiff(ln, "bad hunk header");
            if (!file->hunks.empty()) {
                const Hunk& prev = file->hunks.back();
                if (h.old_start < prev.old_start + prev.old_len) throw MalformedDiff(ln, "overlapping hunk");
            }
            h.index = next_index++;
            file->hunks.push_back(std::move(h));
            hunk = &file->hunks.back();
            old_left = hunk->old_len;
            new_left = hunk->new_len;
            old_no = hunk->old_len == 0 ? hunk->old_start + 1 : hunk->old_start;
            new_no = hunk->new_len == 0 ? hunk->new_start + 1 : hunk->new_start;
            continue;
        }
        if (starts_with(line, "--- ")) {
            if (!file || !file->hunks.empty()) {
                files.push_back(FileDiff{});
                file = &files.back();
            }
            hunk = nullptr;
            file->old_path = parse_marker_path(line.substr(4));
            continue;
        }
        if (starts_with(line, "+++ ")) {
            if (!file) throw MalformedDiff(ln, "'+++' without a preceding '---'");
            file->new_path = parse_marker_path(line.substr(4));
            if (!file->old_path && !file->new_path) throw MalformedDiff(ln, "both sides are /dev/null");
            continue;
        }

        if (!file) continue;  // preamble such as a commit header
        hunk = nullptr;
        if (starts_with(line, "new file mode ")) {
            file->old_path.reset();
            file->new_mode = std::string(line.substr(14));
        } else if (starts_with(line, "deleted file mode ")) {
            file->new_path.reset();
            file->old_mode = std::string(line.substr(18));
        } else if (starts_with(line, "old mode ")) {
            file->old_mode = std::string(line.substr(9));
        } else if (starts_with(line, "new mode ")) {
            file->new_mode = std::string(line.substr(9));
        } else if (starts_with(line, "rename from ")) {
            file->old_path = unquote_c(line.substr(12));
        } else if (starts_with(line, "rename to ")) {
            file->new_path = unquote_c(line.substr(10));
        } else if (starts_with(line, "copy from ")) {
            file->old_path = unquote_c(line.substr(10));
        } else if (starts_with(line, "copy to ")) {
            file->new_path = unquote_c(line.substr(8));
        } else if (starts_with(line, "Binary files ")) {
            file->binary = true;
        } else if (starts_with(line, "GIT binary patch")) {
            file->binary = true;
            skipping_binary_patch = true;
        } else if (starts_with(line, "index ") || starts_with(line, "similarity index ") ||
                   starts_with(line, "dissimilarity index ")) {
            // informational
        } else if (line.empty()) {
            // blank separator lines appear between commits in `git log -p`
        } else {
            throw MalformedDiff(ln, "unexpected line '" + std::string(line.substr(0, 40)) + "'");
        }
    }

    if (hunk && (old_left > 0 || new_left > 0)) throw MalformedDiff(ln, "diff ends inside a hunk");
    return files;
}

std::string render_hunk(const Hunk& h) {
    std::string out = "@@ -" + format_range(h.old_start, h.old_len) + " +" + format_range(h.new_start, h.new_len) + " @@";
    if (!h.heading.empty()) out += " " + h.heading;
    out += "\n";
    for (const auto& l : h.lines) {
        out += l.kind == LineKind::Added ? '+' : l.kind == LineKind::Deleted ? '-' : ' ';
        out += l.text;
        out += "\n";
        if (l.no_newline) out += "\\ No newline at end of file\n";
    }
    return out;
}

std::string render_unified_diff(const Diff& diff) {
    std::string out;
    for (const auto& f : diff) {
        const std::string& a = f.old_path ? *f.old_path : *f.new_path;
        const std::string& b = f.new_path ? *f.new_path : *f.old_path;
        out += "diff --git a/" + a + " b/" + b + "\n";
        if (f.is_new_file()) {
            out += "new file mode " + f.new_mode.value_or("100644") + "\n";
        } else if (f.is_deleted_file()) {
            out += "deleted file mode " + f.old_mode.value_or("100644") + "\n";
        } else {
            if (f.old_mode && f.new_mode && *f.old_mode != *f.new_mode) {
                out += "old mode " + *f.old_mode + "\n";
                out += "new mode " + *f.new_mode + "\n";
            }
            if (a != b) {
                out += "rename from " + a + "\n";
                out += "rename to " + b + "\n";
            }
        }
        if (f.binary) {
            out += "Binary files " + (f.old_path ? "a/" + a : std::string("/dev/null")) + " and " +
                   (f.new_path ? "b/" + b : std::string("/dev/null")) + " differ\n";
            continue;
        }
        if (f.hunks.empty()) continue;
        out += "--- " + (f.old_path ? "a/" + *f.old_path : std::string("/dev/null")) + "\n";
        out += "+++ " + (f.new_path ? "b/" + *f.new_path : std::string("/dev/null")) + "\n";
        for (const auto& h : f.hunks) out += render_hunk(h);
    }
    return out;
}

std::size_t total_hunks(const Diff& diff) noexcept {
    std::size_t n = 0;
    for (const auto& f : diff) n += f.hunks.size();
    return n;
}

const Hunk* find_hunk(const Diff& diff, int index, const FileDiff** owner) noexcept {
    for (const auto& f : diff) {
        for (const auto& h : f.hunks) {
            if (h.index == index) {
                if (owner) *owner = &f;
                return &h;
            }
        }
    }
    return nullptr;
}

std::vector<DeletedLine> deleted_or_modified_lines(const Diff& diff) {
    std::vector<DeletedLine> out;
    for (const auto& f : diff) {
        if (!f.old_path) continue;
        for (const auto& h : f.hunks) {
            for (const auto& l : h.lines) {
                if (l.kind == LineKind::Deleted) out.push_back({*f.old_path, *l.old_no, l.text, h.index});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// cosmetic changes

Language language_for_path(std::string_view path) noexcept {
    auto dot = path.rfind('.');
    if (dot == std::string_view::npos) return Language::Unknown;
    auto ext = path.substr(dot + 1);
    if (ext == "java") return Language::Java;
    static constexpr std::string_view c_like[] = {"c",  "h",  "cc", "cpp", "cxx", "hpp", "hh",    "hxx", "inl", "ipp",
                                                  "js", "ts", "cs", "go",  "rs",  "kt",  "scala", "swift", "m",   "mm"};
    for (auto e : c_like) {
        if (ext == e) return Language::CLike;
    }
    return Language::Unknown;
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

namespace {

struct ScanResult {
    bool has_code = false;
    bool in_block_after = false;
    std::string code;  // code characters with comments removed
};

// Walks a line tracking /* */ and // comments, skipping string and char literals.
ScanResult scan_comments(std::string_view s, bool in_block) {
    ScanResult r;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        char next = i + 1 < s.size() ? s[i + 1] : '\0';
        if (in_block) {
            if (c == '*' && next == '/') {
                in_block = false;
                ++i;
            }
            continue;
        }
        if (quote) {
            r.code.push_back(c);
            if (c == '\\' && i + 1 < s.size()) {
                r.code.push_back(s[++i]);
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '/' && next == '/') break;
        if (c == '/' && next == '*') {
            in_block = true;
            ++i;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        r.code.push_back(c);
        if (!std::isspace(static_cast<unsigned char>(c))) r.has_code = true;
    }
    r.in_block_after = in_block;
    return r;
}

std::vector<bool> side_mask(const Hunk& hunk, Language lang, LineKind excluded) {
    std::vector<bool> mask(hunk.lines.size(), false);
    bool in_block = false;
    for (std::size_t i = 0; i < hunk.lines.size(); ++i) {
        const auto& l = hunk.lines[i];
        if (l.kind == excluded) continue;
        if (lang == Language::Unknown) {
            mask[i] = trim(l.text).empty();
            continue;
        }
        auto scan = scan_comments(l.text, in_block);
        mask[i] = in_block ? !scan.has_code : is_cosmetic(l.text, lang);
        in_block = scan.in_block_after;
    }
    return mask;
}

}  // namespace

bool is_cosmetic(std::string_view text, Language lang) noexcept {
    auto t = trim(text);
    if (t.empty()) return true;
    if (lang == Language::Unknown) return false;
    if (starts_with(t, "//")) return true;
    if (starts_with(t, "/*")) {
        auto close = t.find("*/", 2);
        if (close == std::string_view::npos) return true;
        auto rest = trim(t.substr(close + 2));
        return rest.empty() || is_cosmetic(rest, lang);
    }
    if (starts_with(t, "*/")) {
        auto rest = trim(t.substr(2));
        return rest.empty() || is_cosmetic(rest, lang);
    }
    if (t == "*" || starts_with(t, "* ") || starts_with(t, "**") || starts_with(t, "*\t")) {
        // Javadoc/doxygen continuation; a dereference like "*p = 0;" has no space.
        return t.find("*/") == std::string_view::npos || trim(t.substr(t.find("*/") + 2)).empty();
    }
    return false;
}

std::vector<bool> old_side_cosmetic_mask(const Hunk& hunk, Language lang) {
    return side_mask(hunk, lang, LineKind::Added);
}

std::vector<bool> new_side_cosmetic_mask(const Hunk& hunk, Language lang) {
    return side_mask(hunk, lang, LineKind::Deleted);
}

std::string normalize_code(std::string_view text, Language lang) {
    std::string code = lang == Language::Unknown ? std::string(text) : scan_comments(text, false).code;
    std::string out;
    for (char c : code) {
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// similarity

std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
            diag = up;
        }
    }
    return row[b.size()];
}

double line_similarity(std::string_view a, std::string_view b) {
    auto ta = trim(a);
    auto tb = trim(b);
    std::size_t longest = std::max(ta.size(), tb.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(ta, tb)) / static_cast<double>(longest);
}

// ---------------------------------------------------------------------------
// backward line mapping

std::optional<LinePosition> map_line_through(const FileDiff& fd, int line_no, double threshold) {
    if (!fd.old_path || !fd.new_path) return std::nullopt;
    int delta = 0;
    for (const auto& h : fd.hunks) {
        int first = h.new_len > 0 ? h.new_start : h.new_start + 1;
        if (line_no < first) return LinePosition{*fd.old_path, line_no + delta};
        if (h.new_len > 0 && line_no <= h.new_start + h.new_len - 1) {
            const ChangedLine* target = nullptr;
            for (const auto& l : h.lines) {
                if (l.new_no && *l.new_no == line_no) {
                    target = &l;
                    break;
                }
            }
            if (!target) return std::nullopt;
            if (target->kind == LineKind::Context) return LinePosition{*fd.old_path, *target->old_no};
            const ChangedLine* best = nullptr;
            double best_sim = -1.0;
            for (const auto& l : h.lines) {
                if (l.kind != LineKind::Deleted) continue;
                double sim = line_similarity(target->text, l.text);
                if (sim > best_sim) {
                    best_sim = sim;
                    best = &l;
                }
            }
            if (best && best_sim >= threshold) return LinePosition{*fd.old_path, *best->old_no};
            return std::nullopt;
        }
        delta += h.old_len - h.new_len;
    }
    return LinePosition{*fd.old_path, line_no + delta};
}

std::optional<LinePosition> map_line_backward(const RepoHandle& repo, std::string_view commit, const std::string& file,
                                              int line_no, double threshold) {
    CommitMeta meta = repo.commit(commit);
    auto content = repo.file_at(meta.id, file);
    if (!content) throw Error(ErrorKind::FileAbsent, file + " at " + meta.id);
    int count = static_cast<int>(split_lines(*content).size());
    if (line_no < 1 || line_no > count) {
        throw Error(ErrorKind::LineOutOfRange, file + ":" + std::to_string(line_no));
    }
    if (meta.is_root()) return std::nullopt;

    Diff diff = parse_unified_diff(repo.commit_file_diff(meta.id, file, repo.default_context()));
    for (const auto& fd : diff) {
        if (fd.new_path && *fd.new_path == file) return map_line_through(fd, line_no, threshold);
    }
    return LinePosition{file, line_no};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const char* kind_name(LineKind k) {
    switch (k) {
    case LineKind::Added: return "added";
    case LineKind::Deleted: return "deleted";
    case LineKind::Context: return "context";
    }
    return "context";
}

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const Diff& diff) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : diff) {
        nlohmann::json jf;
        jf["old_path"] = opt(f.old_path);
        jf["new_path"] = opt(f.new_path);
        if (f.binary) jf["binary"] = true;
        nlohmann::json hunks = nlohmann::json::array();
        for (const auto& h : f.hunks) {
            nlohmann::json jh;
            jh["index"] = h.index;
            jh["old_start"] = h.old_start;
            jh["old_len"] = h.old_len;
            jh["new_start"] = h.new_start;
            jh["new_len"] = h.new_len;
            if (!h.heading.empty()) jh["heading"] = h.heading;
            nlohmann::json lines = nlohmann::json::array();
            for (const auto& l : h.lines) {
                nlohmann::json jl;
                jl["kind"] = kind_name(l.kind);
                jl["old_no"] = opt(l.old_no);
                jl["new_no"] = opt(l.new_no);
                jl["text"] = l.text;
                if (l.no_newline) jl["no_newline"] = true;
                lines.push_back(std::move(jl));
            }
            jh["lines"] = std::move(lines);
            hunks.push_back(std::move(jh));
        }
        jf["hunks"] = std::move(hunks);
        files.push_back(std::move(jf));
    }
    return nlohmann::json{{"files", std::move(files)}};
}

Diff diff_from_json(const nlohmann::json& j) {
    Diff diff;
    int next_index = 0;
    for (const auto& jf : j.at("files")) {
        FileDiff f;
        f.old_path = get_opt<std::string>(jf, "old_path");
        f.new_path = get_opt<std::string>(jf, "new_path");
        f.binary = jf.value("binary", false);
        for (const auto& jh : jf.at("hunks")) {
            Hunk h;
            h.index = jh.value("index", next_index);
            next_index = h.index + 1;
            h.old_start = jh.at("old_start").get<int>();
            h.old_len = jh.at("old_len").get<int>();
            h.new_start = jh.at("new_start").get<int>();
            h.new_len = jh.at("new_len").get<int>();
            h.heading = jh.value("heading", std::string{});
            for (const auto& jl : jh.at("lines")) {
                ChangedLine l;
                auto kind = jl.at("kind").get<std::string>();
                l.kind = kind == "added" ? LineKind::Added : kind == "deleted" ? LineKind::Deleted : LineKind::Context;
                l.old_no = get_opt<int>(jl, "old_no");
                l.new_no = get_opt<int>(jl, "new_no");
                l.text = jl.at("text").get<std::string>();
                l.no_newline = jl.value("no_newline", false);
                h.lines.push_back(std::move(l));
            }
            f.hunks.push_back(std::move(h));
        }
        diff.push_back(std::move(f));
    }
    return diff;
}

}  // namespace masszz

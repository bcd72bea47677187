#include "masszz/szz.hpp"

#include "masszz/diff.hpp"
#include "masszz/error.hpp"

#include <algorithm>
#include <unordered_map>

namespace masszz {
namespace {

struct FixContext {
    CommitMeta meta;
    std::string parent;
    Diff diff;
};

FixContext load_fix(const RepoHandle& repo, std::string_view fix) {
    auto cd = repo.show_commit(fix);
    if (cd.meta.is_root()) throw Error(ErrorKind::RootCommitFix, cd.meta.id + " has no parent");
    FixContext ctx;
    ctx.parent = cd.meta.parent_ids.front();
    ctx.diff = parse_unified_diff(cd.diff);
    ctx.meta = std::move(cd.meta);
    return ctx;
}

std::vector<DeletedLine> non_cosmetic_deleted(const Diff& diff) {
    std::vector<DeletedLine> out;
    for (const auto& f : diff) {
        if (!f.old_path) continue;
        Language lang = language_for_path(*f.old_path);
        for (const auto& h : f.hunks) {
            auto mask = old_side_cosmetic_mask(h, lang);
            for (std::size_t i = 0; i < h.lines.size(); ++i) {
                const auto& l = h.lines[i];
                if (l.kind == LineKind::Deleted && !mask[i]) out.push_back({*f.old_path, *l.old_no, l.text, h.index});
            }
        }
    }
    return out;
}

/// Blames each line at `revision`, batching per file.
std::vector<BlameRecord> blame_all(const RepoHandle& repo, const std::string& revision,
                                   const std::vector<DeletedLine>& lines) {
    std::map<std::string, std::vector<std::size_t>> by_file;
    for (std::size_t i = 0; i < lines.size(); ++i) by_file[lines[i].path].push_back(i);
    std::vector<BlameRecord> out(lines.size());
    for (const auto& [path, idx] : by_file) {
        std::vector<int> nos;
        for (auto i : idx) nos.push_back(lines[i].old_no);
        auto recs = repo.blame_lines(revision, path, nos);
        for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = std::move(recs[k]);
    }
    return out;
}

const FileDiff* file_in(const Diff& diff, const std::string& new_path) {
    for (const auto& f : diff) {
        if (f.new_path && *f.new_path == new_path) return &f;
    }
    return nullptr;
}

struct Located {
    const Hunk* hunk = nullptr;
    std::size_t pos = 0;
};

Located find_added(const FileDiff& fd, int new_no) {
    for (const auto& h : fd.hunks) {
        for (std::size_t i = 0; i < h.lines.size(); ++i) {
            const auto& l = h.lines[i];
            if (l.kind == LineKind::Added && l.new_no && *l.new_no == new_no) return {&h, i};
        }
    }
    return {};
}

/// When `commit` only reformatted the line (same code modulo whitespace and
/// comments as one of the lines it deleted in that hunk), the position of
/// that deleted line in the parent.
std::optional<LinePosition> cosmetic_origin(const RepoHandle& repo, const CommitMeta& c, const BlameRecord& rec) {
    if (c.is_root()) return std::nullopt;
    Diff d = parse_unified_diff(repo.commit_file_diff(c.id, rec.file_path, repo.default_context()));
    const FileDiff* fd = file_in(d, rec.file_path);
    if (!fd || !fd->old_path) return std::nullopt;
    auto loc = find_added(*fd, rec.line_no);
    if (!loc.hunk) return std::nullopt;
    Language lang = language_for_path(rec.file_path);
    std::string norm = normalize_code(rec.line_text, lang);
    for (const auto& l : loc.hunk->lines) {
        if (l.kind == LineKind::Deleted && normalize_code(l.text, lang) == norm) return LinePosition{*fd->old_path, *l.old_no};
    }
    return std::nullopt;
}

/// Merge, or a commit whose change to the file touches only cosmetic lines.
bool is_meta_change(const RepoHandle& repo, const CommitMeta& c, const std::string& path) {
    if (c.is_merge()) return true;
    if (c.is_root()) return false;
    Diff d = parse_unified_diff(repo.commit_file_diff(c.id, path, repo.default_context()));
    const FileDiff* fd = file_in(d, path);
    if (!fd) return true;
    Language lang = language_for_path(path);
    for (const auto& h : fd->hunks) {
        auto old_mask = old_side_cosmetic_mask(h, lang);
        auto new_mask = new_side_cosmetic_mask(h, lang);
        for (std::size_t i = 0; i < h.lines.size(); ++i) {
            const auto& l = h.lines[i];
            if (l.kind == LineKind::Deleted && !old_mask[i]) return false;
            if (l.kind == LineKind::Added && !new_mask[i]) return false;
        }
    }
    return true;
}

/// Walks past cosmetic rewrites (and, with `skip_meta`, meta-changes) of the
/// line blamed in `rec`, returning the blame record of the substantive writer.
BlameRecord walk_back(const RepoHandle& repo, BlameRecord rec, bool skip_meta, std::vector<std::string>& warnings) {
    for (int step = 0; step < kVszzMaxSteps; ++step) {
        CommitMeta c = repo.commit(rec.commit_id);
        if (c.is_root()) return rec;
        std::optional<LinePosition> prev = cosmetic_origin(repo, c, rec);
        if (!prev && skip_meta && is_meta_change(repo, c, rec.file_path)) {
            Diff d = parse_unified_diff(repo.commit_file_diff(c.id, rec.file_path, repo.default_context()));
            if (const FileDiff* fd = file_in(d, rec.file_path)) {
                prev = map_line_through(*fd, rec.line_no, 0.0);
            } else {
                prev = LinePosition{rec.file_path, rec.line_no};
            }
        }
        if (!prev) return rec;
        const std::string& parent = c.parent_ids.front();
        auto content = repo.file_at(parent, prev->file);
        if (!content || prev->line_no < 1 || prev->line_no > static_cast<int>(split_lines(*content).size())) return rec;
        rec = repo.blame_line(parent, prev->file, prev->line_no);
    }
    warnings.push_back("walk-back cap reached at " + rec.commit_id);
    return rec;
}

CandidateSet make_set(std::string algorithm, const FixContext& ctx) {
    CandidateSet s;
    s.algorithm = std::move(algorithm);
    s.fix_commit = ctx.meta.id;
    return s;
}

void record(CandidateSet& s, const DeletedLine& line, const std::string& commit) {
    s.per_line[{line.path, line.old_no}] = commit;
    s.candidates.insert(commit);
}

CandidateSet filtered(const RepoHandle& repo, std::string_view fix, bool skip_meta, std::string name) {
    FixContext ctx = load_fix(repo, fix);
    CandidateSet s = make_set(std::move(name), ctx);
    auto lines = non_cosmetic_deleted(ctx.diff);
    auto recs = blame_all(repo, ctx.parent, lines);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto rec = walk_back(repo, recs[i], skip_meta, s.warnings);
        record(s, lines[i], rec.commit_id);
    }
    return s;
}

struct Tally {
    std::string id;
    int lines = 0;
    std::int64_t time = 0;
};

std::vector<Tally> tally(const RepoHandle& repo, const CandidateSet& s) {
    std::unordered_map<std::string, int> counts;
    for (const auto& [_, c] : s.per_line) ++counts[c];
    std::vector<Tally> out;
    for (const auto& id : s.candidates) out.push_back({id, counts[id], repo.commit(id).author_time});
    return out;
}

CandidateSet keep_one(CandidateSet s, std::string name, const std::string& chosen) {
    s.algorithm = std::move(name);
    s.candidates = {chosen};
    return s;
}

}  // namespace

nlohmann::json to_json(const CandidateSet& s) {
    nlohmann::json per_line = nlohmann::json::object();
    for (const auto& [key, commit] : s.per_line) per_line[key.first + ":" + std::to_string(key.second)] = commit;
    return {{"algorithm", s.algorithm},
            {"fix", s.fix_commit},
            {"candidates", std::vector<std::string>(s.candidates.begin(), s.candidates.end())},
            {"per_line", std::move(per_line)},
            {"warnings", s.warnings}};
}

CandidateSet run_bszz(const RepoHandle& repo, std::string_view fix) {
    FixContext ctx = load_fix(repo, fix);
    CandidateSet s = make_set("bszz", ctx);
    auto lines = deleted_or_modified_lines(ctx.diff);
    auto recs = blame_all(repo, ctx.parent, lines);
    for (std::size_t i = 0; i < lines.size(); ++i) record(s, lines[i], recs[i].commit_id);
    return s;
}

CandidateSet run_agszz(const RepoHandle& repo, std::string_view fix) { return filtered(repo, fix, false, "agszz"); }

CandidateSet run_maszz(const RepoHandle& repo, std::string_view fix) { return filtered(repo, fix, true, "maszz"); }

CandidateSet run_lszz(const RepoHandle& repo, std::string_view fix) {
    CandidateSet s = run_maszz(repo, fix);
    if (s.candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "lszz: no candidates for " + s.fix_commit);
    auto t = tally(repo, s);
    auto best = std::min_element(t.begin(), t.end(), [](const Tally& a, const Tally& b) {
        if (a.lines != b.lines) return a.lines > b.lines;
        if (a.time != b.time) return a.time < b.time;
        return a.id < b.id;
    });
    return keep_one(std::move(s), "lszz", best->id);
}

CandidateSet run_rszz(const RepoHandle& repo, std::string_view fix) {
    CandidateSet s = run_maszz(repo, fix);
    if (s.candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "rszz: no candidates for " + s.fix_commit);
    auto t = tally(repo, s);
    auto best = std::min_element(t.begin(), t.end(), [](const Tally& a, const Tally& b) {
        if (a.time != b.time) return a.time > b.time;
        if (a.lines != b.lines) return a.lines > b.lines;
        return a.id < b.id;
    });
    return keep_one(std::move(s), "rszz", best->id);
}

CandidateSet run_vszz(const RepoHandle& repo, std::string_view fix, double threshold) {
    FixContext ctx = load_fix(repo, fix);
    CandidateSet s = make_set("vszz", ctx);
    auto lines = deleted_or_modified_lines(ctx.diff);
    auto recs = blame_all(repo, ctx.parent, lines);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        BlameRecord rec = recs[i];
        int step = 0;
        for (; step < kVszzMaxSteps; ++step) {
            CommitMeta c = repo.commit(rec.commit_id);
            if (c.is_root()) break;
            auto prev = map_line_backward(repo, c.id, rec.file_path, rec.line_no, threshold);
            if (!prev) break;
            const std::string& parent = c.parent_ids.front();
            auto content = repo.file_at(parent, prev->file);
            if (!content || prev->line_no < 1 || prev->line_no > static_cast<int>(split_lines(*content).size())) break;
            rec = repo.blame_line(parent, prev->file, prev->line_no);
        }
        if (step == kVszzMaxSteps) {
            s.warnings.push_back("step cap " + std::to_string(kVszzMaxSteps) + " reached for " + lines[i].path + ":" +
                                 std::to_string(lines[i].old_no));
        }
        record(s, lines[i], rec.commit_id);
    }
    return s;
}

const std::vector<std::string>& baseline_names() {
    static const std::vector<std::string> names = {"bszz", "agszz", "maszz", "lszz", "rszz", "vszz"};
    return names;
}

CandidateSet run_baseline(std::string_view algorithm, const RepoHandle& repo, std::string_view fix,
                          double vszz_threshold) {
    if (algorithm == "bszz") return run_bszz(repo, fix);
    if (algorithm == "agszz") return run_agszz(repo, fix);
    if (algorithm == "maszz") return run_maszz(repo, fix);
    if (algorithm == "lszz") return run_lszz(repo, fix);
    if (algorithm == "rszz") return run_rszz(repo, fix);
    if (algorithm == "vszz") return run_vszz(repo, fix, vszz_threshold);
    throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + std::string(algorithm) + "'");
}

}  // namespace masszz

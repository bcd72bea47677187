#include "masszz/cli.hpp"

#include "CLI11.hpp"
#include "masszz/error.hpp"
#include "masszz/eval.hpp"
#include "masszz/pipeline.hpp"
#include "masszz/szz.hpp"

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace masszz {

using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kDegraded = 2;

struct Shared {
    RunConfig cfg;
    std::string backend = "live";
    std::string format = "json";
};

LiveConfig live_config(const RunConfig& cfg) {
    LiveConfig lc;
    lc.base_url = cfg.base_url;
    lc.model = cfg.model;
    lc.api_key = api_key_from_env();
    lc.max_in_flight = cfg.max_in_flight;
    lc.requests_per_minute = cfg.requests_per_minute;
    return lc;
}

fs::path transcript_for(const RunConfig& cfg, const std::string& cve_id) {
    if (fs::is_directory(cfg.transcript)) return cfg.transcript / (cve_id + ".json");
    return cfg.transcript;
}

PromptLibrary prompts_for(const RunConfig& cfg) {
    return PromptLibrary(cfg.prompt_dir.empty() ? PromptLibrary::default_dir() : cfg.prompt_dir);
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
    f << content;
}

std::string short_id(const std::string& id) { return id.substr(0, 7); }

std::string trace_table(const VicResult& v) {
    std::ostringstream os;
    os << v.case_id << "  vics:";
    for (const auto& id : v.vics) os << " " << short_id(id);
    if (v.vics.empty()) os << " (none)";
    if (v.degraded) os << "  [degraded]";
    os << "\n";
    for (const auto& t : v.traces) {
        os << "anchor " << t.anchor.file << ":" << t.anchor.line_no << "  -> "
           << (t.vic ? short_id(*t.vic) : std::string("-")) << " (" << to_string(t.terminated_by) << ")\n";
        for (const auto& s : t.steps) {
            os << "  " << short_id(s.commit) << "  " << to_string(s.verdict) << "  " << s.anchor_pos.file << ":"
               << s.anchor_pos.line_no << "\n";
        }
    }
    return os.str();
}

std::string read_description(const std::string& text, const std::string& file) {
    if (file.empty()) return text;
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + file);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TraceArgs {
    std::string cve_id, repo, fix, description, description_file, audit_out;
};

int cmd_trace(Shared& sh, const TraceArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig& cfg = sh.cfg;
    cfg.validate();
    if (cfg.backend == BackendKind::Record && cfg.transcript.empty()) {
        throw Error(ErrorKind::InvalidArgument, "record needs --transcript for the output file");
    }
    RepoHandle repo = open_repo(a.repo, cfg.context_lines);
    PromptLibrary prompts = prompts_for(cfg);

    std::unique_ptr<Backend> live;
    std::unique_ptr<Backend> backend;
    RecordingBackend* recorder = nullptr;
    switch (cfg.backend) {
    case BackendKind::Replay: backend = std::make_unique<ReplayBackend>(load_transcript(transcript_for(cfg, a.cve_id))); break;
    case BackendKind::Live: backend = std::make_unique<LiveBackend>(live_config(cfg)); break;
    case BackendKind::Record: {
        live = std::make_unique<LiveBackend>(live_config(cfg));
        auto rec = std::make_unique<RecordingBackend>(*live);
        recorder = rec.get();
        backend = std::move(rec);
        break;
    }
    }

    AgentEnv env{*backend, prompts, cfg.max_tool_rounds};
    std::string description = read_description(a.description, a.description_file);
    CaseRecord record;
    try {
        record = run_mas(env, repo, a.cve_id, description, a.fix, cfg);
    } catch (...) {
        if (recorder) save_transcript(recorder->transcript(), cfg.transcript);
        throw;
    }
    if (recorder) save_transcript(recorder->transcript(), cfg.transcript);

    fs::path audit = a.audit_out.empty() ? cfg.cache_dir / "audit" / (a.cve_id + ".json") : fs::path(a.audit_out);
    write_file(audit, to_json(record).dump(2) + "\n");
    if (sh.format == "table") out << trace_table(record.result);
    else out << to_json(record.result).dump(2) << "\n";
    if (record.degraded()) {
        err << "warning: degraded result";
        for (const auto& n : record.anchors.notes) err << "; " << n;
        err << "\n";
        return kDegraded;
    }
    return kOk;
}

int cmd_baseline(Shared& sh, const std::string& algorithm, const std::string& repo_path, const std::string& fix,
                 std::ostream& out, std::ostream& err) {
    sh.cfg.validate();
    RepoHandle repo = open_repo(repo_path, sh.cfg.context_lines);
    CandidateSet s = run_baseline(algorithm, repo, fix, sh.cfg.vszz_threshold);
    if (sh.format == "table") {
        out << s.algorithm << "  " << short_id(s.fix_commit) << "  candidates:";
        for (const auto& c : s.candidates) out << " " << short_id(c);
        out << "\n";
        for (const auto& [key, commit] : s.per_line) out << "  " << key.first << ":" << key.second << "  " << short_id(commit) << "\n";
    } else {
        out << to_json(s).dump(2) << "\n";
    }
    for (const auto& w : s.warnings) err << "warning: " << w << "\n";
    return s.warnings.empty() ? kOk : kDegraded;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_eval(Shared& sh, const std::string& dataset_path, const std::string& algorithms, const std::string& out_dir,
             std::ostream& out, std::ostream& err) {
    RunConfig& cfg = sh.cfg;
    auto algos = split_list(algorithms);
    if (algos.empty()) throw Error(ErrorKind::InvalidArgument, "no algorithms given");
    bool mas = std::find(algos.begin(), algos.end(), "mas") != algos.end();
    if (mas) cfg.validate();
    else {
        RunConfig check = cfg;
        check.backend = BackendKind::Live;
        check.validate();
    }
    if (mas && cfg.backend == BackendKind::Record) throw Error(ErrorKind::InvalidArgument, "eval does not record; use record");
    Dataset ds = load_dataset(dataset_path);

    std::optional<PromptLibrary> prompts;
    EvalOptions opt;
    opt.config = cfg;
    if (mas) {
        prompts.emplace(prompts_for(cfg));
        opt.prompts = &*prompts;
        if (cfg.backend == BackendKind::Replay) {
            opt.backend_factory = [cfg](const VulnCase& c) -> std::unique_ptr<Backend> {
                return std::make_unique<ReplayBackend>(load_transcript(transcript_for(cfg, c.cve_id)));
            };
        } else {
            // one client per case; the rate limiter is per client
            opt.backend_factory = [cfg](const VulnCase&) -> std::unique_ptr<Backend> {
                return std::make_unique<LiveBackend>(live_config(cfg));
            };
        }
    }
    EvalReport report = run_evaluation(algos, ds, opt);

    std::string report_json = to_json(report).dump(2) + "\n";
    if (!out_dir.empty()) {
        write_file(fs::path(out_dir) / "report.json", report_json);
        write_file(fs::path(out_dir) / "report.md", render_markdown(report));
        write_file(fs::path(out_dir) / "report.csv", render_csv(report));
    }
    if (sh.format == "table") out << render_markdown(report);
    else out << report_json;

    for (const auto& s : report.skipped) err << "skipped " << s.cve_id << ": " << s.reason << "\n";
    int succeeded = 0;
    for (const auto& [algo, list] : report.per_case) {
        for (const auto& o : list) {
            if (o.error.empty()) ++succeeded;
            else err << algo << " " << o.cve_id << ": " << o.error << "\n";
        }
    }
    return succeeded > 0 ? kOk : kError;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Identify vulnerability-inducing commits from fixing commits", "mas-szz"};
    app.set_config("--config", "", "TOML/INI file with defaults for any flag");
    app.require_subcommand(1);
    app.fallthrough();

    Shared sh;
    RunConfig& c = sh.cfg;
    std::string transcript, prompt_dir, cache_dir = c.cache_dir.string();
    app.add_option("--backend", sh.backend, "live, replay or record")->check(CLI::IsMember({"live", "replay", "record"}));
    app.add_option("--model", c.model, "model name for the live backend");
    app.add_option("--base-url", c.base_url, "OpenAI-compatible endpoint");
    app.add_option("--transcript", transcript, "replay input or record output (file, or directory of <cve>.json)");
    app.add_option("--prompt-dir", prompt_dir, "directory of prompt templates");
    app.add_option("--context-lines", c.context_lines, "diff context lines")->check(CLI::NonNegativeNumber);
    app.add_option("--budget", c.budget, "audit/judge rounds")->check(CLI::PositiveNumber);
    app.add_option("--max-tool-rounds", c.max_tool_rounds, "tool calls per agent invocation")->check(CLI::NonNegativeNumber);
    app.add_option("--max-depth", c.max_depth, "backtracking depth cap")->check(CLI::PositiveNumber);
    app.add_option("--vszz-threshold", c.vszz_threshold, "V-SZZ line similarity threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--parallelism", c.parallelism, "concurrent cases in eval")->check(CLI::PositiveNumber);
    app.add_option("--cache-dir", cache_dir, "clone cache and audit records");
    app.add_option("--max-in-flight", c.max_in_flight, "concurrent live requests")->check(CLI::PositiveNumber);
    app.add_option("--requests-per-minute", c.requests_per_minute, "live request rate limit")->check(CLI::PositiveNumber);
    app.add_option("--format", sh.format, "json or table")->check(CLI::IsMember({"json", "table"}));

    TraceArgs ta;
    auto add_trace_opts = [&](CLI::App* sub) {
        sub->add_option("--cve", ta.cve_id, "CVE identifier")->required();
        sub->add_option("--repo", ta.repo, "local clone")->required();
        sub->add_option("--fix", ta.fix, "fixing commit")->required();
        sub->add_option("--description", ta.description, "CVE description text");
        sub->add_option("--description-file", ta.description_file, "file holding the CVE description");
        sub->add_option("--audit-out", ta.audit_out, "where to write the per-case audit record");
    };
    auto* trace = app.add_subcommand("trace", "run the three-stage pipeline on one fix");
    add_trace_opts(trace);
    auto* record = app.add_subcommand("record", "like trace against the live backend, saving a replay transcript");
    add_trace_opts(record);

    std::string algorithm, b_repo, b_fix;
    auto* baseline = app.add_subcommand("baseline", "run a classic SZZ variant on one fix");
    baseline->add_option("--algorithm", algorithm, "bszz, agszz, maszz, lszz, rszz or vszz")
        ->required()
        ->check(CLI::IsMember(baseline_names()));
    baseline->add_option("--repo", b_repo, "local clone")->required();
    baseline->add_option("--fix", b_fix, "fixing commit")->required();

    std::string dataset, algorithms = "bszz", out_dir;
    auto* eval = app.add_subcommand("eval", "score algorithms over a dataset");
    eval->add_option("--dataset", dataset, "JSON-lines dataset")->required();
    eval->add_option("--algorithms", algorithms, "comma-separated: bszz,agszz,maszz,lszz,rszz,vszz,mas");
    eval->add_option("--out", out_dir, "directory for report.json, report.md and report.csv");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? kOk : kError;
    }

    try {
        c.backend = backend_from_string(sh.backend);
        c.transcript = transcript;
        c.prompt_dir = prompt_dir;
        c.cache_dir = cache_dir;
        if (*record) {
            c.backend = BackendKind::Record;
            return cmd_trace(sh, ta, out, err);
        }
        if (*trace) return cmd_trace(sh, ta, out, err);
        if (*baseline) return cmd_baseline(sh, algorithm, b_repo, b_fix, out, err);
        if (*eval) return cmd_eval(sh, dataset, algorithms, out_dir, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}

}  // namespace masszz

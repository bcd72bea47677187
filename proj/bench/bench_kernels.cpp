// Serial vs parallel: LocateSymbol's blob scan and the case x algorithm
// evaluation fan-out.

#include "masszz/eval.hpp"
#include "masszz/tools.hpp"
#include "oracles.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>

using namespace masszz;
using namespace masszz::testing;

namespace {

std::vector<Blob> synthetic_tree(int files, int lines_per_file) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> word(0, 999);
    std::vector<Blob> blobs;
    for (int f = 0; f < files; ++f) {
        Blob b{"src/mod" + std::to_string(f) + ".java", {}};
        for (int l = 0; l < lines_per_file; ++l) {
            int w = word(rng);
            b.content += "    int field" + std::to_string(w) + " = compute(" + std::to_string(l) + ");";
            if (w == 0) b.content += " // needleSymbol";
            b.content += '\n';
        }
        blobs.push_back(std::move(b));
    }
    std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) { return a.path < b.path; });
    return blobs;
}

const std::vector<Blob>& tree() {
    static const auto t = synthetic_tree(4000, 250);
    return t;
}

void BM_SearchBlobsSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(search_blobs_serial(tree(), "needleSymbol"));
    state.SetBytesProcessed(state.iterations() * 4000 * 250 * 40);
}

void BM_SearchBlobsParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(search_blobs(tree(), "needleSymbol"));
    state.SetBytesProcessed(state.iterations() * 4000 * 250 * 40);
}

struct EvalFixture {
    TempDir dir;
    Dataset dataset;

    explicit EvalFixture(int cases) {
        std::mt19937_64 rng(11);
        dataset.name = "bench";
        dataset.dir = dir.path();
        for (int i = 0; i < cases; ++i) {
            LinearRepo lr = random_linear_repo(rng);
            auto path = dir / ("r" + std::to_string(i) + ".git");
            lr.ids = lr.builder.build(path);
            VulnCase c;
            c.cve_id = "BENCH-" + std::to_string(i);
            c.repo = path.string();
            c.fix_commit = lr.ids[static_cast<std::size_t>(lr.fix)];
            for (const auto& [key, idx] : lr.expected) c.true_vics.push_back(lr.ids[static_cast<std::size_t>(idx)]);
            dataset.cases.push_back(std::move(c));
        }
    }
};

EvalFixture& eval_fixture() {
    static EvalFixture f(32);
    return f;
}

const std::vector<std::string> kAlgorithms = {"bszz", "agszz", "lszz", "rszz", "vszz"};

void BM_EvaluationSerial(benchmark::State& state) {
    EvalOptions opt;
    opt.config.cache_dir = eval_fixture().dir / "cache";
    for (auto _ : state) benchmark::DoNotOptimize(run_evaluation_serial(kAlgorithms, eval_fixture().dataset, opt));
}

void BM_EvaluationParallel(benchmark::State& state) {
    EvalOptions opt;
    opt.config.cache_dir = eval_fixture().dir / "cache";
    opt.config.parallelism = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_evaluation(kAlgorithms, eval_fixture().dataset, opt));
}

}  // namespace

BENCHMARK(BM_SearchBlobsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SearchBlobsParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluationSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluationParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

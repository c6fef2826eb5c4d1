#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bpinn/harness.hpp"
#include "test_util.hpp"

using namespace bpinn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// metrics CSV with the per-row wall_ms column blanked, for determinism diffs
std::string csv_without_wall(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.rfind(',');
        out << line.substr(0, cut) << '\n';
    }
    return out.str();
}

EvolutionConfig tiny_config(std::uint64_t seed, int iterations) {
    EvolutionConfig cfg;
    cfg.n_pop = 5;
    cfg.n_task = 2;
    cfg.max_iterations = iterations;
    cfg.seed = seed;
    return cfg;
}

Genome spread_genome(int n_input, int per_block, double spread) {
    Genome g = make_genome(n_input, per_block, false);
    for (double& s : g.spreads) s = spread;
    g.lambda_raw = 1.0;
    return g;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("genome artifacts round trip through disk") {
    testutil::TempDir dir("genome_io");
    Genome g = spread_genome(2, 30, 0.7);
    g.means[3] = -0.123456789012345;
    save_genome(dir.path / "g.json", g, 4);
    const GenomeFile f = load_genome(dir.path / "g.json");
    CHECK(f.problem_id == 4);
    CHECK(f.genome.means == g.means);
    CHECK(f.genome.spreads == g.spreads);
    CHECK_THROWS(load_genome(dir.path / "missing.json"));
}

TEST_CASE("eval is deterministic, thread-count independent, and metric-complete") {
    const ProblemInfo& info = problem_info("poisson-1d");
    const Genome g = spread_genome(info.n_input, 20, 1.0);  // small layer, same code path

    const EvalResult a = run_eval(g, info, Split::Test, 7, 1);
    const EvalResult b = run_eval(g, info, Split::Test, 7, 1);
    const EvalResult c = run_eval(g, info, Split::Test, 7, 3);
    const EvalResult d = run_eval(g, info, Split::Test, 8, 1);

    REQUIRE(a.rows.size() == 60);
    for (size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mse == b.rows[i].mse);  // bitwise: stateless keyed sampling
        CHECK(a.rows[i].lse == b.rows[i].lse);
        CHECK(a.rows[i].mse == c.rows[i].mse);
        CHECK(a.rows[i].params.size() == info.param_names.size());
    }
    CHECK(a.mean_mse == c.mean_mse);
    CHECK(a.mean_mse != d.mean_mse);  // a different seed samples a different layer

    double mean = 0.0;
    for (const auto& r : a.rows) mean += r.mse;
    CHECK(a.mean_mse == doctest::Approx(mean / 60.0).epsilon(1e-12));
    CHECK(a.std_mse >= 0.0);
}

TEST_CASE("the all-zero genome still evaluates to finite losses") {
    const ProblemInfo& info = problem_info("convection-diffusion");
    const Genome g = make_genome(info.n_input, 20, false);
    const EvalResult r = run_eval(g, info, Split::Train, 1, 1);
    CHECK(std::isfinite(r.mean_mse));
    CHECK(std::isfinite(r.mean_lse));
}

TEST_CASE("metrics files carry the parameter columns") {
    testutil::TempDir dir("metrics");
    const ProblemInfo& info = problem_info("poisson-1d");
    const Genome g = spread_genome(info.n_input, 20, 1.0);
    const EvalResult r = run_eval(g, info, Split::Test, 3, 1);
    write_metrics_csv(dir.path / "m.csv", info, r);
    write_eval_json(dir.path / "m.json", info, r);

    const std::string csv = slurp(dir.path / "m.csv");
    CHECK(csv.rfind("task_id,alpha1,alpha2,alpha3,alpha4,omega1,omega2,lse,mse,wall_ms\n", 0) == 0);
    int lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 61);
    CHECK(slurp(dir.path / "m.json").find("\"mean_mse\"") != std::string::npos);
}

TEST_CASE("train writes a complete, reproducible artifact set") {
    testutil::TempDir dir("train");
    TrainOptions opts;
    opts.problem = "poisson-1d";
    opts.config = tiny_config(13, 3);
    opts.out_dir = dir.path / "a";
    opts.checkpoint_interval = 2;
    opts.final_eval = false;
    const TrainResult res = run_train(opts);

    CHECK(fs::exists(opts.out_dir / "manifest.json"));
    CHECK(fs::exists(opts.out_dir / "genome.json"));
    CHECK(fs::exists(opts.out_dir / "history.csv"));
    CHECK(fs::exists(opts.out_dir / "checkpoint.json"));
    CHECK(res.history.size() == 3);

    const std::string manifest = slurp(opts.out_dir / "manifest.json");
    for (const char* key : {"\"problem\"", "\"config\"", "\"seed\"", "\"schema_version\"",
                            "\"started_at\"", "\"finished_at\"", "\"genome\"", "\"generations\""})
        CHECK(manifest.find(key) != std::string::npos);

    // byte-identical genome from a byte-identical rerun
    TrainOptions again = opts;
    again.out_dir = dir.path / "b";
    run_train(again);
    CHECK(slurp(opts.out_dir / "genome.json") == slurp(again.out_dir / "genome.json"));
}

TEST_CASE("resume replays one generation and lands on the uninterrupted run") {
    testutil::TempDir dir("resume");

    TrainOptions full;
    full.problem = "poisson-1d";
    full.config = tiny_config(29, 5);
    full.out_dir = dir.path / "full";
    full.checkpoint_interval = 2;
    full.final_eval = false;
    const TrainResult whole = run_train(full);

    // same run, interrupted after generation 2 (last checkpoint is at gen 1)
    TrainOptions half = full;
    half.out_dir = dir.path / "chunked";
    half.progress = [](const GenerationRecord& rec, const EsState&, const EsState&) {
        return rec.generation < 2;
    };
    const TrainResult head = run_train(half);
    REQUIRE(head.history.size() == 3);

    TrainOptions rest = half;
    rest.progress = nullptr;
    rest.resume = true;
    const TrainResult done = run_train(rest);

    REQUIRE(done.history.size() == 5);
    for (size_t i = 0; i < done.history.size(); ++i) {
        CHECK(done.history[i].generation == whole.history[i].generation);
        CHECK(done.history[i].best_fitness == whole.history[i].best_fitness);
        CHECK(done.history[i].median_fitness == whole.history[i].median_fitness);
    }
    CHECK(slurp(full.out_dir / "genome.json") == slurp(rest.out_dir / "genome.json"));
}

TEST_CASE("resume refuses a tampered checkpoint") {
    testutil::TempDir dir("tamper");
    TrainOptions opts;
    opts.problem = "poisson-1d";
    opts.config = tiny_config(31, 3);
    opts.out_dir = dir.path / "run";
    opts.checkpoint_interval = 2;
    opts.final_eval = false;
    run_train(opts);

    // nudge the recorded best fitness of the replay generation; history rows
    // are in generation order, so the last occurrence is the one replayed
    std::string ck = slurp(opts.out_dir / "checkpoint.json");
    const auto pos = ck.rfind("\"best_fitness\":");
    REQUIRE(pos != std::string::npos);
    ck.replace(pos, 15, "\"best_fitness\": 1e9, \"was\":");
    {
        std::ofstream out(opts.out_dir / "checkpoint.json");
        out << ck;
    }

    TrainOptions rest = opts;
    rest.resume = true;
    CHECK_THROWS_WITH_AS(run_train(rest), doctest::Contains("resume validation failed"),
                         std::runtime_error);
}

TEST_CASE("report aggregates runs and flags targets") {
    testutil::TempDir dir("report");

    CHECK(report_table({}).find("problem") != std::string::npos);  // empty list, no throw

    TrainOptions opts;
    opts.problem = "poisson-1d";
    opts.config = tiny_config(41, 2);
    opts.out_dir = dir.path / "r1";
    opts.final_eval = true;
    run_train(opts);
    opts.config.seed = 42;
    opts.out_dir = dir.path / "r2";
    run_train(opts);

    const std::string table = report_table(
        {dir.path / "r1" / "manifest.json", dir.path / "r2" / "manifest.json"}, dir.path / "out.csv");
    CHECK(table.find("poisson-1d") != std::string::npos);
    CHECK(table.find("pooled") != std::string::npos);
    CHECK(fs::exists(dir.path / "out.csv"));
    const std::string csv = slurp(dir.path / "out.csv");
    CHECK(csv.find("problem,") == 0);
}

TEST_CASE("eval csv is identical across reruns up to wall time") {
    testutil::TempDir dir("csvdiff");
    const ProblemInfo& info = problem_info("convection-diffusion");
    const Genome g = spread_genome(info.n_input, 20, 0.5);
    for (const char* name : {"a.csv", "b.csv"}) {
        const EvalResult r = run_eval(g, info, Split::Train, 17, 1);
        write_metrics_csv(dir.path / name, info, r);
    }
    CHECK(csv_without_wall(dir.path / "a.csv") == csv_without_wall(dir.path / "b.csv"));
}

}  // TEST_SUITE

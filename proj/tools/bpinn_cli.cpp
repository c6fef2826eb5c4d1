#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "bpinn/harness.hpp"

namespace {

int unknown_problem(const std::string& name) {
    std::fprintf(stderr, "unknown problem '%s'; valid names:\n", name.c_str());
    for (const bpinn::ProblemInfo& p : bpinn::problem_registry())
        std::fprintf(stderr, "  %2d  %s\n", p.id, p.name.c_str());
    return 2;
}

int default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Baldwinian evolution of physics-informed networks"};
    app.require_subcommand(1);

    struct {
        std::string problem, out = "run";
        std::uint64_t seed = 0;
        int pop = 0, iters = 0, tasks = 0, threads = 0;
        double std = 0.0;
        bool resume = false, no_eval = false;
    } t;
    CLI::App* train = app.add_subcommand("train", "evolve the weight distribution for a problem");
    train->add_option("--problem", t.problem, "problem name or id")->required();
    train->add_option("--seed", t.seed, "run seed (default 0)");
    train->add_option("--pop", t.pop, "population size (default: problem table)");
    train->add_option("--iters", t.iters, "generations (default: problem table)");
    train->add_option("--std", t.std, "initial CMA-ES step size (default: problem table)");
    train->add_option("--tasks-per-gen", t.tasks, "train tasks per generation (default: problem table)");
    train->add_option("--threads", t.threads, "fitness worker threads (default: all cores)");
    train->add_option("--out", t.out, "output directory (default: ./run)");
    train->add_flag("--resume", t.resume, "continue from <out>/checkpoint.json");
    train->add_flag("--no-final-eval", t.no_eval, "skip the train/test metrics pass");

    struct {
        std::string genome, problem, grid = "test", out = "metrics.csv";
        std::uint64_t seed = 0;
        int threads = 0;
    } e;
    CLI::App* eval = app.add_subcommand("eval", "score a saved genome on a task split");
    eval->add_option("--genome", e.genome, "genome.json path")->required();
    eval->add_option("--problem", e.problem, "problem name or id")->required();
    eval->add_option("--grid", e.grid, "task split: train or test (default test)")
        ->check(CLI::IsMember({"train", "test"}));
    eval->add_option("--seed", e.seed, "hidden-layer sampling seed (default 0)");
    eval->add_option("--threads", e.threads, "worker threads (default: all cores)");
    eval->add_option("--out", e.out, "metrics CSV path (JSON written alongside)");

    std::vector<std::string> manifest_args;
    std::string report_csv;
    CLI::App* report = app.add_subcommand("report", "summarize finished runs against the targets");
    report->add_option("manifests", manifest_args, "manifest.json paths");
    report->add_option("--out", report_csv, "also write the table as CSV");

    CLI::App* list = app.add_subcommand("list-problems", "show the registered problems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const bpinn::ProblemInfo* info = bpinn::find_problem(t.problem);
            if (!info) return unknown_problem(t.problem);
            bpinn::TrainOptions opts;
            opts.problem = info->name;
            opts.config.seed = t.seed;
            opts.config.n_pop = t.pop > 0 ? t.pop : info->n_pop;
            opts.config.n_task = t.tasks > 0 ? t.tasks : info->n_task;
            opts.config.max_iterations = t.iters > 0 ? t.iters : info->iterations;
            opts.config.initial_std = t.std > 0.0 ? t.std : info->initial_std;
            opts.config.n_threads = t.threads > 0 ? t.threads : default_threads();
            opts.out_dir = t.out;
            opts.resume = t.resume;
            opts.final_eval = !t.no_eval;
            const bpinn::TrainResult r = bpinn::run_train(opts);
            std::printf("trained %s for %zu generations -> %s\n", info->name.c_str(),
                        r.history.size(), r.manifest_path.string().c_str());
            if (r.test_metrics)
                std::printf("test MSE %.3e +- %.3e over %zu tasks (target %.1e)\n",
                            r.test_metrics->mean_mse, r.test_metrics->std_mse,
                            r.test_metrics->rows.size(), info->target_mse);
        } else if (eval->parsed()) {
            const bpinn::ProblemInfo* info = bpinn::find_problem(e.problem);
            if (!info) return unknown_problem(e.problem);
            const bpinn::GenomeFile gf = bpinn::load_genome(e.genome);
            const bpinn::Split split =
                e.grid == "train" ? bpinn::Split::Train : bpinn::Split::Test;
            const int threads = e.threads > 0 ? e.threads : default_threads();
            const bpinn::EvalResult res = bpinn::run_eval(gf.genome, *info, split, e.seed, threads);
            bpinn::write_metrics_csv(e.out, *info, res);
            std::filesystem::path jpath(e.out);
            jpath.replace_extension(".json");
            bpinn::write_eval_json(jpath, *info, res);
            std::printf("%s %s: mean MSE %.3e +- %.3e, mean LSE %.3e over %zu tasks\n",
                        info->name.c_str(), e.grid.c_str(), res.mean_mse, res.std_mse,
                        res.mean_lse, res.rows.size());
            if (res.restart)
                std::printf("restart: stage-one MSE %.3e, extended-domain MSE %.3e\n",
                            res.restart->mean_mse_stage1, res.restart->mean_mse_full);
        } else if (report->parsed()) {
            std::vector<std::filesystem::path> paths(manifest_args.begin(), manifest_args.end());
            std::fputs(bpinn::report_table(paths, report_csv).c_str(), stdout);
        } else if (list->parsed()) {
            for (const bpinn::ProblemInfo& p : bpinn::problem_registry())
                std::printf("%2d  %-24s %d train / %d test tasks, dim %d  %s\n", p.id,
                            p.name.c_str(), p.n_train, p.n_test,
                            2 * bpinn::kNumBlocks * (p.n_input + 1) + 1 + (p.use_row_weight ? 1 : 0),
                            p.equation.c_str());
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}

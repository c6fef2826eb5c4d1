#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bpinn/evolution.hpp"
#include "bpinn/problems.hpp"

namespace bpinn {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Genome artifact IO (JSON, schema-versioned; see genome.hpp for the layout).
void save_genome(const std::filesystem::path& path, const Genome& genome, int problem_id);
GenomeFile load_genome(const std::filesystem::path& path);

struct TaskMetrics {
    int task_id = 0;
    std::vector<double> params;
    double lse = 0.0;
    double mse = 0.0;
    double wall_ms = 0.0;
};

// Problem 2 test-split extras: statistics of the time-marching restart, where
// the stage-one prediction at t = 2 seeds a continuation solve on t in [2,4].
struct RestartMetrics {
    std::vector<double> mse_stage1;  // per task, t in [0,2]
    std::vector<double> mse_full;    // per task, t in [0,4]
    double mean_mse_stage1 = 0.0;
    double mean_mse_full = 0.0;
};

struct EvalResult {
    std::string problem;
    Split split = Split::Test;
    std::uint64_t seed = 0;
    std::vector<TaskMetrics> rows;
    double mean_mse = 0.0;
    double std_mse = 0.0;  // sample std over tasks
    double mean_lse = 0.0;
    double mean_wall_ms = 0.0;
    std::optional<RestartMetrics> restart;
};

// Sample the hidden layer from (genome, seed) and run lifetime learning on
// every canonical task of the split; the split picks grid density and lag
// count. Never mutates the genome. For problem 2's test split the reported
// per-task mse covers the restart-extended domain t in [0,4] (that is the
// grid the benchmark table counts), and `restart` carries both stages.
EvalResult run_eval(const Genome& genome, const ProblemInfo& info, Split split,
                    std::uint64_t seed, int n_threads = 1);

// header: task_id,<param names...>,lse,mse,wall_ms
void write_metrics_csv(const std::filesystem::path& path, const ProblemInfo& info,
                       const EvalResult& result);
void write_eval_json(const std::filesystem::path& path, const ProblemInfo& info,
                     const EvalResult& result);

struct TrainOptions {
    std::string problem;
    EvolutionConfig config;
    std::filesystem::path out_dir;
    int checkpoint_interval = 25;  // generations between checkpoint rewrites
    bool resume = false;           // continue from out_dir/checkpoint.json
    bool final_eval = true;        // run train+test metrics into the manifest
    ProgressFn progress;           // optional extra observer
};

struct TrainResult {
    Genome genome;
    std::vector<GenerationRecord> history;
    std::filesystem::path manifest_path;
    std::optional<EvalResult> train_metrics;
    std::optional<EvalResult> test_metrics;
};

// Full training run: evolve with per-generation history, periodic
// checkpoints (previous + current ES state, so resume can replay one
// generation and verify it reproduces the recorded fitness), genome and
// manifest artifacts, and optionally final train/test metrics.
TrainResult run_train(const TrainOptions& opts);

// Table-style summary of finished runs: one row per manifest plus a pooled
// row per problem that appears several times (per-task rows pooled across
// runs). Returns the text table; also writes it as CSV when csv_out is set.
std::string report_table(const std::vector<std::filesystem::path>& manifests,
                         const std::filesystem::path& csv_out = {});

}  // namespace bpinn

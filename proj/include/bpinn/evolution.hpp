#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bpinn/cma.hpp"
#include "bpinn/genome.hpp"
#include "bpinn/lifetime.hpp"

namespace bpinn {

struct EvolutionConfig {
    int n_pop = 20;
    int n_task = 10;          // tasks sampled per generation
    int max_iterations = 100;
    double initial_std = 1.0;
    std::uint64_t seed = 0;
    double tau_lse = 1.0;
    double tau_mse = 1.0;
    int n_threads = 1;  // fitness evaluations per generation run in parallel
};

struct FitnessRecord {
    Genome genome;
    double fitness = 0.0;
    double lse_sum = 0.0;
    double mse_sum = 0.0;
    std::vector<int> task_ids;
};

// Fitness of one genome: sample one hidden layer from it, run lifetime
// learning on every task, and fold the losses into a scalar fitness
// f = -(tau_lse * sum(lse) + tau_mse * sum(mse)).  Any per-task failure or
// non-finite loss is clamped to 1e12 so the record stays rankable.
FitnessRecord fitness(const Genome& genome, const std::vector<const Task*>& tasks,
                      std::uint64_t hidden_seed, double tau_lse = 1.0, double tau_mse = 1.0);

struct GenerationRecord {
    int generation = 0;
    double best_fitness = 0.0;
    double median_fitness = 0.0;
    double wall_ms = 0.0;
};

struct EvolveResult {
    Genome best_genome;  // distribution center after the last generation
    EsState state;
    std::vector<GenerationRecord> history;
};

// Called after each es_tell with the pre- and post-update states, so a
// harness can checkpoint and later validate a resumed run by replaying one
// generation.  Return false to stop early (state is still consistent).
using ProgressFn =
    std::function<bool(const GenerationRecord&, const EsState& before, const EsState& after)>;

// Outer evolution loop for one registered problem.  Each generation draws n_task
// training tasks (shared across all offspring), scores the population, and
// updates the search distribution.  Fully determined by (problem, config);
// n_threads never changes the result.  Pass a saved state to resume.
EvolveResult evolve(const std::string& problem, const EvolutionConfig& config,
                    const ProgressFn& progress = nullptr,
                    const std::optional<EsState>& resume = std::nullopt);

}  // namespace bpinn

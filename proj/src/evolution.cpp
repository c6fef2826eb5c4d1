#include "bpinn/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "bpinn/problems.hpp"
#include "bpinn/rng.hpp"

namespace bpinn {
namespace {

// Ranking only needs a consistent "very bad" value, so failed or overflowed
// lifetime learnings are clamped rather than propagated.
constexpr double kLossClamp = 1e12;
constexpr double kPenaltyFitness = -1e12;

double clamp_loss(double v) {
    if (!std::isfinite(v)) return kLossClamp;
    return std::min(std::max(v, 0.0), kLossClamp);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// n_batch distinct task indices per generation; depends only on (seed, gen)
// so every offspring scores against the same batch and resumed runs replay
// the exact schedule.
std::vector<int> sample_batch(int n_total, int n_batch, std::uint64_t seed, int generation) {
    std::vector<int> idx(n_total);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(stream_key(seed, 0xBA7C0u, static_cast<std::uint64_t>(generation)));
    for (int k = 0; k < n_batch; ++k) {
        const int j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_total - k)));
        std::swap(idx[k], idx[j]);
    }
    idx.resize(n_batch);
    return idx;
}

}  // namespace

FitnessRecord fitness(const Genome& genome, const std::vector<const Task*>& tasks,
                      std::uint64_t hidden_seed, double tau_lse, double tau_mse) {
    if (tasks.empty()) throw std::runtime_error("fitness: task list is empty");
    FitnessRecord rec;
    rec.genome = genome;
    const HiddenLayer layer = sample_hidden_layer(genome, hidden_seed);
    BatchEvaluator eval(layer, genome.effective_lambda(), genome.row_weight_icbc());
    for (const Task* task : tasks) {
        rec.task_ids.push_back(task->task_id);
        double lse = kLossClamp;
        double mse = kLossClamp;
        try {
            const Solution sol = eval.learn(*task);
            lse = clamp_loss(sol.lse);
            mse = clamp_loss(sol.mse);
        } catch (const std::exception&) {
            // keep the penalty values; the offspring stays rankable
        }
        rec.lse_sum += lse;
        rec.mse_sum += mse;
    }
    rec.fitness = -(tau_lse * rec.lse_sum + tau_mse * rec.mse_sum);
    if (!std::isfinite(rec.fitness)) rec.fitness = kPenaltyFitness;
    return rec;
}

EvolveResult evolve(const std::string& problem, const EvolutionConfig& config,
                    const ProgressFn& progress, const std::optional<EsState>& resume) {
    const ProblemInfo& info = problem_info(problem);
    if (config.n_pop < 2) throw std::runtime_error("evolve: n_pop must be at least 2");
    if (config.n_task < 1) throw std::runtime_error("evolve: n_task must be positive");
    if (config.tau_lse < 0.0 || config.tau_mse < 0.0)
        throw std::runtime_error("evolve: tau weights must be nonnegative");

    const std::vector<Task>& train = problem_tasks(info, Split::Train);
    const int n_batch = std::min<int>(config.n_task, static_cast<int>(train.size()));
    const Genome proto = make_genome(info.n_input, info.n_neuron_per_block, info.use_row_weight);
    const int dim = proto.search_dim();

    EsState state = resume ? *resume : es_init(dim, config.initial_std);
    if (state.dim() != dim) throw std::runtime_error("evolve: resume state has wrong dimension");

    const int n_threads = std::max(1, config.n_threads);
    EvolveResult out;

    for (int gen = state.generation; gen < config.max_iterations; ++gen) {
        const auto tick = std::chrono::steady_clock::now();

        const std::vector<int> batch_idx =
            sample_batch(static_cast<int>(train.size()), n_batch, config.seed, gen);
        std::vector<const Task*> batch;
        batch.reserve(batch_idx.size());
        for (int i : batch_idx) batch.push_back(&train[i]);

        const std::vector<Eigen::VectorXd> offspring = es_ask(state, config.n_pop, config.seed);
        std::vector<double> fit(config.n_pop, kPenaltyFitness);

        auto worker = [&](int first) {
            for (int i = first; i < config.n_pop; i += n_threads) {
                const Genome g = genome_from_vector(offspring[i], info.n_input,
                                                    info.n_neuron_per_block, info.use_row_weight);
                const std::uint64_t hseed = stream_key(config.seed, 0xF17A0u,
                                                       static_cast<std::uint64_t>(gen),
                                                       static_cast<std::uint64_t>(i));
                fit[i] = fitness(g, batch, hseed, config.tau_lse, config.tau_mse).fitness;
            }
        };
        if (n_threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_threads - 1);
            for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker, t);
            worker(0);
            for (std::thread& th : pool) th.join();
        }

        const EsState before = state;
        es_tell(state, offspring, fit);

        GenerationRecord rec;
        rec.generation = gen;
        rec.best_fitness = *std::max_element(fit.begin(), fit.end());
        rec.median_fitness = median_of(fit);
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - tick)
                          .count();
        out.history.push_back(rec);

        if (progress && !progress(rec, before, state)) break;
    }

    out.best_genome = genome_from_vector(state.mean, info.n_input, info.n_neuron_per_block,
                                         info.use_row_weight);
    out.state = state;
    return out;
}

}  // namespace bpinn

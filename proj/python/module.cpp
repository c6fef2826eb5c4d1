#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bpinn/harness.hpp"

namespace py = pybind11;
using namespace bpinn;

namespace {

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw py::value_error("split must be 'train' or 'test', got '" + s + "'");
}

const ProblemInfo& lookup(const std::string& name_or_id) {
    const ProblemInfo* info = find_problem(name_or_id);
    if (!info) throw py::value_error("unknown problem '" + name_or_id + "'");
    return *info;
}

int resolve_threads(int n) {
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Baldwinian evolution of physics-informed networks";
    m.attr("__version__") = kVersion;

    py::class_<ProblemInfo>(m, "ProblemInfo")
        .def_readonly("id", &ProblemInfo::id)
        .def_readonly("name", &ProblemInfo::name)
        .def_readonly("equation", &ProblemInfo::equation)
        .def_readonly("n_input", &ProblemInfo::n_input)
        .def_readonly("n_outputs", &ProblemInfo::n_outputs)
        .def_readonly("n_neuron_per_block", &ProblemInfo::n_neuron_per_block)
        .def_readonly("use_row_weight", &ProblemInfo::use_row_weight)
        .def_readonly("n_train", &ProblemInfo::n_train)
        .def_readonly("n_test", &ProblemInfo::n_test)
        .def_readonly("n_task", &ProblemInfo::n_task)
        .def_readonly("n_pop", &ProblemInfo::n_pop)
        .def_readonly("iterations", &ProblemInfo::iterations)
        .def_readonly("initial_std", &ProblemInfo::initial_std)
        .def_readonly("target_mse", &ProblemInfo::target_mse)
        .def_readonly("param_names", &ProblemInfo::param_names)
        .def("__repr__", [](const ProblemInfo& p) {
            return "<ProblemInfo " + std::to_string(p.id) + " '" + p.name + "'>";
        });

    py::class_<Genome>(m, "Genome")
        .def(py::init([](const std::string& problem) {
                 const ProblemInfo& info = lookup(problem);
                 return make_genome(info.n_input, info.n_neuron_per_block, info.use_row_weight);
             }),
             py::arg("problem"),
             "Zero-initialized genome shaped for a problem (name or id).")
        .def_readwrite("n_input", &Genome::n_input)
        .def_readwrite("n_neuron_per_block", &Genome::n_neuron_per_block)
        .def_readwrite("means", &Genome::means)
        .def_readwrite("spreads", &Genome::spreads)
        .def_readwrite("lambda_raw", &Genome::lambda_raw)
        .def_readwrite("lambda_pde_raw", &Genome::lambda_pde_raw)
        .def_property_readonly("search_dim", &Genome::search_dim)
        .def_property_readonly("effective_lambda", &Genome::effective_lambda)
        .def("__repr__", [](const Genome& g) {
            return "<Genome dim=" + std::to_string(g.search_dim()) +
                   " n_input=" + std::to_string(g.n_input) + ">";
        });

    py::class_<TaskMetrics>(m, "TaskMetrics")
        .def_readonly("task_id", &TaskMetrics::task_id)
        .def_readonly("params", &TaskMetrics::params)
        .def_readonly("lse", &TaskMetrics::lse)
        .def_readonly("mse", &TaskMetrics::mse)
        .def_readonly("wall_ms", &TaskMetrics::wall_ms);

    py::class_<RestartMetrics>(m, "RestartMetrics")
        .def_readonly("mse_stage1", &RestartMetrics::mse_stage1)
        .def_readonly("mse_full", &RestartMetrics::mse_full)
        .def_readonly("mean_mse_stage1", &RestartMetrics::mean_mse_stage1)
        .def_readonly("mean_mse_full", &RestartMetrics::mean_mse_full);

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("problem", &EvalResult::problem)
        .def_property_readonly(
            "split", [](const EvalResult& r) { return r.split == Split::Train ? "train" : "test"; })
        .def_readonly("seed", &EvalResult::seed)
        .def_readonly("rows", &EvalResult::rows)
        .def_readonly("mean_mse", &EvalResult::mean_mse)
        .def_readonly("std_mse", &EvalResult::std_mse)
        .def_readonly("mean_lse", &EvalResult::mean_lse)
        .def_readonly("restart", &EvalResult::restart)
        .def("__repr__", [](const EvalResult& r) {
            return "<EvalResult " + r.problem + " mean_mse=" + std::to_string(r.mean_mse) + ">";
        });

    py::class_<GenerationRecord>(m, "GenerationRecord")
        .def_readonly("generation", &GenerationRecord::generation)
        .def_readonly("best_fitness", &GenerationRecord::best_fitness)
        .def_readonly("median_fitness", &GenerationRecord::median_fitness)
        .def_readonly("wall_ms", &GenerationRecord::wall_ms);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("genome", &TrainResult::genome)
        .def_readonly("history", &TrainResult::history)
        .def_readonly("manifest_path", &TrainResult::manifest_path)
        .def_readonly("train_metrics", &TrainResult::train_metrics)
        .def_readonly("test_metrics", &TrainResult::test_metrics);

    m.def("list_problems", [] { return problem_registry(); },
          "All registered problem families.");

    m.def("load_genome",
          [](const std::filesystem::path& path) {
              const GenomeFile gf = load_genome(path);
              return py::make_tuple(gf.genome, gf.problem_id);
          },
          py::arg("path"), "Read a genome.json; returns (genome, problem_id).");

    m.def("save_genome", &save_genome, py::arg("path"), py::arg("genome"), py::arg("problem_id"));

    m.def("evaluate",
          [](const Genome& genome, const std::string& problem, const std::string& split,
             std::uint64_t seed, int threads) {
              const ProblemInfo& info = lookup(problem);
              const Split sp = parse_split(split);
              const int n = resolve_threads(threads);
              py::gil_scoped_release release;
              return run_eval(genome, info, sp, seed, n);
          },
          py::arg("genome"), py::arg("problem"), py::arg("split") = "test", py::arg("seed") = 0,
          py::arg("threads") = 0,
          "Sample the hidden layer from (genome, seed) and score every canonical\n"
          "task of the split. threads <= 0 means all cores.");

    m.def("train",
          [](const std::string& problem, const std::string& out_dir, std::uint64_t seed, int pop,
             int iterations, int tasks_per_gen, double initial_std, int threads,
             int checkpoint_interval, bool resume, bool final_eval) {
              const ProblemInfo& info = lookup(problem);
              TrainOptions opts;
              opts.problem = info.name;
              opts.config.seed = seed;
              opts.config.n_pop = pop > 0 ? pop : info.n_pop;
              opts.config.n_task = tasks_per_gen > 0 ? tasks_per_gen : info.n_task;
              opts.config.max_iterations = iterations > 0 ? iterations : info.iterations;
              opts.config.initial_std = initial_std > 0.0 ? initial_std : info.initial_std;
              opts.config.n_threads = resolve_threads(threads);
              opts.out_dir = out_dir;
              opts.checkpoint_interval = checkpoint_interval;
              opts.resume = resume;
              opts.final_eval = final_eval;
              py::gil_scoped_release release;
              return run_train(opts);
          },
          py::arg("problem"), py::arg("out_dir"), py::arg("seed") = 0, py::arg("pop") = 0,
          py::arg("iterations") = 0, py::arg("tasks_per_gen") = 0, py::arg("initial_std") = 0.0,
          py::arg("threads") = 0, py::arg("checkpoint_interval") = 25, py::arg("resume") = false,
          py::arg("final_eval") = true,
          "Evolve the weight distribution for a problem, writing run artifacts\n"
          "(manifest, genome, history, checkpoints) into out_dir. Zero-valued\n"
          "numeric arguments fall back to the problem's table defaults.");

    m.def("report_table",
          [](const std::vector<std::filesystem::path>& manifests, const std::string& csv_out) {
              // string, not path: pybind round-trips an empty default path
              // through pathlib, which turns "" into "." and breaks the
              // "no CSV" convention.
              return report_table(manifests, std::filesystem::path(csv_out));
          },
          py::arg("manifests"), py::arg("csv_out") = std::string{},
          "Text table summarizing finished runs (one row per manifest).");
}

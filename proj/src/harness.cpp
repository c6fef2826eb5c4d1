#include "bpinn/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bpinn/basis.hpp"
#include "bpinn/rng.hpp"

namespace bpinn {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kEvalLayerTag = 0xE7A1;

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string iso_now() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// round-trip formatting, so artifacts diff cleanly and reload exactly
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json config_json(const EvolutionConfig& c) {
    return {{"seed", c.seed},
            {"n_pop", c.n_pop},
            {"n_task", c.n_task},
            {"max_iterations", c.max_iterations},
            {"initial_std", c.initial_std},
            {"tau_lse", c.tau_lse},
            {"tau_mse", c.tau_mse},
            {"n_threads", c.n_threads}};
}

EvolutionConfig config_from_json(const json& j) {
    EvolutionConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_pop = j.at("n_pop").get<int>();
    c.n_task = j.at("n_task").get<int>();
    c.max_iterations = j.at("max_iterations").get<int>();
    c.initial_std = j.at("initial_std").get<double>();
    c.tau_lse = j.at("tau_lse").get<double>();
    c.tau_mse = j.at("tau_mse").get<double>();
    c.n_threads = j.at("n_threads").get<int>();
    return c;
}

json history_json(const std::vector<GenerationRecord>& history) {
    json rows = json::array();
    for (const GenerationRecord& r : history)
        rows.push_back({{"generation", r.generation},
                        {"best_fitness", r.best_fitness},
                        {"median_fitness", r.median_fitness},
                        {"wall_ms", r.wall_ms}});
    return rows;
}

void write_checkpoint(const fs::path& path, const ProblemInfo& info,
                      const EvolutionConfig& cfg, const EsState& before, const EsState& after,
                      const std::vector<GenerationRecord>& history) {
    json j = {{"schema_version", kSchemaVersion},
              {"problem", info.name},
              {"problem_id", info.id},
              {"config", config_json(cfg)},
              {"state_before", json::parse(serialize_es_state(before))},
              {"state", json::parse(serialize_es_state(after))},
              {"history", history_json(history)}};
    const fs::path tmp = path.string() + ".tmp";
    write_file(tmp, j.dump(2) + "\n");
    fs::rename(tmp, path);
}

void history_row(std::ostream& out, const GenerationRecord& r) {
    out << r.generation << ',' << fmt(r.best_fitness) << ',' << fmt(r.median_fitness) << ','
        << static_cast<long>(r.wall_ms) << '\n';
}

// stage-one prediction grid for the problem-2 restart: u(x, 2) on the x-grid
PointSetPtr restart_seam_grid() {
    static const PointSetPtr grid = [] {
        Eigen::MatrixXd m(101, 2);
        m.col(0) = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
        m.col(1).setConstant(2.0);
        return make_points(std::move(m));
    }();
    return grid;
}

}  // namespace

void save_genome(const fs::path& path, const Genome& genome, int problem_id) {
    write_file(path, serialize_genome(genome, problem_id));
}

GenomeFile load_genome(const fs::path& path) {
    return deserialize_genome(read_file(path));
}

EvalResult run_eval(const Genome& genome, const ProblemInfo& info, Split split,
                    std::uint64_t seed, int n_threads) {
    if (genome.n_input != info.n_input)
        throw std::runtime_error("genome has n_input=" + std::to_string(genome.n_input) +
                                 " but problem '" + info.name + "' needs n_input=" +
                                 std::to_string(info.n_input));
    if (static_cast<int>(genome.means.size()) != genome.n_dist())
        throw std::runtime_error("genome means/spreads have the wrong length");

    const std::vector<Task>& tasks = problem_tasks(info, split);
    const HiddenLayer layer = sample_hidden_layer(genome, stream_key(seed, kEvalLayerTag));

    EvalResult res;
    res.problem = info.name;
    res.split = split;
    res.seed = seed;
    res.rows.resize(tasks.size());
    const bool with_restart = info.id == 2 && split == Split::Test;
    if (with_restart) {
        res.restart.emplace();
        res.restart->mse_stage1.resize(tasks.size());
        res.restart->mse_full.resize(tasks.size());
    }

    auto worker = [&](int tid, int stride) {
        BatchEvaluator eval(layer, genome.effective_lambda(), genome.row_weight_icbc());
        for (size_t i = tid; i < tasks.size(); i += stride) {
            const auto t0 = std::chrono::steady_clock::now();
            const Solution sol = eval.learn(tasks[i]);
            TaskMetrics& m = res.rows[i];
            m.task_id = tasks[i].task_id;
            m.params = tasks[i].param_values;
            m.lse = sol.lse;
            m.mse = sol.mse;
            if (with_restart) {
                const Eigen::VectorXd seam =
                    eval_features(layer, *restart_seam_grid()) * sol.w.col(0);
                const Task cont = make_linear_family_restart_task(tasks[i].param_values, seam);
                const Solution solB = eval.learn(cont);
                const Eigen::MatrixXd pred = eval_features(layer, *cont.pde_points) * solB.w;
                // rows past the first time slice are t > 2; the t = 2 row is
                // stage one's territory
                const Eigen::Index tail = pred.rows() - 101;
                const double sse_b =
                    (pred.bottomRows(tail) - cont.labels.values.bottomRows(tail)).squaredNorm();
                const double sse_a = sol.mse * tasks[i].pde_points->size();
                const double n_union =
                    static_cast<double>(tasks[i].pde_points->size() + tail);
                res.restart->mse_stage1[i] = sol.mse;
                res.restart->mse_full[i] = (sse_a + sse_b) / n_union;
                m.mse = res.restart->mse_full[i];
                m.lse = sol.lse + solB.lse;
            }
            m.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        }
    };
    if (n_threads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t, n_threads);
        for (auto& th : pool) th.join();
    }

    std::vector<double> mses, lses, walls;
    for (const TaskMetrics& m : res.rows) {
        mses.push_back(m.mse);
        lses.push_back(m.lse);
        walls.push_back(m.wall_ms);
    }
    res.mean_mse = mean_of(mses);
    res.std_mse = sample_std(mses);
    res.mean_lse = mean_of(lses);
    res.mean_wall_ms = mean_of(walls);
    if (with_restart) {
        res.restart->mean_mse_stage1 = mean_of(res.restart->mse_stage1);
        res.restart->mean_mse_full = mean_of(res.restart->mse_full);
    }
    return res;
}

void write_metrics_csv(const fs::path& path, const ProblemInfo& info, const EvalResult& result) {
    std::ostringstream out;
    out << "task_id";
    for (const std::string& name : info.param_names) out << ',' << name;
    out << ",lse,mse,wall_ms\n";
    for (const TaskMetrics& m : result.rows) {
        out << m.task_id;
        for (double p : m.params) out << ',' << fmt(p);
        out << ',' << fmt(m.lse) << ',' << fmt(m.mse);
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.3f", m.wall_ms);
        out << ',' << wall << '\n';
    }
    write_file(path, out.str());
}

void write_eval_json(const fs::path& path, const ProblemInfo& info, const EvalResult& result) {
    json j = {{"schema_version", kSchemaVersion},
              {"problem", result.problem},
              {"problem_id", info.id},
              {"split", result.split == Split::Train ? "train" : "test"},
              {"seed", result.seed},
              {"n_tasks", result.rows.size()},
              {"mean_mse", result.mean_mse},
              {"std_mse", result.std_mse},
              {"mean_lse", result.mean_lse},
              {"mean_wall_ms", result.mean_wall_ms},
              {"target_mse", info.target_mse},
              {"pass", result.mean_mse <= info.target_mse}};
    if (result.restart) {
        j["restart"] = {{"mean_mse_stage1", result.restart->mean_mse_stage1},
                        {"mean_mse_full", result.restart->mean_mse_full},
                        {"mse_stage1", result.restart->mse_stage1},
                        {"mse_full", result.restart->mse_full}};
    }
    write_file(path, j.dump(2) + "\n");
}

TrainResult run_train(const TrainOptions& opts) {
    const ProblemInfo& info = problem_info(opts.problem);
    EvolutionConfig cfg = opts.config;
    fs::create_directories(opts.out_dir);
    const fs::path checkpoint_path = opts.out_dir / "checkpoint.json";
    const std::string started = iso_now();

    std::optional<EsState> resume_state;
    std::vector<GenerationRecord> history;
    std::optional<GenerationRecord> expected;  // the row the replay must reproduce
    if (opts.resume) {
        const json ck = json::parse(read_file(checkpoint_path));
        if (ck.at("problem").get<std::string>() != info.name)
            throw std::runtime_error("checkpoint in " + opts.out_dir.string() + " is for problem '" +
                                     ck.at("problem").get<std::string>() + "'");
        EvolutionConfig saved = config_from_json(ck.at("config"));
        saved.n_threads = cfg.n_threads;  // thread count never changes results
        cfg = saved;
        EsState prev = deserialize_es_state(ck.at("state_before").dump());
        for (const json& row : ck.at("history"))
            history.push_back({row.at("generation").get<int>(),
                               row.at("best_fitness").get<double>(),
                               row.at("median_fitness").get<double>(),
                               row.at("wall_ms").get<double>()});
        while (!history.empty() && history.back().generation >= prev.generation) {
            if (history.back().generation == prev.generation) expected = history.back();
            history.pop_back();
        }
        if (!expected)
            throw std::runtime_error("checkpoint history is missing the replay generation");
        resume_state = std::move(prev);
    }

    std::ofstream hist_csv(opts.out_dir / "history.csv");
    hist_csv << "generation,best_fitness,median_fitness,wall_ms\n";
    for (const GenerationRecord& r : history) history_row(hist_csv, r);
    hist_csv.flush();

    auto progress = [&](const GenerationRecord& rec, const EsState& before,
                        const EsState& after) {
        if (expected) {
            if (rec.generation != expected->generation ||
                rec.best_fitness != expected->best_fitness ||
                rec.median_fitness != expected->median_fitness)
                throw std::runtime_error(
                    "resume validation failed: generation " + std::to_string(rec.generation) +
                    " did not replay to the recorded fitness");
            std::fprintf(stderr, "resume: generation %d replayed identically\n", rec.generation);
            expected.reset();
        }
        history.push_back(rec);
        history_row(hist_csv, rec);
        hist_csv.flush();
        if ((rec.generation + 1) % opts.checkpoint_interval == 0 ||
            rec.generation + 1 >= cfg.max_iterations)
            write_checkpoint(checkpoint_path, info, cfg, before, after, history);
        return opts.progress ? opts.progress(rec, before, after) : true;
    };

    const EvolveResult er = evolve(info.name, cfg, progress, resume_state);

    TrainResult out;
    out.genome = er.best_genome;
    out.history = history;
    save_genome(opts.out_dir / "genome.json", out.genome, info.id);

    json manifest = {{"schema_version", kSchemaVersion},
                     {"code_version", kVersion},
                     {"problem", info.name},
                     {"problem_id", info.id},
                     {"config", config_json(cfg)},
                     {"started_at", started},
                     {"finished_at", iso_now()},
                     {"genome", "genome.json"},
                     {"history", "history.csv"},
                     {"checkpoint", "checkpoint.json"},
                     {"generations", history.size()}};

    if (opts.final_eval) {
        const EvalResult tr = run_eval(out.genome, info, Split::Train, cfg.seed, cfg.n_threads);
        const EvalResult te = run_eval(out.genome, info, Split::Test, cfg.seed, cfg.n_threads);
        write_metrics_csv(opts.out_dir / "metrics_train.csv", info, tr);
        write_metrics_csv(opts.out_dir / "metrics_test.csv", info, te);
        write_eval_json(opts.out_dir / "metrics_train.json", info, tr);
        write_eval_json(opts.out_dir / "metrics_test.json", info, te);
        auto summary = [](const EvalResult& e, const char* file) {
            return json{{"file", file},
                        {"mean_mse", e.mean_mse},
                        {"std_mse", e.std_mse},
                        {"mean_lse", e.mean_lse},
                        {"mean_wall_ms", e.mean_wall_ms}};
        };
        manifest["train_metrics"] = summary(tr, "metrics_train.csv");
        manifest["test_metrics"] = summary(te, "metrics_test.csv");
        manifest["test_metrics"]["target_mse"] = info.target_mse;
        manifest["test_metrics"]["pass"] = te.mean_mse <= info.target_mse;
        out.train_metrics = tr;
        out.test_metrics = te;
    }

    out.manifest_path = opts.out_dir / "manifest.json";
    write_file(out.manifest_path, manifest.dump(2) + "\n");
    return out;
}

std::string report_table(const std::vector<fs::path>& manifests, const fs::path& csv_out) {
    struct Row {
        std::string problem;
        std::string config;
        double mean_mse = std::numeric_limits<double>::quiet_NaN();
        double std_mse = 0.0;
        double target = 0.0;
        double wall_ms = 0.0;
        bool has_metrics = false;
    };
    std::vector<Row> rows;
    std::map<std::string, std::vector<double>> pooled;  // problem -> per-task test MSEs
    std::map<std::string, int> run_count;

    for (const fs::path& mpath : manifests) {
        const json m = json::parse(read_file(mpath));
        Row r;
        r.problem = m.at("problem").get<std::string>();
        const json& c = m.at("config");
        r.config = "pop " + std::to_string(c.at("n_pop").get<int>()) + ", " +
                   std::to_string(c.at("max_iterations").get<int>()) + " gens, std " +
                   fmt(c.at("initial_std").get<double>()) + ", " +
                   std::to_string(c.at("n_task").get<int>()) + " tasks/gen";
        const ProblemInfo* info = find_problem(r.problem);
        r.target = info ? info->target_mse : 0.0;
        if (m.contains("test_metrics")) {
            const json& t = m.at("test_metrics");
            r.mean_mse = t.at("mean_mse").get<double>();
            r.std_mse = t.at("std_mse").get<double>();
            r.wall_ms = t.at("mean_wall_ms").get<double>();
            r.has_metrics = true;
            // pool the per-task rows for the cross-run aggregate
            const fs::path csv = mpath.parent_path() / t.at("file").get<std::string>();
            std::ifstream in(csv);
            std::string line;
            int mse_col = -1;
            if (in && std::getline(in, line)) {
                std::stringstream hs(line);
                std::string cell;
                for (int i = 0; std::getline(hs, cell, ','); ++i)
                    if (cell == "mse") mse_col = i;
            }
            while (mse_col >= 0 && std::getline(in, line)) {
                std::stringstream ls(line);
                std::string cell;
                for (int i = 0; std::getline(ls, cell, ','); ++i)
                    if (i == mse_col) pooled[r.problem].push_back(std::stod(cell));
            }
        }
        ++run_count[r.problem];
        rows.push_back(std::move(r));
    }

    std::ostringstream text, csv;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s %-40s %13s %12s %10s %9s %s\n", "problem", "config",
                  "test MSE", "+- std", "target", "ms/task", "result");
    text << buf;
    csv << "problem,config,mean_test_mse,std_test_mse,target_mse,mean_wall_ms,result\n";
    auto emit = [&](const std::string& problem, const std::string& config, double mean,
                    double sdev, double target, double wall, bool has) {
        const char* verdict = !has ? "n/a" : (mean <= target ? "PASS" : "FAIL");
        if (has)
            std::snprintf(buf, sizeof buf, "%-24s %-40s %13.3e %12.3e %10.1e %9.1f %s\n",
                          problem.c_str(), config.c_str(), mean, sdev, target, wall, verdict);
        else
            std::snprintf(buf, sizeof buf, "%-24s %-40s %13s %12s %10.1e %9s %s\n",
                          problem.c_str(), config.c_str(), "-", "-", target, "-", verdict);
        text << buf;
        csv << problem << ",\"" << config << "\",";
        if (has)
            csv << fmt(mean) << ',' << fmt(sdev) << ',';
        else
            csv << ",,";
        csv << fmt(target) << ',' << (has ? fmt(wall) : "") << ',' << verdict << '\n';
    };
    for (const Row& r : rows)
        emit(r.problem, r.config, r.mean_mse, r.std_mse, r.target, r.wall_ms, r.has_metrics);
    for (const auto& [problem, mses] : pooled) {
        if (run_count[problem] < 2) continue;
        const std::string label = "pooled, " + std::to_string(run_count[problem]) + " runs";
        const ProblemInfo* info = find_problem(problem);
        emit(problem, label, mean_of(mses), sample_std(mses), info ? info->target_mse : 0.0,
             0.0, true);
    }

    if (!csv_out.empty()) write_file(csv_out, csv.str());
    return text.str();
}

}  // namespace bpinn

#include "bpinn/problems.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "bpinn/rng.hpp"
#include "problem_functions.hpp"

namespace bpinn {
namespace {

using namespace detail;

// Canonical task parameters depend on these constants only, never on the run
// seed, so train/test sets are identical across runs and machines.
constexpr std::uint64_t kParamSeed = 0xCA11AB1E5EEDull;
constexpr std::uint64_t kSystemSeed = 0x5E5E5ull;

std::uint64_t split_tag(Split s) { return s == Split::Train ? 0 : 1; }

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::vector<std::string> seq_names(std::initializer_list<std::pair<const char*, int>> groups,
                                   std::vector<std::string> head = {}) {
    std::vector<std::string> out = std::move(head);
    for (const auto& [stem, n] : groups)
        for (int i = 1; i <= n; ++i) out.push_back(std::string(stem) + std::to_string(i));
    return out;
}

// ---------------------------------------------------------------------------
// grids

PointSetPtr col_points(const Eigen::VectorXd& x) {
    Eigen::MatrixXd m(x.size(), 1);
    m.col(0) = x;
    return make_points(std::move(m));
}

// rows ordered second-coordinate-major: row it*nx+ix = (x[ix], t[it])
PointSetPtr tensor_points(const Eigen::VectorXd& x, const Eigen::VectorXd& t) {
    Eigen::MatrixXd m(x.size() * t.size(), 2);
    Eigen::Index r = 0;
    for (Eigen::Index it = 0; it < t.size(); ++it)
        for (Eigen::Index ix = 0; ix < x.size(); ++ix, ++r) {
            m(r, 0) = x[ix];
            m(r, 1) = t[it];
        }
    return make_points(std::move(m));
}

// boundary nodes of the g x g tensor grid, each exactly once (4(n-1) points)
PointSetPtr perimeter_distinct(const Eigen::VectorXd& g) {
    const Eigen::Index n = g.size();
    Eigen::MatrixXd m(4 * (n - 1), 2);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i + 1 < n; ++i, ++r) m.row(r) << g[i], g[0];          // bottom
    for (Eigen::Index i = 0; i + 1 < n; ++i, ++r) m.row(r) << g[n - 1], g[i];      // right
    for (Eigen::Index i = n - 1; i > 0; --i, ++r) m.row(r) << g[i], g[n - 1];      // top
    for (Eigen::Index i = n - 1; i > 0; --i, ++r) m.row(r) << g[0], g[i];          // left
    return make_points(std::move(m));
}

// all n points of each side; corners appear twice (the 4 x n boundary layout
// of problems 9-11)
PointSetPtr perimeter_sides(const Eigen::VectorXd& g) {
    const Eigen::Index n = g.size();
    Eigen::MatrixXd m(4 * n, 2);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i, ++r) m.row(r) << g[0], g[i];
    for (Eigen::Index i = 0; i < n; ++i, ++r) m.row(r) << g[n - 1], g[i];
    for (Eigen::Index i = 0; i < n; ++i, ++r) m.row(r) << g[i], g[0];
    for (Eigen::Index i = 0; i < n; ++i, ++r) m.row(r) << g[i], g[n - 1];
    return make_points(std::move(m));
}

// both x-edges of a space-time slab at the given times
PointSetPtr slab_edges(double x_lo, double x_hi, const Eigen::VectorXd& times) {
    const Eigen::Index n = times.size();
    Eigen::MatrixXd m(2 * n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        m.row(i) << x_lo, times[i];
        m.row(n + i) << x_hi, times[i];
    }
    return make_points(std::move(m));
}

Eigen::MatrixXd targets_from(const PointSetPtr& pts,
                             const std::function<double(const double*)>& f) {
    Eigen::MatrixXd t(pts->size(), 1);
    double buf[4];
    for (Eigen::Index i = 0; i < pts->p.rows(); ++i) {
        for (Eigen::Index d = 0; d < pts->p.cols(); ++d) buf[d] = pts->p(i, d);
        t(i, 0) = f(buf);
    }
    return t;
}

struct GridSet {
    PointSetPtr pde;
    PointSetPtr ic;   // first constraint block (ICs / Dirichlet pairs)
    PointSetPtr bc;   // value rows, or the left periodic edge
    PointSetPtr bc2;  // right periodic edge
};

GridSet build_grids(int id, Split split) {
    using Eigen::VectorXd;
    GridSet g;
    switch (id) {
        case 1:
            g.pde = col_points(VectorXd::LinSpaced(1001, 0.0, 1.0));
            g.bc = col_points((VectorXd(2) << 0.0, 1.0).finished());
            break;
        case 2: {
            // stage-one grid; both splits learn on [0,2] (the restart task
            // covers [2,4] at the same spacing)
            const VectorXd x = VectorXd::LinSpaced(101, 0.0, 1.0);
            const VectorXd t = VectorXd::LinSpaced(51, 0.0, 2.0);
            g.pde = tensor_points(x, t);
            g.ic = tensor_points(x, VectorXd::Constant(1, 0.0));
            g.bc = tensor_points(VectorXd::Constant(1, 0.0), t.tail(50));
            g.bc2 = tensor_points(VectorXd::Constant(1, 1.0), t.tail(50));
            break;
        }
        case 3:
            g.pde = col_points(VectorXd::LinSpaced(1001, -10.0, 10.0));
            g.bc = col_points((VectorXd(2) << -10.0, 10.0).finished());
            break;
        case 4: {
            const VectorXd v = VectorXd::LinSpaced(split == Split::Train ? 33 : 129, -1.0, 1.0);
            g.pde = tensor_points(v, v);
            g.bc = perimeter_distinct(v);
            break;
        }
        case 5: {
            const VectorXd v = VectorXd::LinSpaced(split == Split::Train ? 32 : 128, -1.0, 1.0);
            g.pde = tensor_points(v, v);
            g.bc = perimeter_distinct(v);
            break;
        }
        case 7: {
            const VectorXd x = VectorXd::LinSpaced(257, -1.0, 1.0);
            const VectorXd t = VectorXd::LinSpaced(split == Split::Train ? 51 : 101, 0.0, 1.0);
            g.pde = tensor_points(x, t);
            g.ic = tensor_points(x, VectorXd::Constant(1, 0.0));
            g.bc = slab_edges(-1.0, 1.0, t.tail(t.size() - 1));
            break;
        }
        case 8: {
            const VectorXd x = VectorXd::LinSpaced(split == Split::Train ? 64 : 256, -1.0, 1.0);
            const VectorXd t = VectorXd::LinSpaced(split == Split::Train ? 25 : 100, 0.0, 1.0);
            g.pde = tensor_points(x, t);
            g.ic = tensor_points(x, VectorXd::Constant(1, 0.0));
            g.bc = slab_edges(-1.0, 1.0, t);
            break;
        }
        case 9:
        case 10:
        case 11: {
            const VectorXd v = VectorXd::LinSpaced(split == Split::Train ? 32 : 128, -1.0, 1.0);
            g.pde = tensor_points(v, v);
            g.bc = perimeter_sides(v);
            break;
        }
        default:
            throw std::runtime_error("grids: problem has per-task grids");
    }
    return g;
}

const GridSet& grids_for(int id, Split split) {
    static std::map<int, GridSet> cache;
    static std::mutex mu;
    // problem 2 shares one grid set across splits
    const int key = id * 2 + (id == 2 ? 0 : static_cast<int>(split_tag(split)));
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_grids(id, split)).first;
    return it->second;
}

// ---------------------------------------------------------------------------
// registry

std::vector<ProblemInfo> build_registry() {
    std::vector<ProblemInfo> reg;
    ProblemInfo p;

    p = {};
    p.id = 1;
    p.name = "convection-diffusion";
    p.equation = "alpha u' - u'' = 0 on [0,1], u(0)=0, u(1)=1";
    p.n_input = 1;
    p.n_train = 20;
    p.n_test = 110;
    p.n_task = 10;
    p.iterations = 200;
    p.initial_std = 1.0;
    p.target_mse = 1e-6;
    p.param_names = {"alpha"};
    reg.push_back(p);

    p = {};
    p.id = 2;
    p.name = "linear-pde-family";
    p.equation = "u_t + u_x - gamma u_xx + delta u_xxx = q on [0,1]x(0,2], periodic";
    p.n_input = 2;
    p.n_neuron_per_block = 200;
    p.n_train = 108;
    p.n_test = 87;
    p.n_task = 15;
    p.iterations = 500;
    p.initial_std = 5.0;
    p.target_mse = 7.1e-2;
    p.param_names = seq_names({{"A", 5}, {"omega", 5}, {"l", 5}, {"phi", 5}},
                              {"gamma", "delta"});
    reg.push_back(p);

    p = {};
    p.id = 3;
    p.name = "poisson-1d";
    p.equation = "u'' = q on [-10,10], Dirichlet ends";
    p.n_input = 1;
    p.n_train = 60;
    p.n_test = 60;
    p.n_task = 10;
    p.iterations = 100;
    p.initial_std = 1.0;
    p.target_mse = 1e-7;
    p.param_names = seq_names({{"alpha", 4}, {"omega", 2}});
    reg.push_back(p);

    p = {};
    p.id = 4;
    p.name = "poisson-2d";
    p.equation = "-laplace(u) = q (Gaussian bumps) on [-1,1]^2, zero boundary";
    p.n_input = 2;
    p.n_train = 100;
    p.n_test = 100;
    p.n_task = 20;
    p.iterations = 100;
    p.initial_std = 1.0;
    p.target_mse = 8.9e-10;
    p.param_names = seq_names({{"a", 10}, {"b", 10}, {"c", 10}, {"d", 10}}, {"J"});
    reg.push_back(p);

    p = {};
    p.id = 5;
    p.name = "helmholtz";
    p.equation = "laplace(u) + u = q on [-1,1]^2, Dirichlet boundary";
    p.n_input = 2;
    p.use_row_weight = true;
    p.n_train = 20;
    p.n_test = 60;
    p.n_task = 10;
    p.iterations = 400;
    p.initial_std = 5.0;
    p.target_mse = 1e-3;
    p.param_names = {"alpha1", "alpha2"};
    reg.push_back(p);

    p = {};
    p.id = 6;
    p.name = "kinematics";
    p.equation = "x'' + R x' = 0, y'' + R y' = -g, speed-dependent drag R";
    p.n_input = 1;
    p.n_outputs = 2;
    p.n_train = 150;
    p.n_test = 100;
    p.n_task = 30;
    p.iterations = 400;
    p.initial_std = 0.5;
    p.n_lag_train = 15;
    p.n_lag_test = 15;
    p.target_mse = 1e-5;
    p.param_names = {"a0", "vel0", "cd", "area", "mass"};
    reg.push_back(p);

    p = {};
    p.id = 7;
    p.name = "burgers";
    p.equation = "u_t + u u_x - gamma u_xx = 0 on [-1,1]x(0,1], u(x,0)=-sin(pi x)";
    p.n_input = 2;
    p.n_train = 16;
    p.n_test = 32;
    p.n_task = 5;
    p.iterations = 200;
    p.initial_std = 1.0;
    p.n_lag_train = 5;
    p.n_lag_test = 10;
    p.target_mse = 2.3e-5;
    p.param_names = {"gamma"};
    reg.push_back(p);

    p = {};
    p.id = 8;
    p.name = "nonlinear-heat";
    p.equation = "u_t - gamma u_xx + k tanh(u) = q on [-1,1]x(0,1]";
    p.n_input = 2;
    p.n_train = 13;
    p.n_test = 64;
    p.n_task = 5;
    p.iterations = 100;
    p.initial_std = 5.0;
    p.n_lag_train = 5;
    p.n_lag_test = 5;
    p.target_mse = 1.3e-5;
    p.param_names = {"gamma", "k"};
    reg.push_back(p);

    p = {};
    p.id = 9;
    p.name = "allen-cahn";
    p.equation = "gamma laplace(u) + u(u^2-1) = q on [-1,1]^2";
    p.n_input = 2;
    p.n_train = 16;
    p.n_test = 32;
    p.n_task = 8;
    p.iterations = 100;
    p.initial_std = 0.5;
    p.n_lag_train = 5;
    p.n_lag_test = 10;
    p.target_mse = 2.0e-5;
    p.param_names = {"gamma"};
    reg.push_back(p);

    p = {};
    p.id = 10;
    p.name = "diffusion-reaction";
    p.equation = "gamma laplace(u) + k u^2 = q on [-1,1]^2";
    p.n_input = 2;
    p.n_train = 22;
    p.n_test = 64;
    p.n_task = 10;
    p.iterations = 100;
    p.initial_std = 1.0;
    p.n_lag_train = 5;
    p.n_lag_test = 5;
    p.target_mse = 1.2e-6;
    p.param_names = {"gamma", "k"};
    reg.push_back(p);

    p = {};
    p.id = 11;
    p.name = "diffusion-reaction-6d";
    p.equation = "laplace(u) + u(1-u^2) = q on [-1,1]^2, 6 task parameters";
    p.n_input = 2;
    p.n_train = 17;
    p.n_test = 100;
    p.n_task = 8;
    p.iterations = 100;
    p.initial_std = 1.0;
    p.n_lag_train = 5;
    p.n_lag_test = 5;
    p.target_mse = 1.6e-6;
    p.param_names = seq_names({{"omega", 4}}, {"alpha1", "alpha2"});
    reg.push_back(p);

    return reg;
}

Eigen::MatrixXd task_truth(int id, const std::vector<double>& params, const PointSet& pts) {
    switch (id) {
        case 2:
            return oracle_fourier_linear_family(params, pts);
        case 4:
            return oracle_poisson_fd(params, pts);
        case 6:
            return oracle_kinematics_rk4(params, pts);
        case 7:
            return oracle_burgers(params, pts);
        default:
            return oracle_closed_form(id, params, pts);
    }
}

}  // namespace

const std::vector<ProblemInfo>& problem_registry() {
    static const std::vector<ProblemInfo> reg = build_registry();
    return reg;
}

const ProblemInfo* find_problem(const std::string& name_or_id) {
    for (const ProblemInfo& p : problem_registry()) {
        if (p.name == name_or_id) return &p;
    }
    char* end = nullptr;
    const long id = std::strtol(name_or_id.c_str(), &end, 10);
    if (end && *end == '\0' && !name_or_id.empty()) {
        for (const ProblemInfo& p : problem_registry())
            if (p.id == id) return &p;
    }
    return nullptr;
}

const ProblemInfo& problem_info(const std::string& name_or_id) {
    const ProblemInfo* p = find_problem(name_or_id);
    if (!p) throw std::runtime_error("unknown problem: " + name_or_id);
    return *p;
}

std::vector<std::vector<double>> problem_parameter_sets(const ProblemInfo& info, Split split) {
    std::vector<std::vector<double>> out;
    Rng rng(stream_key(kParamSeed, static_cast<std::uint64_t>(info.id), split_tag(split)));
    const bool train = split == Split::Train;
    switch (info.id) {
        case 1: {
            if (train)
                for (int i = 1; i <= 20; ++i) out.push_back({5.0 * i});
            else
                for (int i = 1; i <= 110; ++i) out.push_back({static_cast<double>(i)});
            break;
        }
        case 2: {
            const double vals[3] = {0.0, 5e-4, 1e-3};
            auto draw_source = [&](double gamma, double delta) {
                std::vector<double> p = {gamma, delta};
                for (int j = 0; j < 5; ++j) p.push_back(rng.uniform(-0.8, 0.8));
                for (int j = 0; j < 5; ++j) p.push_back(rng.uniform(-2.0, 2.0));
                for (int j = 0; j < 5; ++j) p.push_back(static_cast<double>(rng.below(5)));
                for (int j = 0; j < 5; ++j) p.push_back(rng.uniform(-kPi, kPi));
                return p;
            };
            if (train) {
                // all 9 (gamma, delta) combinations x 12 source/IC draws
                for (int c = 0; c < 9; ++c)
                    for (int r = 0; r < 12; ++r) out.push_back(draw_source(vals[c / 3], vals[c % 3]));
            } else {
                for (int i = 0; i < 87; ++i) {
                    const int c = i % 9;
                    out.push_back(draw_source(vals[c / 3], vals[c % 3]));
                }
            }
            break;
        }
        case 3: {
            const double lo = train ? 0.0 : -5.0;
            const double hi = train ? 4.0 : 5.0;
            for (int i = 0; i < 60; ++i) {
                std::vector<double> p(6);
                for (double& v : p) v = rng.uniform(lo, hi);
                out.push_back(std::move(p));
            }
            break;
        }
        case 4: {
            for (int i = 0; i < 100; ++i) {
                std::vector<double> p(41, 0.0);
                const int j_count = 1 + static_cast<int>(rng.below(10));
                p[0] = j_count;
                for (int j = 0; j < j_count; ++j) p[1 + j] = rng.uniform(-0.6, 0.6);
                for (int j = 0; j < j_count; ++j) p[11 + j] = rng.uniform(-0.6, 0.6);
                for (int j = 0; j < j_count; ++j) p[21 + j] = rng.uniform(0.5, 2.0);
                for (int j = 0; j < j_count; ++j) p[31 + j] = rng.uniform(0.005, 0.02);
                out.push_back(std::move(p));
            }
            break;
        }
        case 5: {
            const int n = train ? 20 : 60;
            for (int i = 0; i < n; ++i) {
                // 6 (1 - u01) lands in the stated half-open range (0, 6]
                out.push_back({6.0 * (1.0 - rng.u01()), 6.0 * (1.0 - rng.u01())});
            }
            break;
        }
        case 6: {
            const int n = train ? 150 : 100;
            const double a_lo = train ? 15.0 : 5.0, a_hi = train ? 85.0 : 90.0;
            const double v_lo = train ? 10.0 : 8.0, v_hi = train ? 110.0 : 98.0;
            for (int i = 0; i < n; ++i) {
                out.push_back({rng.uniform(a_lo, a_hi), rng.uniform(v_lo, v_hi),
                               rng.uniform(0.2, 0.7), rng.uniform(0.00145, 0.045),
                               rng.uniform(0.046, 0.6)});
            }
            break;
        }
        case 7: {
            if (train)
                for (int i = 0; i < 16; ++i) out.push_back({rng.uniform(5e-3, 5e-2)});
            else
                for (int i = 0; i < 32; ++i)
                    out.push_back({5e-3 + (5e-2 - 5e-3) * i / 31.0});
            break;
        }
        case 8:
        case 10: {
            const int n_train = info.id == 8 ? 13 : 22;
            if (train) {
                for (int i = 0; i < n_train; ++i)
                    out.push_back({rng.uniform(1.0, kPi), rng.uniform(1.0, kPi)});
            } else {
                // 8 x 8 tensor grid over the parameter square
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b)
                        out.push_back({1.0 + (kPi - 1.0) * a / 7.0, 1.0 + (kPi - 1.0) * b / 7.0});
            }
            break;
        }
        case 9: {
            if (train)
                for (int i = 0; i < 16; ++i) out.push_back({kPi * (1.0 - rng.u01())});
            else
                for (int i = 1; i <= 32; ++i) out.push_back({kPi * i / 32.0});
            break;
        }
        case 11: {
            const int n = train ? 17 : 100;
            for (int i = 0; i < n; ++i) {
                std::vector<double> p = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
                for (int j = 0; j < 4; ++j) p.push_back(rng.uniform(1.0, 5.0));
                out.push_back(std::move(p));
            }
            break;
        }
        default:
            throw std::runtime_error("unknown problem id");
    }
    return out;
}

double kinematics_horizon(double a0_deg, double vel0) {
    return 2.0 * vel0 * std::sin(a0_deg * kPi / 180.0) / kGravity;
}

Task make_task(const ProblemInfo& info, const std::vector<double>& params, Split split) {
    if (params.size() != info.param_names.size())
        throw std::invalid_argument("make_task: wrong parameter count for " + info.name);
    Task t;
    t.n_input = info.n_input;
    t.n_outputs = info.n_outputs;
    t.param_values = params;
    t.n_lag = split == Split::Train ? info.n_lag_train : info.n_lag_test;
    t.nonlinear = t.n_lag > 0;

    switch (info.id) {
        case 1: {
            const GridSet& g = grids_for(1, split);
            const double alpha = params[0];
            t.pde_points = g.pde;
            t.terms = {{{1}, alpha, nullptr}, {{2}, -1.0, nullptr}};
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0};
            bc.targets = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
            t.constraints = {std::move(bc)};
            break;
        }
        case 2: {
            const GridSet& g = grids_for(2, split);
            const LinearFamilyParams lf = LinearFamilyParams::parse(params);
            t.pde_points = g.pde;
            t.terms = {{{0, 1}, 1.0, nullptr},
                       {{1, 0}, 1.0, nullptr},
                       {{2, 0}, -lf.gamma, nullptr},
                       {{3, 0}, lf.delta, nullptr}};
            t.source = [lf](int, const double* pt) { return lf.source(pt[0], pt[1]); };
            ConstraintSpec ic;
            ic.points = g.ic;
            ic.multi_index = {0, 0};
            ic.targets = targets_from(g.ic, [&lf](const double* pt) { return lf.source(pt[0], 0.0); });
            ConstraintSpec per;
            per.points = g.bc;
            per.points2 = g.bc2;
            per.multi_index = {0, 0};
            per.targets = Eigen::MatrixXd::Zero(g.bc->size(), 1);
            t.constraints = {std::move(ic), std::move(per)};
            t.system_key = stream_key(kSystemSeed, 2, split_tag(split), bits(lf.gamma), bits(lf.delta));
            break;
        }
        case 3: {
            const GridSet& g = grids_for(3, split);
            t.pde_points = g.pde;
            t.terms = {{{2}, 1.0, nullptr}};
            const std::vector<double> p = params;
            t.source = [p](int, const double* pt) { return p3_source(p, pt[0]); };
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0};
            bc.targets = targets_from(g.bc, [&p](const double* pt) { return p3_exact(p, pt[0]); });
            t.constraints = {std::move(bc)};
            t.system_key = stream_key(kSystemSeed, 3, split_tag(split));
            break;
        }
        case 4: {
            const GridSet& g = grids_for(4, split);
            const GaussianSources gs = GaussianSources::parse(params);
            t.pde_points = g.pde;
            t.terms = {{{2, 0}, -1.0, nullptr}, {{0, 2}, -1.0, nullptr}};
            t.source = [gs](int, const double* pt) { return gs.q(pt[0], pt[1]); };
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets = Eigen::MatrixXd::Zero(g.bc->size(), 1);
            t.constraints = {std::move(bc)};
            t.system_key = stream_key(kSystemSeed, 4, split_tag(split));
            break;
        }
        case 5: {
            const GridSet& g = grids_for(5, split);
            const double a1 = params[0], a2 = params[1];
            t.pde_points = g.pde;
            t.terms = {{{2, 0}, 1.0, nullptr}, {{0, 2}, 1.0, nullptr}, {{0, 0}, 1.0, nullptr}};
            t.source = [a1, a2](int, const double* pt) { return p5_source(a1, a2, pt[0], pt[1]); };
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets =
                targets_from(g.bc, [a1, a2](const double* pt) { return p5_exact(a1, a2, pt[0], pt[1]); });
            t.constraints = {std::move(bc)};
            t.system_key = stream_key(kSystemSeed, 5, split_tag(split));
            break;
        }
        case 6: {
            const KinematicsParams kp = KinematicsParams::parse(params);
            const double horizon = kinematics_horizon(kp.a0, kp.vel0);
            t.pde_points = col_points(Eigen::VectorXd::LinSpaced(101, 0.0, horizon));
            t.terms = {{{2}, 1.0, nullptr}};
            const double cdrag = kp.drag();
            LaggedTerm drag;
            drag.multi_index = {1};
            drag.coeff = [cdrag](const double*, const LagView& v) {
                return cdrag * std::hypot(v.grad(0, 0), v.grad(1, 0));
            };
            t.lagged_terms = {std::move(drag)};
            t.source = [](int head, const double*) { return head == 1 ? -kGravity : 0.0; };
            PointSetPtr origin = col_points(Eigen::VectorXd::Zero(1));
            ConstraintSpec pos;
            pos.points = origin;
            pos.multi_index = {0};
            pos.targets = Eigen::MatrixXd::Zero(1, 2);
            ConstraintSpec vel;
            vel.points = origin;
            vel.multi_index = {1};
            vel.targets = (Eigen::MatrixXd(1, 2) << kp.vx0(), kp.vy0()).finished();
            t.constraints = {std::move(pos), std::move(vel)};
            t.needs_lag_grads = true;
            break;
        }
        case 7: {
            const GridSet& g = grids_for(7, split);
            const double gamma = params[0];
            t.pde_points = g.pde;
            t.terms = {{{0, 1}, 1.0, nullptr}, {{2, 0}, -gamma, nullptr}};
            LaggedTerm adv;  // u u_x linearized as (previous u) u_x
            adv.multi_index = {1, 0};
            adv.coeff = [](const double*, const LagView& v) { return v.value(0); };
            t.lagged_terms = {std::move(adv)};
            ConstraintSpec ic;
            ic.points = g.ic;
            ic.multi_index = {0, 0};
            ic.targets = targets_from(g.ic, [](const double* pt) { return -std::sin(kPi * pt[0]); });
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets = Eigen::MatrixXd::Zero(g.bc->size(), 1);
            t.constraints = {std::move(ic), std::move(bc)};
            break;
        }
        case 8: {
            const GridSet& g = grids_for(8, split);
            const double gamma = params[0], k = params[1];
            t.pde_points = g.pde;
            t.terms = {{{0, 1}, 1.0, nullptr}, {{2, 0}, -gamma, nullptr}};
            t.source = [gamma, k](int, const double* pt) { return p8_source(gamma, k, pt[0], pt[1]); };
            // k tanh(u) moves to the right-hand side at the previous iterate,
            // so A is fixed across lag iterations
            t.lagged_source = [k](int, const double*, const LagView& v) {
                return -k * std::tanh(v.value(0));
            };
            t.operator_lag_free = true;
            ConstraintSpec ic;
            ic.points = g.ic;
            ic.multi_index = {0, 0};
            ic.targets =
                targets_from(g.ic, [gamma, k](const double* pt) { return p8_exact(gamma, k, pt[0], 0.0); });
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets = Eigen::MatrixXd::Zero(g.bc->size(), 1);
            t.constraints = {std::move(ic), std::move(bc)};
            break;
        }
        case 9: {
            const GridSet& g = grids_for(9, split);
            const double gamma = params[0];
            t.pde_points = g.pde;
            t.terms = {{{2, 0}, gamma, nullptr}, {{0, 2}, gamma, nullptr}, {{0, 0}, -1.0, nullptr}};
            LaggedTerm cubic;  // u^3 linearized as (previous u)^2 u
            cubic.multi_index = {0, 0};
            cubic.coeff = [](const double*, const LagView& v) {
                const double u = v.value(0);
                return u * u;
            };
            t.lagged_terms = {std::move(cubic)};
            t.source = [gamma](int, const double* pt) { return p9_source(gamma, pt[0], pt[1]); };
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets =
                targets_from(g.bc, [gamma](const double* pt) { return p9_exact(gamma, pt[0], pt[1]); });
            t.constraints = {std::move(bc)};
            break;
        }
        case 10: {
            const GridSet& g = grids_for(10, split);
            const double gamma = params[0], k = params[1];
            t.pde_points = g.pde;
            t.terms = {{{2, 0}, gamma, nullptr}, {{0, 2}, gamma, nullptr}};
            LaggedTerm quad;  // k u^2 linearized as k (previous u) u
            quad.multi_index = {0, 0};
            quad.coeff = [k](const double*, const LagView& v) { return k * v.value(0); };
            t.lagged_terms = {std::move(quad)};
            t.source = [gamma, k](int, const double* pt) { return p10_source(gamma, k, pt[0], pt[1]); };
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets = targets_from(
                g.bc, [gamma, k](const double* pt) { return p10_exact(gamma, k, pt[0], pt[1]); });
            t.constraints = {std::move(bc)};
            break;
        }
        case 11: {
            const GridSet& g = grids_for(11, split);
            t.pde_points = g.pde;
            t.terms = {{{2, 0}, 1.0, nullptr}, {{0, 2}, 1.0, nullptr}, {{0, 0}, 1.0, nullptr}};
            LaggedTerm cubic;  // -u^3 linearized as -(previous u)^2 u
            cubic.multi_index = {0, 0};
            cubic.coeff = [](const double*, const LagView& v) {
                const double u = v.value(0);
                return -u * u;
            };
            t.lagged_terms = {std::move(cubic)};
            const std::vector<double> p = params;
            t.source = [p](int, const double* pt) { return p11_source(p, pt[0], pt[1]); };
            ConstraintSpec bc;
            bc.points = g.bc;
            bc.multi_index = {0, 0};
            bc.targets = targets_from(g.bc, [&p](const double* pt) { return p11_exact(p, pt[0], pt[1]); });
            t.constraints = {std::move(bc)};
            break;
        }
        default:
            throw std::runtime_error("unknown problem id");
    }

    t.labels.points = t.pde_points;
    t.labels.values = task_truth(info.id, params, *t.pde_points);
    return t;
}

const std::vector<Task>& problem_tasks(const ProblemInfo& info, Split split) {
    static std::map<std::pair<int, int>, std::vector<Task>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const auto key = std::make_pair(info.id, static_cast<int>(split_tag(split)));
    auto it = cache.find(key);
    if (it == cache.end()) {
        std::vector<Task> tasks;
        int id = 0;
        for (const auto& params : problem_parameter_sets(info, split)) {
            Task t = make_task(info, params, split);
            t.task_id = id++;
            tasks.push_back(std::move(t));
        }
        it = cache.emplace(key, std::move(tasks)).first;
    }
    return it->second;
}

Task make_linear_family_restart_task(const std::vector<double>& params,
                                     const Eigen::VectorXd& ic_values) {
    static GridSet grids;
    static std::once_flag once;
    std::call_once(once, [] {
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
        const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(51, 2.0, 4.0);
        grids.pde = tensor_points(x, t);
        grids.ic = tensor_points(x, Eigen::VectorXd::Constant(1, 2.0));
        grids.bc = tensor_points(Eigen::VectorXd::Constant(1, 0.0), t.tail(50));
        grids.bc2 = tensor_points(Eigen::VectorXd::Constant(1, 1.0), t.tail(50));
    });
    if (ic_values.size() != 101)
        throw std::invalid_argument("restart task: expected 101 initial values");

    const LinearFamilyParams lf = LinearFamilyParams::parse(params);
    Task t;
    t.n_input = 2;
    t.param_values = params;
    t.pde_points = grids.pde;
    t.terms = {{{0, 1}, 1.0, nullptr},
               {{1, 0}, 1.0, nullptr},
               {{2, 0}, -lf.gamma, nullptr},
               {{3, 0}, lf.delta, nullptr}};
    t.source = [lf](int, const double* pt) { return lf.source(pt[0], pt[1]); };
    ConstraintSpec ic;
    ic.points = grids.ic;
    ic.multi_index = {0, 0};
    ic.targets = ic_values;
    ConstraintSpec per;
    per.points = grids.bc;
    per.points2 = grids.bc2;
    per.multi_index = {0, 0};
    per.targets = Eigen::MatrixXd::Zero(grids.bc->size(), 1);
    t.constraints = {std::move(ic), std::move(per)};
    t.system_key = stream_key(kSystemSeed, 2, 7, bits(lf.gamma), bits(lf.delta));
    t.labels.points = t.pde_points;
    t.labels.values = oracle_fourier_linear_family(params, *t.pde_points);
    return t;
}

Eigen::MatrixXd oracle_closed_form(int problem_id, const std::vector<double>& params,
                                   const PointSet& pts) {
    Eigen::MatrixXd out(pts.size(), 1);
    for (Eigen::Index i = 0; i < pts.p.rows(); ++i) {
        const double x = pts.p(i, 0);
        const double y = pts.p.cols() > 1 ? pts.p(i, 1) : 0.0;
        double v = 0.0;
        switch (problem_id) {
            case 1:
                v = p1_exact(params[0], x);
                break;
            case 3:
                v = p3_exact(params, x);
                break;
            case 5:
                v = p5_exact(params[0], params[1], x, y);
                break;
            case 8:
                v = p8_exact(params[0], params[1], x, y);
                break;
            case 9:
                v = p9_exact(params[0], x, y);
                break;
            case 10:
                v = p10_exact(params[0], params[1], x, y);
                break;
            case 11:
                v = p11_exact(params, x, y);
                break;
            default:
                throw std::invalid_argument("oracle_closed_form: no closed form for this problem");
        }
        out(i, 0) = v;
    }
    return out;
}

double manufactured_source(int problem_id, const std::vector<double>& params, const double* pt) {
    switch (problem_id) {
        case 3:
            return p3_source(params, pt[0]);
        case 5:
            return p5_source(params[0], params[1], pt[0], pt[1]);
        case 8:
            return p8_source(params[0], params[1], pt[0], pt[1]);
        case 9:
            return p9_source(params[0], pt[0], pt[1]);
        case 10:
            return p10_source(params[0], params[1], pt[0], pt[1]);
        case 11:
            return p11_source(params, pt[0], pt[1]);
        default:
            throw std::invalid_argument("manufactured_source: not a manufactured problem");
    }
}

}  // namespace bpinn

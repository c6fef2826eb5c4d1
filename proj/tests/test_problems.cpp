#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "bpinn/problems.hpp"
#include "test_util.hpp"

using namespace bpinn;

namespace {

// ground truth as a point-set function, for finite differencing
testutil::PointFn oracle_of(int id, const std::vector<double>& params) {
    switch (id) {
        case 2:
            return [params](const PointSet& pts) { return oracle_fourier_linear_family(params, pts); };
        case 4:
            return [params](const PointSet& pts) { return oracle_poisson_fd(params, pts); };
        case 6:
            return [params](const PointSet& pts) { return oracle_kinematics_rk4(params, pts); };
        case 7:
            return [params](const PointSet& pts) { return oracle_burgers(params, pts); };
        default:
            return [id, params](const PointSet& pts) { return oracle_closed_form(id, params, pts); };
    }
}

// residual of the task's own operator at one point, all derivatives by
// central differences on the oracle: sum_k c_k D^k u + lagged terms at the
// exact previous iterate (= u itself) minus the right-hand side
double task_residual(const Task& task, const testutil::PointFn& u, const Eigen::RowVectorXd& pt,
                     int head, double h1, double h_high) {
    const int n_heads = task.n_outputs;
    std::vector<double> vals(n_heads), grads(n_heads * task.n_input);
    for (int m = 0; m < n_heads; ++m) {
        std::vector<int> mi0(task.n_input, 0);
        vals[m] = testutil::fd_apply(u, mi0, pt, m, h1);
        for (int d = 0; d < task.n_input; ++d) {
            std::vector<int> mi(task.n_input, 0);
            mi[d] = 1;
            grads[m * task.n_input + d] = testutil::fd_apply(u, mi, pt, m, h1);
        }
    }
    LagView view;
    view.values = vals.data();
    view.grads = grads.data();
    view.n_heads = n_heads;
    view.n_input = task.n_input;

    auto step = [&](const std::vector<int>& mi) {
        int order = 0;
        for (int k : mi) order += k;
        return order <= 1 ? h1 : h_high;
    };

    double res = 0.0;
    for (const OperatorTerm& term : task.terms) {
        const double c = term.coeff_fn ? term.coeff_fn(pt.data()) : term.coeff;
        res += c * testutil::fd_apply(u, term.multi_index, pt, head, step(term.multi_index));
    }
    for (const LaggedTerm& term : task.lagged_terms)
        res += term.coeff(pt.data(), view) *
               testutil::fd_apply(u, term.multi_index, pt, head, step(term.multi_index));
    if (task.source) res -= task.source(head, pt.data());
    if (task.lagged_source) res -= task.lagged_source(head, pt.data(), view);
    return res;
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("registry pins the benchmark table") {
    struct Row {
        int id;
        const char* name;
        int n_input, n_outputs, per_block, n_train, n_test, n_task, n_pop, iters;
        double init_std;
        int lag_train, lag_test;
        double target;
        int dim;
        bool row_weight;
    };
    const Row rows[] = {
        {1, "convection-diffusion", 1, 1, 150, 20, 110, 10, 20, 200, 1.0, 0, 0, 1e-6, 25, false},
        {2, "linear-pde-family", 2, 1, 200, 108, 87, 15, 20, 500, 5.0, 0, 0, 7.1e-2, 37, false},
        {3, "poisson-1d", 1, 1, 150, 60, 60, 10, 20, 100, 1.0, 0, 0, 1e-7, 25, false},
        {4, "poisson-2d", 2, 1, 150, 100, 100, 20, 20, 100, 1.0, 0, 0, 8.9e-10, 37, false},
        {5, "helmholtz", 2, 1, 150, 20, 60, 10, 20, 400, 5.0, 0, 0, 1e-3, 38, true},
        {6, "kinematics", 1, 2, 150, 150, 100, 30, 20, 400, 0.5, 15, 15, 1e-5, 25, false},
        {7, "burgers", 2, 1, 150, 16, 32, 5, 20, 200, 1.0, 5, 10, 2.3e-5, 37, false},
        {8, "nonlinear-heat", 2, 1, 150, 13, 64, 5, 20, 100, 5.0, 5, 5, 1.3e-5, 37, false},
        {9, "allen-cahn", 2, 1, 150, 16, 32, 8, 20, 100, 0.5, 5, 10, 2.0e-5, 37, false},
        {10, "diffusion-reaction", 2, 1, 150, 22, 64, 10, 20, 100, 1.0, 5, 5, 1.2e-6, 37, false},
        {11, "diffusion-reaction-6d", 2, 1, 150, 17, 100, 8, 20, 100, 1.0, 5, 5, 1.6e-6, 37, false},
    };

    const auto& reg = problem_registry();
    REQUIRE(reg.size() == 11);
    for (const Row& r : rows) {
        CAPTURE(r.id);
        const ProblemInfo& p = reg[r.id - 1];
        CHECK(p.id == r.id);
        CHECK(p.name == r.name);
        CHECK(p.n_input == r.n_input);
        CHECK(p.n_outputs == r.n_outputs);
        CHECK(p.n_neuron_per_block == r.per_block);
        CHECK(p.n_train == r.n_train);
        CHECK(p.n_test == r.n_test);
        CHECK(p.n_task == r.n_task);
        CHECK(p.n_pop == r.n_pop);
        CHECK(p.iterations == r.iters);
        CHECK(p.initial_std == r.init_std);
        CHECK(p.n_lag_train == r.lag_train);
        CHECK(p.n_lag_test == r.lag_test);
        CHECK(p.target_mse == r.target);
        CHECK(p.use_row_weight == r.row_weight);
        CHECK(make_genome(p.n_input, p.n_neuron_per_block, p.use_row_weight).search_dim() == r.dim);
        CHECK(!p.equation.empty());
    }
}

TEST_CASE("lookup by name or id string") {
    CHECK(find_problem("helmholtz")->id == 5);
    CHECK(find_problem("5") == find_problem("helmholtz"));
    CHECK(find_problem("poisson-2") == nullptr);
    CHECK(find_problem("0") == nullptr);
    CHECK(find_problem("12") == nullptr);
    CHECK_THROWS(problem_info("no-such-problem"));
}

TEST_CASE("canonical parameter sets have the documented shapes and replay exactly") {
    for (const ProblemInfo& info : problem_registry()) {
        CAPTURE(info.id);
        const auto train = problem_parameter_sets(info, Split::Train);
        const auto test = problem_parameter_sets(info, Split::Test);
        CHECK(static_cast<int>(train.size()) == info.n_train);
        CHECK(static_cast<int>(test.size()) == info.n_test);
        CHECK(train[0].size() == info.param_names.size());
        CHECK(test[0].size() == info.param_names.size());
        CHECK(problem_parameter_sets(info, Split::Train) == train);  // no hidden state
        CHECK(train != test);
    }

    // spot ranges from the problem statements
    const auto p1_train = problem_parameter_sets(problem_info("1"), Split::Train);
    const auto p1_test = problem_parameter_sets(problem_info("1"), Split::Test);
    CHECK(p1_train.front()[0] == 5.0);
    CHECK(p1_train.back()[0] == 100.0);
    CHECK(p1_test.front()[0] == 1.0);
    CHECK(p1_test.back()[0] == 110.0);

    for (const auto& p : problem_parameter_sets(problem_info("5"), Split::Test)) {
        CHECK(p[0] > 0.0);
        CHECK(p[0] <= 6.0);
        CHECK(p[1] > 0.0);
        CHECK(p[1] <= 6.0);
    }

    const auto p9_test = problem_parameter_sets(problem_info("9"), Split::Test);
    for (size_t i = 0; i < p9_test.size(); ++i)
        CHECK(p9_test[i][0] == doctest::Approx(3.14159265358979323846 * (i + 1) / 32.0).epsilon(1e-15));

    for (const auto& p : problem_parameter_sets(problem_info("6"), Split::Train)) {
        CHECK(p[0] >= 15.0);
        CHECK(p[0] <= 85.0);
        CHECK(p[1] >= 10.0);
        CHECK(p[1] <= 110.0);
    }
}

TEST_CASE("system keys distinguish operators, not right-hand sides") {
    auto key_of = [](int id, int index, Split split) {
        const ProblemInfo& info = problem_info(std::to_string(id));
        const auto params = problem_parameter_sets(info, split);
        return make_task(info, params[index], split).system_key;
    };

    // fixed-operator families share one nonzero key per split
    for (int id : {3, 4, 5}) {
        CAPTURE(id);
        CHECK(key_of(id, 0, Split::Train) != 0);
        CHECK(key_of(id, 0, Split::Train) == key_of(id, 1, Split::Train));
        CHECK(key_of(id, 0, Split::Train) != key_of(id, 0, Split::Test));
    }

    // per-task operator coefficients get no sharing key
    CHECK(key_of(1, 0, Split::Train) == 0);
    CHECK(key_of(7, 0, Split::Train) == 0);

    // problem 2 shares within a (gamma, delta) combination only
    const ProblemInfo& p2 = problem_info("2");
    const auto p2_test = problem_parameter_sets(p2, Split::Test);
    const Task a = make_task(p2, p2_test[0], Split::Test);
    const Task b = make_task(p2, p2_test[9], Split::Test);   // same combo, 9 = 0 mod 9
    const Task c = make_task(p2, p2_test[1], Split::Test);   // different combo
    CHECK(a.system_key != 0);
    CHECK(a.system_key == b.system_key);
    CHECK(a.system_key != c.system_key);
}

TEST_CASE("convection-diffusion task wiring") {
    const ProblemInfo& info = problem_info("convection-diffusion");
    const Task t = make_task(info, {7.0}, Split::Train);
    CHECK(t.pde_points->size() == 1001);
    REQUIRE(t.terms.size() == 2);
    CHECK(t.terms[0].coeff == 7.0);
    CHECK(t.terms[1].coeff == -1.0);
    REQUIRE(t.constraints.size() == 1);
    CHECK(t.constraints[0].targets(0, 0) == 0.0);
    CHECK(t.constraints[0].targets(1, 0) == 1.0);
    CHECK(!t.nonlinear);
    const Eigen::MatrixXd truth = oracle_closed_form(1, {7.0}, *t.pde_points);
    CHECK((t.labels.values - truth).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kinematics task wiring") {
    const ProblemInfo& info = problem_info("kinematics");
    const std::vector<double> params = {30.0, 40.0, 0.5, 0.01, 0.2};
    const Task t = make_task(info, params, Split::Train);
    CHECK(t.n_outputs == 2);
    CHECK(t.needs_lag_grads);
    CHECK(t.n_lag == 15);
    CHECK(t.pde_points->size() == 101);
    const double horizon = kinematics_horizon(30.0, 40.0);
    CHECK(t.pde_points->p(100, 0) == doctest::Approx(horizon).epsilon(1e-12));
    CHECK(horizon == doctest::Approx(2.0 * 40.0 * 0.5 / 9.8).epsilon(1e-12));  // sin 30 deg = 1/2

    REQUIRE(t.constraints.size() == 2);
    CHECK(t.constraints[0].targets.cwiseAbs().maxCoeff() == 0.0);  // starts at the origin
    CHECK(t.constraints[1].targets(0, 0) == doctest::Approx(20.0 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(t.constraints[1].targets(0, 1) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(t.labels.values.rows() == 101);
    CHECK(t.labels.values.cols() == 2);
}

TEST_CASE("linear family task wiring") {
    const ProblemInfo& info = problem_info("linear-pde-family");
    const auto params = problem_parameter_sets(info, Split::Test);
    const Task t = make_task(info, params[3], Split::Test);
    CHECK(t.pde_points->size() == 101 * 51);
    REQUIRE(t.constraints.size() == 2);

    // the modal truth at t = 0 reproduces the initial-condition rows
    const Eigen::MatrixXd at_zero = oracle_fourier_linear_family(params[3], *t.constraints[0].points);
    CHECK((at_zero - t.constraints[0].targets).cwiseAbs().maxCoeff() <= 1e-10);

    // periodic difference rows target zero and pair the two edges
    REQUIRE(t.constraints[1].points2 != nullptr);
    CHECK(t.constraints[1].targets.cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.constraints[1].points->p(0, 0) == 0.0);
    CHECK(t.constraints[1].points2->p(0, 0) == 1.0);
}

TEST_CASE("restart task continues the family from a supplied state") {
    const ProblemInfo& info = problem_info("linear-pde-family");
    const auto params = problem_parameter_sets(info, Split::Test);
    const Eigen::VectorXd ic = Eigen::VectorXd::LinSpaced(101, -0.3, 0.7);
    const Task t = make_linear_family_restart_task(params[0], ic);

    CHECK(t.pde_points->p.col(1).minCoeff() >= 2.0);
    CHECK(t.pde_points->p.col(1).maxCoeff() == doctest::Approx(4.0).epsilon(1e-12));
    REQUIRE(t.constraints.size() == 2);
    REQUIRE(t.constraints[0].points->size() == 101);
    CHECK((t.constraints[0].targets.col(0) - ic).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.constraints[0].points->p(0, 1) == 2.0);  // the seam is t = 2

    const Task stage_one = make_task(info, params[0], Split::Test);
    CHECK(t.system_key != 0);
    CHECK(t.system_key != stage_one.system_key);
    CHECK(t.labels.values.rows() == t.pde_points->size());
}

TEST_CASE("closed-form tasks satisfy their own operators") {
    struct Probe {
        int id;
        double h1, h_high, tol;
    };
    // h_high: step for the order >= 2 stencils; burgers needs a wide one
    // because its oracle is a quadrature with 1e-9 wiggle
    const std::vector<Probe> probes = {{1, 1e-5, 1e-4, 1e-4},  {2, 1e-5, 8e-4, 2e-3},
                                       {3, 1e-5, 1e-4, 1e-4},  {5, 1e-5, 1e-4, 2e-4},
                                       {6, 1e-5, 2e-4, 2e-3},  {7, 1e-4, 8e-3, 5e-3},
                                       {8, 1e-5, 1e-4, 2e-4},  {9, 1e-5, 1e-4, 2e-4},
                                       {10, 1e-5, 1e-4, 2e-4}, {11, 1e-5, 1e-4, 2e-4}};

    for (const Probe& probe : probes) {
        CAPTURE(probe.id);
        const ProblemInfo& info = problem_info(std::to_string(probe.id));
        const auto params = problem_parameter_sets(info, Split::Train);
        // burgers: probe the most viscous task; sharper ones need finer stencils
        size_t pick = 0;
        if (probe.id == 7)
            for (size_t i = 1; i < params.size(); ++i)
                if (params[i][0] > params[pick][0]) pick = i;
        const Task task = make_task(info, params[pick], Split::Train);
        const testutil::PointFn u = oracle_of(probe.id, params[pick]);

        // interior sample points, away from edges so the stencils stay inside
        std::vector<Eigen::RowVectorXd> pts;
        const Eigen::MatrixXd& grid = task.pde_points->p;
        const Eigen::RowVectorXd lo = grid.colwise().minCoeff();
        const Eigen::RowVectorXd hi = grid.colwise().maxCoeff();
        for (int i = grid.rows() / 7; pts.size() < 5 && i < grid.rows(); i += grid.rows() / 7) {
            const Eigen::RowVectorXd p = grid.row(i);
            bool interior = true;
            for (int d = 0; d < grid.cols(); ++d)
                interior = interior && p(d) > lo(d) + 0.15 * (hi(d) - lo(d)) &&
                           p(d) < hi(d) - 0.15 * (hi(d) - lo(d));
            if (interior) pts.push_back(p);
        }
        REQUIRE(!pts.empty());

        for (const auto& p : pts)
            for (int head = 0; head < task.n_outputs; ++head) {
                double scale = 1.0;
                if (task.source) scale = std::max(scale, std::abs(task.source(head, p.data())));
                const double r = task_residual(task, u, p, head, probe.h1, probe.h_high);
                CAPTURE(p(0));
                CHECK(std::abs(r) <= probe.tol * scale);
            }
    }
}

TEST_CASE("labels are the oracle truth on the collocation grid") {
    for (int id : {3, 5, 9}) {
        const ProblemInfo& info = problem_info(std::to_string(id));
        const auto params = problem_parameter_sets(info, Split::Test);
        const Task t = make_task(info, params[1], Split::Test);
        const Eigen::MatrixXd truth = oracle_closed_form(id, params[1], *t.pde_points);
        CHECK((t.labels.values - truth).cwiseAbs().maxCoeff() == 0.0);
    }
}

}  // TEST_SUITE

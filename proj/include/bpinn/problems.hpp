#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "bpinn/lifetime.hpp"

namespace bpinn {

enum class Split { Train, Test };

// Static description of one problem family: equation shape, Table-1 grid
// sizes and outer-loop defaults, and the canonical train/test set sizes.
struct ProblemInfo {
    int id = 0;
    std::string name;      // CLI identifier, e.g. "poisson-1d"
    std::string equation;  // one-line summary shown by list-problems
    int n_input = 1;
    int n_outputs = 1;
    int n_neuron_per_block = 150;
    bool use_row_weight = false;  // genome carries the evolved IC/BC row weight
    int n_train = 0;              // canonical task-set sizes
    int n_test = 0;
    int n_task = 0;  // tasks per generation
    int n_pop = 20;
    int iterations = 0;
    double initial_std = 1.0;
    int n_lag_train = 0;  // nonlinear lag iterations on the train grids (0 = linear)
    int n_lag_test = 0;   // denser test grids sometimes use more
    double target_mse = 0.0;  // mean-test-MSE gate used by report
    std::vector<std::string> param_names;
};

const std::vector<ProblemInfo>& problem_registry();
// Accepts the name or the numeric id as a string; nullptr when unknown.
const ProblemInfo* find_problem(const std::string& name_or_id);
// Throwing variant for code paths that already validated the name.
const ProblemInfo& problem_info(const std::string& name_or_id);

// Canonical parameter sets. Train parameters come from fixed internal seeds
// (never the run seed), test parameters from the stated grids or seeded
// draws, so every run and machine sees identical tasks.
std::vector<std::vector<double>> problem_parameter_sets(const ProblemInfo& info, Split split);

// Build one task: operator terms, constraint rows, collocation grids for the
// split, and oracle labels.  Grids are shared between tasks of the same
// problem/split so evaluators can reuse feature tables.
Task make_task(const ProblemInfo& info, const std::vector<double>& params, Split split);

// Full canonical sets, built once and cached.
const std::vector<Task>& problem_tasks(const ProblemInfo& info, Split split);

// Problem 2 time-marching restart: continuation task on t in [2,4] whose IC
// rows target `ic_values`, the stage-one prediction of u(x, 2) on the x-grid.
Task make_linear_family_restart_task(const std::vector<double>& params,
                                     const Eigen::VectorXd& ic_values);

// ---------------------------------------------------------------------------
// Ground-truth oracles.  All pure; values are n_points x n_outputs.

// Problems 1, 3, 5, 8, 9, 10, 11 have stated exact solutions.
Eigen::MatrixXd oracle_closed_form(int problem_id, const std::vector<double>& params,
                                   const PointSet& pts);

// Problem 2: exact modal solution of the constant-coefficient operator (one
// forced complex ODE per source mode), plus an RK4 integration of the same
// modal ODEs used to cross-validate it.
Eigen::MatrixXd oracle_fourier_linear_family(const std::vector<double>& params,
                                             const PointSet& pts);
Eigen::MatrixXd oracle_fourier_linear_family_stepper(const std::vector<double>& params,
                                                     const PointSet& pts, double dt = 1e-4);

// Problem 4: fourth-order compact (Mehrstellen) finite differences on a fine
// tensor grid, solved exactly by discrete sine transform; bilinear off-grid.
Eigen::MatrixXd oracle_poisson_fd(const std::vector<double>& params, const PointSet& pts);

// Problem 7: Cole-Hopf quotient evaluated by Gauss-Hermite quadrature with
// node doubling until convergence, plus the conservative finite-difference
// reference used to cross-validate it (and as fallback).
Eigen::MatrixXd oracle_burgers(const std::vector<double>& params, const PointSet& pts);
Eigen::MatrixXd oracle_burgers_fd(const std::vector<double>& params, const PointSet& pts,
                                  int nx = 2049);

// Problem 6: RK4 on the first-order system, landing exactly on grid times.
Eigen::MatrixXd oracle_kinematics_rk4(const std::vector<double>& params, const PointSet& pts,
                                      double dt = 1e-4);

// Manufactured right-hand side q for problems with stated exact solutions
// (3, 5, 8, 9, 10, 11): the exact solution pushed through the operator.
double manufactured_source(int problem_id, const std::vector<double>& params, const double* pt);

// No-drag return-to-ground time defining the kinematics grid horizon.
double kinematics_horizon(double a0_deg, double vel0);

}  // namespace bpinn

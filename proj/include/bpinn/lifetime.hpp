#pragma once
#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "bpinn/basis.hpp"

namespace bpinn {

// Previous-iterate view handed to lagged coefficients, one point at a time.
struct LagView {
  const double* values = nullptr;  // per head
  const double* grads = nullptr;   // per head x input dim, head-major
  int n_heads = 1;
  int n_input = 1;
  double value(int head = 0) const { return values[head]; }
  double grad(int head, int d) const { return grads[head * n_input + d]; }
};

// One differential term c(x) * D^k u. Constant coefficients leave coeff_fn
// empty; that also enables Gram reuse across tasks that differ only in the
// constants.
struct OperatorTerm {
  std::vector<int> multi_index;
  double coeff = 1.0;
  std::function<double(const double* pt)> coeff_fn;
};

// Linearized nonlinear term: c(x, u_prev) * D^k u, re-evaluated every lag
// iteration at the previous solution.
struct LaggedTerm {
  std::vector<int> multi_index;
  std::function<double(const double* pt, const LagView&)> coeff;
};

// Rows enforcing an IC/BC: operator D^k at `points` (minus the same rows at
// `points2` for periodic difference constraints), equal to `targets`.
struct ConstraintSpec {
  PointSetPtr points;
  PointSetPtr points2;         // optional
  std::vector<int> multi_index;  // all-zero => value rows
  Eigen::MatrixXd targets;       // n_points x n_heads
};

struct Labels {
  PointSetPtr points;
  Eigen::MatrixXd values;  // n_points x n_heads
};

struct Task {
  int n_input = 1;
  int n_outputs = 1;
  PointSetPtr pde_points;
  std::vector<OperatorTerm> terms;
  std::vector<LaggedTerm> lagged_terms;
  // b contributions; head-dependent for multi-output tasks. Null => zero.
  std::function<double(int head, const double* pt)> source;
  std::function<double(int head, const double* pt, const LagView&)> lagged_source;
  std::vector<ConstraintSpec> constraints;
  Labels labels;
  bool nonlinear = false;
  int n_lag = 1;
  // True when the nonlinearity lives only in lagged_source: A is constant
  // across lag iterations, so one factorization serves all of them.
  bool operator_lag_free = false;
  // Tasks with the same nonzero key assemble the identical A for a given
  // (layer, row weight); evaluators reuse the factorization.
  std::uint64_t system_key = 0;
  bool needs_lag_grads = false;
  int task_id = 0;
  std::vector<double> param_values;  // for reports, aligned with problem names
};

// Assembled collocation system; output heads share A (their operators are
// identical in every problem here) and differ in b columns.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd b;  // n_rows x n_heads
};

struct Solution {
  Eigen::MatrixXd w;  // n_neuron x n_heads
  double lse = 0.0;
  double mse = 0.0;
  std::vector<double> lag_history;  // LSE per lag iteration
};

// Previous-iterate predictions on the PDE grid, input to assemble().
struct LagField {
  Eigen::MatrixXd values;              // n_pde x n_heads
  std::vector<Eigen::MatrixXd> grads;  // per input dim
  bool empty() const { return values.size() == 0; }
};

// Reference assembly of the ridge system (one lag iterate). lag == nullptr means the
// zero initial guess.
LinearSystem assemble(const Task& task, const HiddenLayer& layer,
                      const LagField* lag, double row_weight_icbc);

// Minimizer of ||Aw-b||^2 + lambda ||w||^2. Normal equations + Cholesky,
// dual form when rows < cols, min-norm/orthogonal fallback on breakdown.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            double lambda);
Eigen::MatrixXd solve_ridge_multi(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B, double lambda);
// Independent SVD route, used as the oracle in tests and acceptance.
Eigen::VectorXd solve_ridge_svd(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b, double lambda);

double compute_lse(const LinearSystem& sys, const Eigen::MatrixXd& w);
double compute_mse(const Task& task, const HiddenLayer& layer,
                   const Eigen::MatrixXd& w);

struct LearnOptions {
  int n_lag_override = -1;   // <0: task.n_lag
  double lag_exit_tol = -1;  // >=0: stop lagging once |dLSE| < tol
};

// Per-(layer, lambda, row weight) evaluator. Amortizes feature tables, Gram
// matrices, and factorizations across a batch of tasks; one instance per
// fitness evaluation or per eval split.
class BatchEvaluator {
 public:
  BatchEvaluator(const HiddenLayer& layer, double lambda, double row_weight);
  ~BatchEvaluator();
  Solution learn(const Task& task, const LearnOptions& opts = {});

  const HiddenLayer& layer() const { return *layer_; }
  double lambda() const { return lambda_; }
  double row_weight() const { return row_weight_; }

  struct Impl;  // opaque; helpers in lifetime.cpp take it by reference

 private:
  const HiddenLayer* layer_;
  double lambda_;
  double row_weight_;
  std::unique_ptr<Impl> impl_;
};

// Lifetime learning for a single task.
Solution lifetime_learn(const Task& task, const HiddenLayer& layer,
                        double lambda, double row_weight_icbc,
                        const LearnOptions& opts = {});

}  // namespace bpinn

#pragma once
#include <Eigen/Core>
#include <array>
#include <memory>
#include <vector>

#include "bpinn/genome.hpp"

namespace bpinn {

// Collocation points, one row per point. Tasks hold these behind shared_ptr so
// evaluators can key caches on object identity (equal pointer => equal grid).
struct PointSet {
  Eigen::MatrixXd p;  // n_points x n_input
  int size() const { return static_cast<int>(p.rows()); }
  int dim() const { return static_cast<int>(p.cols()); }
};
using PointSetPtr = std::shared_ptr<const PointSet>;

PointSetPtr make_points(Eigen::MatrixXd coords);

// phi^(order)(y) for one activation; order 0..3. Closed forms:
//   sin cycles (sin, cos, -sin, -cos)
//   softplus' = sigma, '' = sigma(1-sigma), ''' = sigma(1-sigma)(1-2 sigma)
//   tanh'     = 1-T^2, '' = -2T(1-T^2),     ''' = -2(1-T^2)(1-3T^2)
double activation_derivative(Activation kind, int order, double y);

// Maximum derivative order we ever need (3rd-order dispersion term).
inline constexpr int kMaxOrder = 3;

// Per-(layer, point set) evaluation cache. Builds the pre-activations once and
// the order tables phi^(o)(Y) on demand; a derivative matrix for multi-index k
// is then phi^(|k|) column-scaled by prod_d w_{j,d}^{k_d}.
class FeatureTables {
 public:
  FeatureTables(const HiddenLayer& layer, PointSetPtr pts);

  const Eigen::MatrixXd& order_table(int order) const;
  // entry (i,j) = d^|k| phi(w_j.p_i + b_j) / dp^k
  Eigen::MatrixXd derivative(const std::vector<int>& multi_index) const;
  // column scale vector prod_d w_{j,d}^{k_d} for a multi-index
  Eigen::VectorXd column_scale(const std::vector<int>& multi_index) const;

  const HiddenLayer& layer() const { return *layer_; }
  const PointSet& points() const { return *pts_; }
  int n_points() const { return pts_->size(); }
  int n_neurons() const { return layer_->n_total(); }

 private:
  const HiddenLayer* layer_;
  PointSetPtr pts_;
  Eigen::MatrixXd y_;  // pre-activations, n_points x n_total
  mutable std::array<Eigen::MatrixXd, kMaxOrder + 1> table_;
  mutable std::array<bool, kMaxOrder + 1> built_{};
};

// One-shot wrappers for callers that do not reuse a table.
Eigen::MatrixXd eval_features(const HiddenLayer& layer, const PointSet& pts);
Eigen::MatrixXd eval_derivative(const HiddenLayer& layer, const PointSet& pts,
                                const std::vector<int>& multi_index);

}  // namespace bpinn

#include "bpinn/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace bpinn {

PointSetPtr make_points(Eigen::MatrixXd coords) {
  auto ps = std::make_shared<PointSet>();
  ps->p = std::move(coords);
  return ps;
}

namespace {

// Overflow-free softplus pieces: e = exp(-|y|), sigma = logistic(y).
inline void softplus_parts(double y, double& value, double& sigma) {
  const double e = std::exp(-std::abs(y));
  value = std::max(y, 0.0) + std::log1p(e);
  sigma = (y >= 0.0) ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

}  // namespace

double activation_derivative(Activation kind, int order, double y) {
  if (order < 0 || order > kMaxOrder)
    throw std::invalid_argument("activation derivative order " +
                                std::to_string(order) + " unsupported (max 3)");
  switch (kind) {
    case Activation::Sin:
      switch (order) {
        case 0: return std::sin(y);
        case 1: return std::cos(y);
        case 2: return -std::sin(y);
        default: return -std::cos(y);
      }
    case Activation::Softplus: {
      double v, s;
      softplus_parts(y, v, s);
      switch (order) {
        case 0: return v;
        case 1: return s;
        case 2: return s * (1.0 - s);
        default: return s * (1.0 - s) * (1.0 - 2.0 * s);
      }
    }
    case Activation::Tanh:
    default: {
      const double t = std::tanh(y);
      const double u = 1.0 - t * t;
      switch (order) {
        case 0: return t;
        case 1: return u;
        case 2: return -2.0 * t * u;
        default: return -2.0 * u * (1.0 - 3.0 * t * t);
      }
    }
  }
}

FeatureTables::FeatureTables(const HiddenLayer& layer, PointSetPtr pts)
    : layer_(&layer), pts_(std::move(pts)) {
  if (pts_->dim() != layer.n_input)
    throw std::invalid_argument("point dimension " + std::to_string(pts_->dim()) +
                                " != layer n_input " +
                                std::to_string(layer.n_input));
  y_.noalias() = pts_->p * layer.weights.transpose();
  y_.rowwise() += layer.biases.transpose();
}

const Eigen::MatrixXd& FeatureTables::order_table(int order) const {
  if (order < 0 || order > kMaxOrder)
    throw std::invalid_argument("derivative order " + std::to_string(order) +
                                " unsupported (max 3)");
  if (built_[order]) return table_[order];
  const Eigen::Index n = y_.rows();
  const int npb = layer_->n_neuron_per_block;
  Eigen::MatrixXd& t = table_[order];
  t.resize(n, y_.cols());
  // Hot loop: one transcendental evaluation per entry, column-major.
  for (int b = 0; b < kNumBlocks; ++b) {
    const Activation kind = kBlockActivation[b];
    for (Eigen::Index j = (Eigen::Index)b * npb; j < (Eigen::Index)(b + 1) * npb; ++j) {
      const double* y = y_.col(j).data();
      double* out = t.col(j).data();
      switch (kind) {
        case Activation::Sin:
          if (order == 0)
            for (Eigen::Index i = 0; i < n; ++i) out[i] = std::sin(y[i]);
          else if (order == 1)
            for (Eigen::Index i = 0; i < n; ++i) out[i] = std::cos(y[i]);
          else if (order == 2)
            for (Eigen::Index i = 0; i < n; ++i) out[i] = -std::sin(y[i]);
          else
            for (Eigen::Index i = 0; i < n; ++i) out[i] = -std::cos(y[i]);
          break;
        case Activation::Softplus:
          for (Eigen::Index i = 0; i < n; ++i) {
            double v, s;
            softplus_parts(y[i], v, s);
            out[i] = (order == 0)   ? v
                     : (order == 1) ? s
                     : (order == 2) ? s * (1.0 - s)
                                    : s * (1.0 - s) * (1.0 - 2.0 * s);
          }
          break;
        case Activation::Tanh:
          for (Eigen::Index i = 0; i < n; ++i) {
            const double T = std::tanh(y[i]);
            const double u = 1.0 - T * T;
            out[i] = (order == 0)   ? T
                     : (order == 1) ? u
                     : (order == 2) ? -2.0 * T * u
                                    : -2.0 * u * (1.0 - 3.0 * T * T);
          }
          break;
      }
    }
  }
  built_[order] = true;
  return t;
}

Eigen::VectorXd FeatureTables::column_scale(const std::vector<int>& k) const {
  const Eigen::Index ntot = layer_->n_total();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(ntot);
  for (int d = 0; d < (int)k.size(); ++d) {
    for (int rep = 0; rep < k[d]; ++rep)
      scale.array() *= layer_->weights.col(d).array();
  }
  return scale;
}

Eigen::MatrixXd FeatureTables::derivative(const std::vector<int>& k) const {
  if ((int)k.size() != layer_->n_input)
    throw std::invalid_argument("multi-index length " + std::to_string(k.size()) +
                                " != n_input " + std::to_string(layer_->n_input));
  int total = 0;
  for (int kd : k) {
    if (kd < 0) throw std::invalid_argument("negative multi-index entry");
    total += kd;
  }
  if (total > kMaxOrder)
    throw std::invalid_argument("derivative order " + std::to_string(total) +
                                " unsupported (max 3)");
  const Eigen::MatrixXd& phi = order_table(total);
  if (total == 0) return phi;
  return phi * column_scale(k).asDiagonal();
}

Eigen::MatrixXd eval_features(const HiddenLayer& layer, const PointSet& pts) {
  auto copy = make_points(pts.p);
  return FeatureTables(layer, copy).order_table(0);
}

Eigen::MatrixXd eval_derivative(const HiddenLayer& layer, const PointSet& pts,
                                const std::vector<int>& multi_index) {
  auto copy = make_points(pts.p);
  return FeatureTables(layer, copy).derivative(multi_index);
}

}  // namespace bpinn

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <stdexcept>

#include "bpinn/lifetime.hpp"

namespace bpinn {

namespace {

// Minimum-norm least squares via complete orthogonal decomposition; the
// fallback for singular normal matrices (lambda == 0 with rank-deficient A)
// and for Cholesky breakdowns.
Eigen::MatrixXd solve_min_norm(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B, double lambda) {
  if (lambda <= 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    return cod.solve(B);
  }
  // Ridge as a stacked least-squares problem [A; sqrt(lambda) I] w = [b; 0];
  // always full column rank, so COD is safe.
  const Eigen::Index m = A.rows(), n = A.cols();
  Eigen::MatrixXd stacked(m + n, n);
  stacked.topRows(m) = A;
  stacked.bottomRows(n) =
      std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + n, B.cols());
  rhs.topRows(m) = B;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(stacked);
  return cod.solve(rhs);
}

}  // namespace

Eigen::MatrixXd solve_ridge_multi(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("solve_ridge: lambda < 0");
  if (A.rows() != B.rows())
    throw std::invalid_argument("solve_ridge: A/b row mismatch");
  const Eigen::Index m = A.rows(), n = A.cols();
  if (m >= n) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    M.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
    M.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(M.selfadjointView<Eigen::Lower>());
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd w = llt.solve(A.transpose() * B);
      if (w.allFinite()) return w;
    }
    return solve_min_norm(A, B, lambda);
  }
  // Wide system: (lambda I + A A^T) z = b, w = A^T z. Same minimizer, and the
  // residual identity Aw - b = -lambda z makes the LSE cheap for callers.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  M.selfadjointView<Eigen::Lower>().rankUpdate(A);
  M.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(M.selfadjointView<Eigen::Lower>());
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd w = A.transpose() * llt.solve(B);
    if (w.allFinite()) return w;
  }
  return solve_min_norm(A, B, lambda);
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            double lambda) {
  return solve_ridge_multi(A, b, lambda).col(0);
}

Eigen::VectorXd solve_ridge_svd(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b, double lambda) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  Eigen::VectorXd scaled(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double den = s[i] * s[i] + lambda;
    // lambda == 0 with a (numerically) zero singular value: min-norm solution
    // zeroes that direction.
    scaled[i] = (den > s[0] * s[0] * 1e-28) ? s[i] * utb[i] / den : 0.0;
  }
  return svd.matrixV() * scaled;
}

}  // namespace bpinn

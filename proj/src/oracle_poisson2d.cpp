#include <cmath>
#include <map>
#include <mutex>

#include "bpinn/problems.hpp"
#include "problem_functions.hpp"

namespace bpinn {
namespace detail {
namespace {

// S(m-1, i-1) = sin(m i pi / M); symmetric, S * S = (M/2) I
const Eigen::MatrixXd& sine_matrix(int M) {
    static std::map<int, Eigen::MatrixXd> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(M);
    if (it == cache.end()) {
        Eigen::MatrixXd S(M - 1, M - 1);
        for (int m = 1; m < M; ++m)
            for (int i = 1; i < M; ++i) S(m - 1, i - 1) = std::sin(m * i * kPi / M);
        it = cache.emplace(M, std::move(S)).first;
    }
    return it->second;
}

}  // namespace

Eigen::MatrixXd poisson_dst_solve(const std::function<double(double, double)>& q,
                                  const std::function<double(double, double)>& laplace_q,
                                  int m_cells, const PointSet& pts) {
    const int M = m_cells;
    const double h = 2.0 / M;

    // compact-scheme right-hand side at the interior nodes
    Eigen::MatrixXd R(M - 1, M - 1);
    for (int i = 1; i < M; ++i) {
        const double x = -1.0 + i * h;
        for (int j = 1; j < M; ++j) {
            const double y = -1.0 + j * h;
            R(i - 1, j - 1) = q(x, y) + h * h / 12.0 * laplace_q(x, y);
        }
    }

    // diagonalize: the 9-point stencil acts on the sine mode (m,n) as
    // (20 - 8 cos(m pi/M) - 8 cos(n pi/M) - 4 cos cos) / (6 h^2)
    const Eigen::MatrixXd& S = sine_matrix(M);
    Eigen::MatrixXd hat = S * R * S;
    const double norm = (M / 2.0) * (M / 2.0);
    for (int m = 1; m < M; ++m) {
        const double cm = std::cos(m * kPi / M);
        for (int n = 1; n < M; ++n) {
            const double cn = std::cos(n * kPi / M);
            const double lam = (20.0 - 8.0 * cm - 8.0 * cn - 4.0 * cm * cn) / (6.0 * h * h);
            hat(m - 1, n - 1) /= lam * norm;
        }
    }
    const Eigen::MatrixXd U = S * hat * S;

    auto node = [&](long i, long j) -> double {
        if (i <= 0 || i >= M || j <= 0 || j >= M) return 0.0;  // Dirichlet rim
        return U(i - 1, j - 1);
    };

    Eigen::MatrixXd out(pts.size(), 1);
    for (Eigen::Index r = 0; r < pts.p.rows(); ++r) {
        const double gx = (pts.p(r, 0) + 1.0) / h;
        const double gy = (pts.p(r, 1) + 1.0) / h;
        const long i0 = std::lround(gx), j0 = std::lround(gy);
        if (std::abs(gx - i0) < 1e-9 && std::abs(gy - j0) < 1e-9) {
            out(r, 0) = node(i0, j0);
            continue;
        }
        // off-grid query: bilinear between the surrounding nodes
        long i = std::max(0L, std::min<long>(M - 1, static_cast<long>(std::floor(gx))));
        long j = std::max(0L, std::min<long>(M - 1, static_cast<long>(std::floor(gy))));
        const double tx = gx - i, ty = gy - j;
        out(r, 0) = (1 - tx) * (1 - ty) * node(i, j) + tx * (1 - ty) * node(i + 1, j) +
                    (1 - tx) * ty * node(i, j + 1) + tx * ty * node(i + 1, j + 1);
    }
    return out;
}

}  // namespace detail

Eigen::MatrixXd oracle_poisson_fd(const std::vector<double>& params, const PointSet& pts) {
    const detail::GaussianSources gs = detail::GaussianSources::parse(params);
    return detail::poisson_dst_solve(
        [&gs](double x, double y) { return gs.q(x, y); },
        [&gs](double x, double y) { return gs.laplacian_q(x, y); }, 512, pts);
}

}  // namespace bpinn

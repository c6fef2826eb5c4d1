#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "bpinn/lifetime.hpp"
#include "bpinn/rng.hpp"
#include "test_util.hpp"

using namespace bpinn;

TEST_SUITE("ridge") {

TEST_CASE("normal-equation and svd routes agree at every lambda") {
    for (int k = 0; k < 12; ++k) {
        Rng rng(stream_key(500, k));
        const int m = 10 + static_cast<int>(rng.below(150));
        const int n = 5 + static_cast<int>(rng.below(100));
        const Eigen::MatrixXd a = testutil::random_matrix(m, n, 100 + k);
        const Eigen::VectorXd b = testutil::random_matrix(m, 1, 200 + k);
        for (double lambda : {0.0, 1e-6, 1e-2}) {
            const Eigen::VectorXd w = solve_ridge(a, b, lambda);
            const Eigen::VectorXd ws = solve_ridge_svd(a, b, lambda);
            CHECK((w - ws).norm() <= 1e-8 * std::max(1.0, ws.norm()));
            // never worse than the zero competitor
            const double obj = (a * w - b).squaredNorm() + lambda * w.squaredNorm();
            CHECK(obj <= b.squaredNorm() * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("multi right-hand sides match column-by-column solves") {
    const Eigen::MatrixXd a = testutil::random_matrix(60, 25, 7);
    const Eigen::MatrixXd b = testutil::random_matrix(60, 3, 8);
    const Eigen::MatrixXd w = solve_ridge_multi(a, b, 1e-4);
    REQUIRE(w.rows() == 25);
    REQUIRE(w.cols() == 3);
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd wc = solve_ridge(a, b.col(c), 1e-4);
        CHECK((w.col(c) - wc).norm() <= 1e-10 * std::max(1.0, wc.norm()));
    }
}

TEST_CASE("wide systems interpolate with the minimum-norm solution") {
    const Eigen::MatrixXd a = testutil::random_matrix(30, 80, 9);
    const Eigen::VectorXd b = testutil::random_matrix(30, 1, 10);
    const Eigen::VectorXd w = solve_ridge(a, b, 0.0);
    CHECK((a * w - b).norm() <= 1e-9 * b.norm());  // full row rank: exact fit
    const Eigen::VectorXd ws = solve_ridge_svd(a, b, 0.0);
    CHECK((w - ws).norm() <= 1e-8 * std::max(1.0, ws.norm()));
}

TEST_CASE("exact rank deficiency falls back to a finite solution") {
    Eigen::MatrixXd a = testutil::random_matrix(40, 20, 11);
    a.col(7) = a.col(3);  // kill one direction
    a.col(15).setZero();
    const Eigen::VectorXd b = testutil::random_matrix(40, 1, 12);
    const Eigen::VectorXd w = solve_ridge(a, b, 0.0);
    REQUIRE(w.allFinite());
    const Eigen::VectorXd ws = solve_ridge_svd(a, b, 0.0);
    CHECK((a * w - b).norm() <= (a * ws - b).norm() * (1.0 + 1e-10));
    CHECK((w - ws).norm() <= 1e-6 * std::max(1.0, ws.norm()));
}

TEST_CASE("regularization shrinks the solution monotonically") {
    const Eigen::MatrixXd a = testutil::random_matrix(90, 40, 13);
    const Eigen::VectorXd b = testutil::random_matrix(90, 1, 14);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
        const double norm = solve_ridge(a, b, lambda).norm();
        CHECK(norm <= prev * (1.0 + 1e-12));
        prev = norm;
    }
}

TEST_CASE("the unregularized residual is orthogonal to the range") {
    const Eigen::MatrixXd a = testutil::random_matrix(120, 35, 15);
    const Eigen::VectorXd b = testutil::random_matrix(120, 1, 16);
    const Eigen::VectorXd w = solve_ridge(a, b, 0.0);
    CHECK((a.transpose() * (a * w - b)).norm() <= 1e-8 * (a.transpose() * b).norm());
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpinn/problems.hpp"
#include "problem_functions.hpp"
#include "test_util.hpp"

using namespace bpinn;

namespace {

constexpr double kPi = 3.14159265358979323846;

PointSetPtr single(double x, double y) {
    Eigen::MatrixXd c(1, 2);
    c << x, y;
    return make_points(std::move(c));
}

Eigen::MatrixXd grid2(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
    Eigen::MatrixXd c(xs.size() * ys.size(), 2);
    int r = 0;
    for (int j = 0; j < ys.size(); ++j)
        for (int i = 0; i < xs.size(); ++i) c.row(r++) << xs(i), ys(j);
    return c;
}

}  // namespace

TEST_SUITE("oracles") {

TEST_CASE("convection-diffusion boundary layer values") {
    Eigen::MatrixXd c(4, 1);
    c << 0.0, 0.5, 1.0, 0.25;
    const PointSet pts{c};
    const Eigen::MatrixXd u = oracle_closed_form(1, {10.0}, pts);
    CHECK(u(0, 0) == 0.0);
    CHECK(u(1, 0) == doctest::Approx(std::expm1(5.0) / std::expm1(10.0)).epsilon(1e-14));
    CHECK(u(2, 0) == 1.0);

    // the vanishing-advection limit is the straight line u = x
    const Eigen::MatrixXd lin = oracle_closed_form(1, {1e-9}, pts);
    CHECK(lin(1, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(lin(3, 0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("helmholtz closed form hits the stated center value") {
    const Eigen::MatrixXd u = oracle_closed_form(5, {1.0, 1.0}, *single(0.5, 0.5));
    CHECK(u(0, 0) == doctest::Approx(1.0 - 2.0 * kPi * kPi).epsilon(1e-14));
}

TEST_CASE("poisson solver reproduces a manufactured sine solution") {
    // -lap(u) = q with u = sin(pi x) sin(pi y): q = 2 pi^2 u, lap(q) = -4 pi^4 u
    auto ss = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
    auto q = [&](double x, double y) { return 2.0 * kPi * kPi * ss(x, y); };
    auto lap_q = [&](double x, double y) { return -4.0 * kPi * kPi * kPi * kPi * ss(x, y); };

    Eigen::MatrixXd c(5, 2);  // nodes of the 256-cell grid
    c << -1.0 + 2.0 * 64 / 256, -1.0 + 2.0 * 64 / 256, 0.0, -1.0 + 2.0 * 96 / 256,
        -1.0 + 2.0 * 192 / 256, -1.0 + 2.0 * 32 / 256, -1.0 + 2.0 * 10 / 256, -1.0 + 2.0 * 250 / 256,
        0.5, 0.5;
    const PointSet pts{c};
    const Eigen::MatrixXd u = detail::poisson_dst_solve(q, lap_q, 256, pts);
    for (int i = 0; i < pts.size(); ++i)
        CHECK(u(i, 0) == doctest::Approx(ss(c(i, 0), c(i, 1))).epsilon(1e-8));
}

TEST_CASE("poisson solver is self-convergent on a gaussian source") {
    std::vector<double> params(41, 0.0);
    params[0] = 1.0;
    params[1] = 0.2;   // center x
    params[11] = -0.1;  // center y
    params[21] = 1.3;  // amplitude
    params[31] = 0.01;  // width
    const detail::GaussianSources gs = detail::GaussianSources::parse(params);
    auto q = [&](double x, double y) { return gs.q(x, y); };
    auto lq = [&](double x, double y) { return gs.laplacian_q(x, y); };

    // nodes shared by the 256- and 512-cell grids
    Eigen::MatrixXd c(4, 2);
    c << 0.25, 0.25, -0.5, 0.125, 0.203125, -0.09375, 0.0, 0.0;
    const PointSet pts{c};
    const Eigen::MatrixXd coarse = detail::poisson_dst_solve(q, lq, 256, pts);
    const Eigen::MatrixXd fine = detail::poisson_dst_solve(q, lq, 512, pts);
    CHECK((coarse - fine).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(fine.cwiseAbs().maxCoeff() > 1e-4);  // the probe is not trivially zero
}

TEST_CASE("poisson oracle vanishes with the source and replays exactly") {
    std::vector<double> zero(41, 0.0);
    zero[0] = 1.0;
    zero[31] = 0.01;  // keep the width valid, amplitude zero
    Eigen::MatrixXd c = 0.8 * testutil::random_matrix(5, 2, 40);
    const PointSet pts{c};
    CHECK(oracle_poisson_fd(zero, pts).cwiseAbs().maxCoeff() == 0.0);

    const ProblemInfo& info = problem_info("poisson-2d");
    const auto params = problem_parameter_sets(info, Split::Train);
    const Eigen::MatrixXd a = oracle_poisson_fd(params[0], pts);
    const Eigen::MatrixXd b = oracle_poisson_fd(params[0], pts);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear family modal solution agrees with time stepping") {
    const ProblemInfo& info = problem_info("linear-pde-family");
    const auto sets = problem_parameter_sets(info, Split::Train);
    // first draw of the (0, 0) combo and one with both gamma and delta active
    for (size_t idx : {size_t{0}, size_t{8 * 12}}) {
        CAPTURE(idx);
        const std::vector<double>& params = sets[idx];
        Eigen::MatrixXd c(40, 2);
        Rng rng(stream_key(0x0DDull, idx));
        for (int i = 0; i < 40; ++i) c.row(i) << rng.u01(), 2.0 * rng.u01();
        const PointSet pts{c};
        const Eigen::MatrixXd modal = oracle_fourier_linear_family(params, pts);
        const Eigen::MatrixXd stepped = oracle_fourier_linear_family_stepper(params, pts);
        CHECK((modal - stepped).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("resonant forcing stays on the modal solution") {
    // one mode, gamma = delta = 0, omega = -kappa: the denominator of the
    // naive particular solution vanishes and the response grows like (1+t)
    const double kappa = 2.0 * kPi / 6.0;
    std::vector<double> params(22, 0.0);
    params[2] = 1.0;       // A1
    params[7] = -kappa;    // omega1
    params[12] = 1.0;      // l1
    params[17] = 0.0;      // phi1

    Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(21, 0.0, 1.0);
    Eigen::MatrixXd c0 = grid2(xs, Eigen::VectorXd::Constant(1, 0.0));
    Eigen::MatrixXd c2 = grid2(xs, Eigen::VectorXd::Constant(1, 2.0));
    const Eigen::MatrixXd u0 = oracle_fourier_linear_family(params, PointSet{c0});
    const Eigen::MatrixXd u2 = oracle_fourier_linear_family(params, PointSet{c2});
    CHECK(u2.cwiseAbs().maxCoeff() > 2.5 * u0.cwiseAbs().maxCoeff());

    Eigen::MatrixXd cm(30, 2);
    Rng rng(stream_key(0x0DDull, 77));
    for (int i = 0; i < 30; ++i) cm.row(i) << rng.u01(), 2.0 * rng.u01();
    const PointSet pts{cm};
    const Eigen::MatrixXd modal = oracle_fourier_linear_family(params, pts);
    const Eigen::MatrixXd stepped = oracle_fourier_linear_family_stepper(params, pts);
    CHECK((modal - stepped).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("zero forcing propagates zero") {
    std::vector<double> params(22, 0.0);
    params[0] = 1e-3;  // gamma only; all amplitudes zero
    Eigen::MatrixXd c(6, 2);
    c << 0.1, 0.2, 0.5, 1.0, 0.9, 1.7, 0.0, 0.0, 1.0, 2.0, 0.3, 0.6;
    CHECK(oracle_fourier_linear_family(params, PointSet{c}).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kinematics without drag matches the closed form") {
    const std::vector<double> params = {30.0, 40.0, 0.0, 0.01, 0.2};
    const double vx = 40.0 * std::cos(kPi / 6.0), vy = 20.0;
    Eigen::MatrixXd c(5, 1);
    c << 0.0, 1.0, 2.0, 3.0, kinematics_horizon(30.0, 40.0);
    const PointSet pts{c};
    const Eigen::MatrixXd u = oracle_kinematics_rk4(params, pts);
    for (int i = 0; i < pts.size(); ++i) {
        const double t = c(i, 0);
        CHECK(u(i, 0) == doctest::Approx(vx * t).epsilon(1e-10));
        CHECK(u(i, 1) == doctest::Approx(vy * t - 4.9 * t * t).epsilon(1e-10));
    }
    CHECK(u(4, 1) == doctest::Approx(0.0).epsilon(1e-9));  // lands at the horizon

    Eigen::MatrixXd bad(1, 1);
    bad << -0.5;
    CHECK_THROWS(oracle_kinematics_rk4(params, PointSet{bad}));
}

TEST_CASE("kinematics integration is step-size converged with drag") {
    const std::vector<double> params = {45.0, 50.0, 0.5, 0.01, 0.2};
    Eigen::MatrixXd c(3, 1);
    c << 1.0, 3.0, 6.5;
    const PointSet pts{c};
    const Eigen::MatrixXd ref = oracle_kinematics_rk4(params, pts, 2.5e-5);
    const Eigen::MatrixXd a = oracle_kinematics_rk4(params, pts, 4e-4);
    const Eigen::MatrixXd b = oracle_kinematics_rk4(params, pts, 1e-4);
    CHECK((a - ref).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((b - ref).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(ref.cwiseAbs().maxCoeff() > 10.0);  // meters-scale trajectory
}

TEST_CASE("burgers initial data, walls, and odd symmetry") {
    const std::vector<double> params = {0.01};
    Eigen::MatrixXd c(4, 2);
    c << -0.3, 0.0, 0.7, 0.0, -1.0, 0.5, 1.0, 0.25;
    const PointSet pts{c};
    const Eigen::MatrixXd u = oracle_burgers(params, pts);
    CHECK(u(0, 0) == doctest::Approx(-std::sin(-0.3 * kPi)).epsilon(1e-12));
    CHECK(u(1, 0) == doctest::Approx(-std::sin(0.7 * kPi)).epsilon(1e-12));
    CHECK(u(2, 0) == 0.0);
    CHECK(u(3, 0) == 0.0);

    const Eigen::MatrixXd up = oracle_burgers(params, *single(0.37, 0.3));
    const Eigen::MatrixXd um = oracle_burgers(params, *single(-0.37, 0.3));
    CHECK(up(0, 0) == doctest::Approx(-um(0, 0)).epsilon(1e-9));
    CHECK(std::abs(up(0, 0)) > 0.01);

    // near the forming shock the value is finite and bounded by the data
    const Eigen::MatrixXd shock = oracle_burgers(params, *single(0.002, 0.95));
    CHECK(std::isfinite(shock(0, 0)));
    CHECK(std::abs(shock(0, 0)) <= 1.0001);
}

TEST_CASE("cole-hopf agrees with conservative finite differences") {
    const std::vector<double> params = {5e-2};
    Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(13, -0.9, 0.9);
    Eigen::VectorXd ts(3);
    ts << 0.3, 0.65, 1.0;
    const PointSet pts{grid2(xs, ts)};
    const Eigen::MatrixXd ch = oracle_burgers(params, pts);
    const Eigen::MatrixXd fd = oracle_burgers_fd(params, pts);
    CHECK((ch - fd).cwiseAbs().maxCoeff() <= 1e-5);
}

}  // TEST_SUITE

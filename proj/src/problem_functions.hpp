#pragma once

// Closed-form solutions, manufactured sources, and task-parameter records
// shared between the problem definitions and their oracles.  Private to the
// library; everything here is a pure function of (params, point).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace bpinn {
namespace detail {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.8;
inline constexpr double kAirDensity = 1.3;

// --- problem 1: alpha u' - u'' = 0, u(0)=0, u(1)=1 => (e^{ax}-1)/(e^a-1)
inline double p1_exact(double alpha, double x) {
    if (std::abs(alpha) < 1e-12) return x;  // pure-diffusion limit
    return std::expm1(alpha * x) / std::expm1(alpha);
}

// --- problem 2: u_t + u_x - gamma u_xx + delta u_xxx = q, periodic in x
// params layout: [gamma, delta, A1..A5, omega1..5, l1..5, phi1..5]
struct LinearFamilyParams {
    double gamma = 0.0;
    double delta = 0.0;
    double amp[5] = {};
    double omega[5] = {};
    int wavenum[5] = {};
    double phase[5] = {};

    static LinearFamilyParams parse(const std::vector<double>& p) {
        if (p.size() != 22) throw std::invalid_argument("linear family: expected 22 parameters");
        LinearFamilyParams out;
        out.gamma = p[0];
        out.delta = p[1];
        for (int j = 0; j < 5; ++j) {
            out.amp[j] = p[2 + j];
            out.omega[j] = p[7 + j];
            out.wavenum[j] = static_cast<int>(std::lround(p[12 + j]));
            out.phase[j] = p[17 + j];
        }
        return out;
    }
    double kappa(int j) const { return 2.0 * kPi * wavenum[j] / 6.0; }
    double source(double x, double t) const {
        double q = 0.0;
        for (int j = 0; j < 5; ++j) q += amp[j] * std::sin(omega[j] * t + kappa(j) * x + phase[j]);
        return q;
    }
};

// --- problem 3: u'' = q with u = a1 sin(w1 x) + a2 sin(w2 x) - a3 x + a4
// params layout: [alpha1..alpha4, omega1, omega2]
inline double p3_exact(const std::vector<double>& p, double x) {
    return p[0] * std::sin(p[4] * x) + p[1] * std::sin(p[5] * x) - p[2] * x + p[3];
}
inline double p3_source(const std::vector<double>& p, double x) {
    return -p[0] * p[4] * p[4] * std::sin(p[4] * x) - p[1] * p[5] * p[5] * std::sin(p[5] * x);
}

// --- problem 4: -laplace(u) = q, Gaussian bump sources, zero boundary
// params layout: [J, a1..a10, b1..b10, c1..c10, d1..d10] (slots past J unused)
struct GaussianSources {
    int count = 0;
    double cx[10] = {};
    double cy[10] = {};
    double amp[10] = {};
    double width[10] = {};

    static GaussianSources parse(const std::vector<double>& p) {
        if (p.size() != 41) throw std::invalid_argument("poisson-2d: expected 41 parameters");
        GaussianSources out;
        out.count = static_cast<int>(std::lround(p[0]));
        if (out.count < 1 || out.count > 10)
            throw std::invalid_argument("poisson-2d: source count out of range");
        for (int j = 0; j < out.count; ++j) {
            out.cx[j] = p[1 + j];
            out.cy[j] = p[11 + j];
            out.amp[j] = p[21 + j];
            out.width[j] = p[31 + j];
        }
        return out;
    }
    double q(double x, double y) const {
        double s = 0.0;
        for (int j = 0; j < count; ++j) {
            const double r2 = (x - cx[j]) * (x - cx[j]) + (y - cy[j]) * (y - cy[j]);
            s += amp[j] * std::exp(-r2 / width[j]);
        }
        return s;
    }
    double laplacian_q(double x, double y) const {
        double s = 0.0;
        for (int j = 0; j < count; ++j) {
            const double d = width[j];
            const double r2 = (x - cx[j]) * (x - cx[j]) + (y - cy[j]) * (y - cy[j]);
            s += amp[j] * std::exp(-r2 / d) * (4.0 * r2 / (d * d) - 4.0 / d);
        }
        return s;
    }
};

// --- problem 5: laplace(u) + u = q with u = K sin(a1 pi x) sin(a2 pi y),
// K = 1 - (a1 pi)^2 - (a2 pi)^2, so q = K u = K^2 sin sin
inline double p5_gain(double a1, double a2) {
    return 1.0 - (a1 * kPi) * (a1 * kPi) - (a2 * kPi) * (a2 * kPi);
}
inline double p5_exact(double a1, double a2, double x, double y) {
    return p5_gain(a1, a2) * std::sin(a1 * kPi * x) * std::sin(a2 * kPi * y);
}
inline double p5_source(double a1, double a2, double x, double y) {
    const double k = p5_gain(a1, a2);
    return k * k * std::sin(a1 * kPi * x) * std::sin(a2 * kPi * y);
}

// --- problem 6: projectile with quadratic-speed drag
// params layout: [a0 (degrees), vel0, cd, area, mass]
struct KinematicsParams {
    double a0 = 45.0;
    double vel0 = 10.0;
    double cd = 0.0;
    double area = 0.0;
    double mass = 1.0;

    static KinematicsParams parse(const std::vector<double>& p) {
        if (p.size() != 5) throw std::invalid_argument("kinematics: expected 5 parameters");
        return {p[0], p[1], p[2], p[3], p[4]};
    }
    double vx0() const { return vel0 * std::cos(a0 * kPi / 180.0); }
    double vy0() const { return vel0 * std::sin(a0 * kPi / 180.0); }
    // R = drag() * |v|
    double drag() const { return 0.5 * kAirDensity * cd * area / mass; }
};

// --- problem 8: u_t - gamma u_xx + k tanh(u) = q
// u = k sin(pi x) exp(-pi k x^2) exp(-pi t^2)
inline double p8_exact(double gamma, double k, double x, double t) {
    (void)gamma;
    return k * std::sin(kPi * x) * std::exp(-kPi * k * x * x) * std::exp(-kPi * t * t);
}
inline double p8_source(double gamma, double k, double x, double t) {
    const double ex = std::exp(-kPi * k * x * x);
    const double et = std::exp(-kPi * t * t);
    const double s = std::sin(kPi * x);
    const double c = std::cos(kPi * x);
    const double u = k * s * ex * et;
    const double ut = -2.0 * kPi * t * u;
    // (sin(pi x) e^{-pi k x^2})'' worked out by hand
    const double fxx = ex * (-4.0 * kPi * kPi * k * x * c +
                             (4.0 * kPi * kPi * k * k * x * x - kPi * kPi - 2.0 * kPi * k) * s);
    const double uxx = k * et * fxx;
    return ut - gamma * uxx + k * std::tanh(u);
}

// --- problem 9: gamma laplace(u) + u (u^2 - 1) = q
// u = exp(-gamma (x + 0.7)) sin(pi x) sin(pi y)
inline double p9_exact(double gamma, double x, double y) {
    return std::exp(-gamma * (x + 0.7)) * std::sin(kPi * x) * std::sin(kPi * y);
}
inline double p9_source(double gamma, double x, double y) {
    const double e = std::exp(-gamma * (x + 0.7));
    const double sx = std::sin(kPi * x);
    const double cx = std::cos(kPi * x);
    const double sy = std::sin(kPi * y);
    const double u = e * sx * sy;
    const double uxx = e * ((gamma * gamma - kPi * kPi) * sx - 2.0 * gamma * kPi * cx) * sy;
    const double uyy = -kPi * kPi * u;
    return gamma * (uxx + uyy) + u * u * u - u;
}

// --- problem 10: gamma laplace(u) + k u^2 = q
// u = k sin(pi x) sin(pi y) exp(-gamma sqrt(k x^2 + y^2)); grids avoid the
// origin where the exponent kink lives
inline double p10_exact(double gamma, double k, double x, double y) {
    const double r = std::sqrt(k * x * x + y * y);
    return k * std::sin(kPi * x) * std::sin(kPi * y) * std::exp(-gamma * r);
}
inline double p10_source(double gamma, double k, double x, double y) {
    const double r = std::sqrt(k * x * x + y * y);
    const double rx = k * x / r;
    const double rxx = k / r - k * k * x * x / (r * r * r);
    const double ry = y / r;
    const double ryy = 1.0 / r - y * y / (r * r * r);
    const double e = std::exp(-gamma * r);
    const double sx = std::sin(kPi * x);
    const double cx = std::cos(kPi * x);
    const double sy = std::sin(kPi * y);
    const double cy = std::cos(kPi * y);
    const double u = k * sx * sy * e;
    const double uxx =
        k * sy * e * (-2.0 * gamma * kPi * rx * cx + (gamma * gamma * rx * rx - kPi * kPi - gamma * rxx) * sx);
    const double uyy =
        k * sx * e * (-2.0 * gamma * kPi * ry * cy + (gamma * gamma * ry * ry - kPi * kPi - gamma * ryy) * sy);
    return gamma * (uxx + uyy) + k * u * u;
}

// --- problem 11: laplace(u) + u (1 - u^2) = q
// u = a1 tanh(w1 x) tanh(w2 y) + a2 sin(w3 x) sin(w4 y)
// params layout: [alpha1, alpha2, omega1..omega4]
inline double p11_exact(const std::vector<double>& p, double x, double y) {
    return p[0] * std::tanh(p[2] * x) * std::tanh(p[3] * y) +
           p[1] * std::sin(p[4] * x) * std::sin(p[5] * y);
}
inline double p11_source(const std::vector<double>& p, double x, double y) {
    const double t1 = std::tanh(p[2] * x);
    const double t2 = std::tanh(p[3] * y);
    const double s3 = std::sin(p[4] * x);
    const double s4 = std::sin(p[5] * y);
    // tanh''(z) = -2 tanh(z) (1 - tanh(z)^2)
    const double txx = -2.0 * t1 * (1.0 - t1 * t1) * p[2] * p[2];
    const double tyy = -2.0 * t2 * (1.0 - t2 * t2) * p[3] * p[3];
    const double u = p[0] * t1 * t2 + p[1] * s3 * s4;
    const double uxx = p[0] * txx * t2 - p[1] * p[4] * p[4] * s3 * s4;
    const double uyy = p[0] * t1 * tyy - p[1] * p[5] * p[5] * s3 * s4;
    return uxx + uyy + u * (1.0 - u * u);
}

}  // namespace detail
}  // namespace bpinn

#include <Eigen/Core>
#include <functional>

namespace bpinn {
struct PointSet;
namespace detail {

// Compact 9-point (fourth-order) discretization of -laplace(u) = q on
// [-1,1]^2 with zero boundary, solved exactly in the discrete sine basis on an
// (m_cells+1)^2 grid. Needs laplace(q) analytically for the compact
// right-hand side. Grid-aligned query points get nodal values, others
// bilinear interpolation. Defined in oracle_poisson2d.cpp; exposed so tests
// can run manufactured solutions and resolution studies through it.
Eigen::MatrixXd poisson_dst_solve(const std::function<double(double, double)>& q,
                                  const std::function<double(double, double)>& laplace_q,
                                  int m_cells, const PointSet& pts);

}  // namespace detail
}  // namespace bpinn

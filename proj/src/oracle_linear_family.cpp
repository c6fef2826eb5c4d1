#include <complex>
#include <map>

#include "bpinn/problems.hpp"
#include "problem_functions.hpp"

namespace bpinn {
namespace {

using Cplx = std::complex<double>;

// (e^z - 1) / z, series near 0 to avoid cancellation
Cplx phi1(Cplx z) {
    if (std::abs(z) < 1e-4) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
    return (std::exp(z) - 1.0) / z;
}

// One source mode A sin(omega t + kappa x + phi) forces the complex modal ODE
//   v' + (mu + i nu) v = A e^{i omega t},  v(0) = A
// with mu = gamma kappa^2 and nu = alpha kappa - delta kappa^3; the solution
// contribution is Im[e^{i(kappa x + phi)} v(t)].
struct Mode {
    double amp, omega, kappa, phase, mu, nu;
    Cplx decay() const { return {mu, nu}; }

    // uniformly stable in the resonant limit mu + i(nu + omega) -> 0
    Cplx v(double t) const {
        const Cplx den(mu, nu + omega);
        return amp * (std::exp(-decay() * t) +
                      t * std::exp(Cplx(0.0, omega * t)) * phi1(-den * t));
    }
};

std::array<Mode, 5> make_modes(const detail::LinearFamilyParams& lf) {
    std::array<Mode, 5> modes;
    for (int j = 0; j < 5; ++j) {
        const double kappa = lf.kappa(j);
        modes[j] = {lf.amp[j], lf.omega[j], kappa, lf.phase[j],
                    lf.gamma * kappa * kappa, kappa - lf.delta * kappa * kappa * kappa};
    }
    return modes;
}

double reconstruct(const std::array<Mode, 5>& modes, const std::array<Cplx, 5>& v, double x) {
    double u = 0.0;
    for (int j = 0; j < 5; ++j)
        u += std::imag(std::exp(Cplx(0.0, modes[j].kappa * x + modes[j].phase)) * v[j]);
    return u;
}

}  // namespace

Eigen::MatrixXd oracle_fourier_linear_family(const std::vector<double>& params,
                                             const PointSet& pts) {
    const auto modes = make_modes(detail::LinearFamilyParams::parse(params));
    Eigen::MatrixXd out(pts.size(), 1);
    // cache v(t) per distinct time; grids repeat each time across the x row
    std::map<double, std::array<Cplx, 5>> vcache;
    for (Eigen::Index i = 0; i < pts.p.rows(); ++i) {
        const double x = pts.p(i, 0), t = pts.p(i, 1);
        auto it = vcache.find(t);
        if (it == vcache.end()) {
            std::array<Cplx, 5> v;
            for (int j = 0; j < 5; ++j) v[j] = modes[j].v(t);
            it = vcache.emplace(t, v).first;
        }
        out(i, 0) = reconstruct(modes, it->second, x);
    }
    return out;
}

Eigen::MatrixXd oracle_fourier_linear_family_stepper(const std::vector<double>& params,
                                                     const PointSet& pts, double dt) {
    const auto modes = make_modes(detail::LinearFamilyParams::parse(params));

    // RK4 on the five modal ODEs, landing exactly on every distinct grid time
    std::map<double, std::array<Cplx, 5>> states;
    for (Eigen::Index i = 0; i < pts.p.rows(); ++i) states[pts.p(i, 1)] = {};

    std::array<Cplx, 5> v;
    for (int j = 0; j < 5; ++j) v[j] = modes[j].amp;
    auto f = [&](const std::array<Cplx, 5>& s, double t) {
        std::array<Cplx, 5> d;
        for (int j = 0; j < 5; ++j)
            d[j] = -modes[j].decay() * s[j] +
                   modes[j].amp * std::exp(Cplx(0.0, modes[j].omega * t));
        return d;
    };
    auto step = [&](std::array<Cplx, 5>& s, double t, double h) {
        const auto k1 = f(s, t);
        std::array<Cplx, 5> tmp;
        for (int j = 0; j < 5; ++j) tmp[j] = s[j] + 0.5 * h * k1[j];
        const auto k2 = f(tmp, t + 0.5 * h);
        for (int j = 0; j < 5; ++j) tmp[j] = s[j] + 0.5 * h * k2[j];
        const auto k3 = f(tmp, t + 0.5 * h);
        for (int j = 0; j < 5; ++j) tmp[j] = s[j] + h * k3[j];
        const auto k4 = f(tmp, t + h);
        for (int j = 0; j < 5; ++j)
            s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    };

    double t = 0.0;
    for (auto& [target, state] : states) {
        if (target < -1e-12) throw std::invalid_argument("linear family stepper: negative time");
        while (target - t > dt * (1.0 + 1e-9)) {
            step(v, t, dt);
            t += dt;
        }
        if (target - t > 1e-14 * std::max(1.0, target)) {
            step(v, t, target - t);
            t = target;
        }
        state = v;
    }

    Eigen::MatrixXd out(pts.size(), 1);
    for (Eigen::Index i = 0; i < pts.p.rows(); ++i)
        out(i, 0) = reconstruct(modes, states.at(pts.p(i, 1)), pts.p(i, 0));
    return out;
}

}  // namespace bpinn

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "bpinn/problems.hpp"
#include "problem_functions.hpp"

namespace bpinn {
namespace {

struct BallisticState {
    double x, y, vx, vy;
};

BallisticState deriv(const BallisticState& s, double cdrag) {
    const double speed = std::hypot(s.vx, s.vy);
    return {s.vx, s.vy, -cdrag * speed * s.vx, -cdrag * speed * s.vy - detail::kGravity};
}

BallisticState rk4_step(const BallisticState& s, double h, double cdrag) {
    auto axpy = [](const BallisticState& a, double c, const BallisticState& d) {
        return BallisticState{a.x + c * d.x, a.y + c * d.y, a.vx + c * d.vx, a.vy + c * d.vy};
    };
    const BallisticState k1 = deriv(s, cdrag);
    const BallisticState k2 = deriv(axpy(s, 0.5 * h, k1), cdrag);
    const BallisticState k3 = deriv(axpy(s, 0.5 * h, k2), cdrag);
    const BallisticState k4 = deriv(axpy(s, h, k3), cdrag);
    return {s.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
            s.y + h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
            s.vx + h / 6.0 * (k1.vx + 2 * k2.vx + 2 * k3.vx + k4.vx),
            s.vy + h / 6.0 * (k1.vy + 2 * k2.vy + 2 * k3.vy + k4.vy)};
}

}  // namespace

Eigen::MatrixXd oracle_kinematics_rk4(const std::vector<double>& params, const PointSet& pts,
                                      double dt) {
    const detail::KinematicsParams kp = detail::KinematicsParams::parse(params);
    const double cdrag = kp.drag();
    const int n = pts.size();

    // march in time order; a final partial step lands exactly on each grid time
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return pts.p(a, 0) < pts.p(b, 0); });

    Eigen::MatrixXd out(n, 2);
    BallisticState s{0.0, 0.0, kp.vx0(), kp.vy0()};
    double t = 0.0;
    for (int idx : order) {
        const double target = pts.p(idx, 0);
        if (target < -1e-12) throw std::invalid_argument("kinematics oracle: negative time");
        while (target - t > dt * (1.0 + 1e-9)) {
            s = rk4_step(s, dt, cdrag);
            t += dt;
        }
        const double h = target - t;
        if (h > 1e-14 * std::max(1.0, target)) {
            s = rk4_step(s, h, cdrag);
            t = target;
        }
        out(idx, 0) = s.x;
        out(idx, 1) = s.y;
    }
    return out;
}

}  // namespace bpinn

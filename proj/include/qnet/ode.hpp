#ifndef QNET_ODE_HPP
#define QNET_ODE_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "qnet/types.hpp"

namespace qnet {

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0 = choose from the span
    double min_step_fraction = 1e-14;
    long max_steps = 50'000'000;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
};

// Dormand-Prince 5(4) with standard PI-free step control. `rhs(t, y)` must
// return the derivative as a Vector of the same size.
template <typename Rhs>
Vector integrate_ode(Rhs&& rhs, Vector y, double t0, double t1,
                     const OdeOptions& opts = {}, OdeStats* stats = nullptr) {
    if (t1 == t0) return y;
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 4th-order embedded weights
    static const double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                        e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    const double span = t1 - t0;
    double h = opts.initial_step > 0.0 ? opts.initial_step : span / 100.0;
    h = std::min(h, span);
    const double h_min = std::abs(span) * opts.min_step_fraction;

    double t = t0;
    Vector k1 = rhs(t, y);
    long steps = 0, rejected = 0;
    while (t < t1) {
        if (++steps > opts.max_steps) {
            throw ConvergenceError("integrate_ode: exceeded max step count");
        }
        h = std::min(h, t1 - t);
        const Vector k2 = rhs(t + c2 * h, (y + h * a21 * k1).eval());
        const Vector k3 = rhs(t + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
        const Vector k4 = rhs(t + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
        const Vector k5 = rhs(t + c5 * h,
                              (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
        const Vector k6 = rhs(
            t + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
        const Vector y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vector k7 = rhs(t + h, y5);
        const Vector y4 =
            y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double scale =
                opts.atol + opts.rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
            err = std::max(err, std::abs(y5(i) - y4(i)) / scale);
        }
        if (err <= 1.0) {
            t += h;
            y = y5;
            k1 = k7;  // FSAL
        } else {
            ++rejected;
        }
        const double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(factor, 0.2, 5.0);
        if (h < h_min && t < t1) {
            throw StiffnessError("integrate_ode: step size underflow at t = " +
                                 std::to_string(t) + " (h = " + std::to_string(h) + ")");
        }
    }
    if (stats) {
        stats->steps = steps;
        stats->rejected = rejected;
    }
    return y;
}

}  // namespace qnet

#endif

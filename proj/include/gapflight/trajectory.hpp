#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "gapflight/types.hpp"

namespace gapflight {

/// Point-to-point motion primitive: one quintic polynomial per axis,
/// p(t) = c0 + c1 t + ... + c5 t^5 over t in [0, duration]. For fully
/// constrained boundary states the quintic is the unique minimizer of the
/// time-averaged squared jerk (d^6 p / dt^6 = 0 along extremals).
struct Trajectory {
    std::array<std::array<double, 6>, 3> coeffs{};  // per axis c0..c5
    double duration = 0.0;
};

/// Traveling time for a displacement at a prescribed average speed.
inline double travel_time(const Vec3& delta_p, double v_bar) {
    if (!(v_bar > 0.0)) throw std::invalid_argument("travel_time: average speed must be positive");
    double dist = delta_p.norm();
    if (dist == 0.0) throw DegenerateDurationError("travel_time: zero displacement gives T = 0");
    return dist / v_bar;
}

namespace detail {

/// Solves the 6x6 boundary-condition system for one axis with partial
/// pivoting. Rows constrain p, v, a at t = 0 and t = T.
inline std::array<double, 6> solve_axis_quintic(double p0, double v0, double a0, double p1,
                                                double v1, double a1, double T) {
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs;
    const double t2 = T * T, t3 = t2 * T, t4 = t3 * T, t5 = t4 * T;
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(2, 2) = 2.0;
    m.row(3) << 1.0, T, t2, t3, t4, t5;
    m.row(4) << 0.0, 1.0, 2.0 * T, 3.0 * t2, 4.0 * t3, 5.0 * t4;
    m.row(5) << 0.0, 0.0, 2.0, 6.0 * T, 12.0 * t2, 20.0 * t3;
    rhs << p0, v0, a0, p1, v1, a1;
    Eigen::Matrix<double, 6, 1> c = m.partialPivLu().solve(rhs);
    return {c(0), c(1), c(2), c(3), c(4), c(5)};
}

}  // namespace detail

/// Generates the average-jerk-optimal primitive between two fully
/// constrained states over duration T.
inline Trajectory generate_primitive(const State& start, const State& end, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("generate_primitive: duration must be positive");
    if (T < 1e-6)
        throw NumericConditioningError("generate_primitive: boundary system ill-conditioned (T < 1e-6)");
    if (!start.finite() || !end.finite())
        throw std::invalid_argument("generate_primitive: non-finite boundary state");

    Trajectory traj;
    traj.duration = T;
    for (int axis = 0; axis < 3; ++axis) {
        traj.coeffs[axis] = detail::solve_axis_quintic(start.p[axis], start.v[axis], start.a[axis],
                                                       end.p[axis], end.v[axis], end.a[axis], T);
    }
    return traj;
}

/// Analytic evaluation of the quintic and its first two derivatives.
inline State sample(const Trajectory& traj, double t) {
    if (!(t >= 0.0 && t <= traj.duration))
        throw std::out_of_range("sample: t outside [0, duration]");
    State s;
    for (int axis = 0; axis < 3; ++axis) {
        const auto& c = traj.coeffs[axis];
        // Horner evaluation of p, v, a.
        s.p[axis] = ((((c[5] * t + c[4]) * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0];
        s.v[axis] = (((5.0 * c[5] * t + 4.0 * c[4]) * t + 3.0 * c[3]) * t + 2.0 * c[2]) * t + c[1];
        s.a[axis] = ((20.0 * c[5] * t + 12.0 * c[4]) * t + 6.0 * c[3]) * t + 2.0 * c[2];
    }
    return s;
}

/// Jerk vector at time t (third derivative; quadratic in t).
inline Vec3 jerk_at(const Trajectory& traj, double t) {
    Vec3 j;
    for (int axis = 0; axis < 3; ++axis) {
        const auto& c = traj.coeffs[axis];
        j[axis] = (60.0 * c[5] * t + 24.0 * c[4]) * t + 6.0 * c[3];
    }
    return j;
}

/// (1/T) * integral of |jerk|^2 over [0, T], evaluated in closed form.
/// Per axis jerk is j0 + j1 t + j2 t^2, so the integrand is a quartic.
inline double mean_squared_jerk(const Trajectory& traj) {
    if (!(traj.duration > 0.0))
        throw std::invalid_argument("mean_squared_jerk: invalid trajectory duration");
    const double T = traj.duration;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    double total = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        const auto& c = traj.coeffs[axis];
        const double j0 = 6.0 * c[3];
        const double j1 = 24.0 * c[4];
        const double j2 = 60.0 * c[5];
        total += j0 * j0 * T + j0 * j1 * T2 + (j1 * j1 + 2.0 * j0 * j2) * T3 / 3.0 +
                 j1 * j2 * T4 / 2.0 + j2 * j2 * T5 / 5.0;
    }
    return total / T;
}

}  // namespace gapflight

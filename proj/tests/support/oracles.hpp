#pragma once

// Test-only reference implementations, kept independent of the library's
// computation paths on purpose.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <vector>

#include "gapflight/trajectory.hpp"
#include "gapflight/types.hpp"

namespace oracles {

/// Discretized jerk-optimal trajectory for a triple integrator: piecewise
/// constant jerk on n uniform intervals, minimizing sum j^2 subject to the
/// exact end-state constraints (the propagation of piecewise-constant jerk is
/// closed-form, so no integration error enters the constraint rows). Solved
/// per axis via the normal equations of the minimum-norm problem.
struct CollocationResult {
    std::vector<double> times;
    std::vector<gapflight::Vec3> positions;
    double mean_squared_jerk = 0.0;
};

inline CollocationResult jerk_optimal_collocation(const gapflight::State& start,
                                                  const gapflight::State& end, double T, int n) {
    const double h = T / n;
    CollocationResult res;
    res.times.resize(n + 1);
    for (int k = 0; k <= n; ++k) res.times[k] = h * k;
    res.positions.assign(n + 1, gapflight::Vec3::Zero());

    for (int axis = 0; axis < 3; ++axis) {
        // Constraint rows: effect of j_k on (p(T), v(T), a(T)).
        Eigen::MatrixXd a_mat(3, n);
        for (int k = 0; k < n; ++k) {
            const double r = T - (k + 1) * h;  // time remaining after interval k
            a_mat(0, k) = h * h * h / 6.0 + (h * h / 2.0) * r + h * r * r / 2.0;
            a_mat(1, k) = h * h / 2.0 + h * r;
            a_mat(2, k) = h;
        }
        Eigen::Vector3d b;
        b(0) = end.p[axis] - (start.p[axis] + start.v[axis] * T + 0.5 * start.a[axis] * T * T);
        b(1) = end.v[axis] - (start.v[axis] + start.a[axis] * T);
        b(2) = end.a[axis] - start.a[axis];

        // Minimum-norm solution j = A^T (A A^T)^{-1} b.
        const Eigen::Matrix3d gram = a_mat * a_mat.transpose();
        const Eigen::VectorXd j = a_mat.transpose() * gram.ldlt().solve(b);

        // Exact forward propagation of piecewise-constant jerk.
        double p = start.p[axis], v = start.v[axis], a = start.a[axis];
        res.positions[0][axis] = p;
        double jerk_sq_sum = 0.0;
        for (int k = 0; k < n; ++k) {
            const double jk = j(k);
            p += v * h + 0.5 * a * h * h + jk * h * h * h / 6.0;
            v += a * h + 0.5 * jk * h * h;
            a += jk * h;
            res.positions[k + 1][axis] = p;
            jerk_sq_sum += jk * jk * h;
        }
        res.mean_squared_jerk += jerk_sq_sum / T;
    }
    return res;
}

/// Independent 6x6 linear solve (Gaussian elimination with partial pivoting,
/// no Eigen) for the quintic boundary problem on one axis.
inline std::array<double, 6> quintic_by_elimination(double p0, double v0, double a0, double p1,
                                                    double v1, double a1, double T) {
    double m[6][7] = {};
    const double t2 = T * T, t3 = t2 * T, t4 = t3 * T, t5 = t4 * T;
    const double rows[6][7] = {
        {1, 0, 0, 0, 0, 0, p0},
        {0, 1, 0, 0, 0, 0, v0},
        {0, 0, 2, 0, 0, 0, a0},
        {1, T, t2, t3, t4, t5, p1},
        {0, 1, 2 * T, 3 * t2, 4 * t3, 5 * t4, v1},
        {0, 0, 2, 6 * T, 12 * t2, 20 * t3, a1},
    };
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 7; ++j) m[i][j] = rows[i][j];

    for (int col = 0; col < 6; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        for (int j = 0; j < 7; ++j) std::swap(m[col][j], m[pivot][j]);
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int j = col; j < 7; ++j) m[r][j] -= f * m[col][j];
        }
    }
    std::array<double, 6> c;
    for (int i = 0; i < 6; ++i) c[i] = m[i][6] / m[i][i];
    return c;
}

/// Jerk by finite differences of the sampled acceleration (one-sided at the
/// trajectory ends), then composite Simpson over |jerk|^2.
inline double mean_squared_jerk_quadrature(const gapflight::Trajectory& traj, int n_intervals) {
    const double T = traj.duration;
    const double fd_h = std::min(1e-5, T / 1000.0);
    auto jerk_fd = [&](double t) -> gapflight::Vec3 {
        if (t < 2.0 * fd_h) {
            const auto a0 = gapflight::sample(traj, t).a;
            const auto a1 = gapflight::sample(traj, t + fd_h).a;
            const auto a2 = gapflight::sample(traj, t + 2.0 * fd_h).a;
            return (-3.0 * a0 + 4.0 * a1 - a2) / (2.0 * fd_h);
        }
        if (t > T - 2.0 * fd_h) {
            const auto a0 = gapflight::sample(traj, t).a;
            const auto a1 = gapflight::sample(traj, t - fd_h).a;
            const auto a2 = gapflight::sample(traj, t - 2.0 * fd_h).a;
            return (3.0 * a0 - 4.0 * a1 + a2) / (2.0 * fd_h);
        }
        return (gapflight::sample(traj, t + fd_h).a - gapflight::sample(traj, t - fd_h).a) /
               (2.0 * fd_h);
    };
    if (n_intervals % 2 != 0) ++n_intervals;
    const double h = T / n_intervals;
    double sum = jerk_fd(0.0).squaredNorm() + jerk_fd(T).squaredNorm();
    for (int k = 1; k < n_intervals; ++k)
        sum += (k % 2 == 1 ? 4.0 : 2.0) * jerk_fd(k * h).squaredNorm();
    return (h / 3.0) * sum / T;
}

/// Quaternion route to the geodesic angle between the two yaw-free attitudes
/// (the library uses the trace formula).
inline double quaternion_relative_angle(double phi_a, double theta_a, double phi_b,
                                        double theta_b) {
    using Eigen::AngleAxisd;
    using Eigen::Quaterniond;
    using Eigen::Vector3d;
    const Quaterniond qa = AngleAxisd(-phi_a, Vector3d::UnitX()) *
                           AngleAxisd(-theta_a, Vector3d::UnitY());
    const Quaterniond qb = AngleAxisd(-phi_b, Vector3d::UnitX()) *
                           AngleAxisd(-theta_b, Vector3d::UnitY());
    const Quaterniond rel = qa * qb.conjugate();
    return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

}  // namespace oracles

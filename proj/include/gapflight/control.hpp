#pragma once

#include <algorithm>
#include <cmath>

#include "gapflight/types.hpp"

namespace gapflight {

/// Input vector of the controller network: world-frame position, velocity
/// and acceleration errors plus current Euler attitude. Exactly the
/// 12-vector fed to the controller MLP.
struct ControlErrors {
    Vec3 e_p = Vec3::Zero();
    Vec3 e_v = Vec3::Zero();
    Vec3 e_a = Vec3::Zero();
    Vec3 att = Vec3::Zero();  // roll, pitch, yaw (rad)
};

struct ControlGains {
    Vec3 k_p = Vec3(6.0, 6.0, 8.0);  // 1/s^2
    Vec3 k_v = Vec3(4.0, 4.0, 5.0);  // 1/s
};

/// Desired world-frame rotation for roll phi and pitch theta with yaw fixed
/// at zero, X-then-Y order:
///
///   [ cos t        0       -sin t      ]
///   [ sin p sin t  cos p    sin p cos t]
///   [ cos p sin t  -sin p   cos p cos t]
///
/// The third column is the body z-axis in world frame.
inline Mat3 desired_rotation(double phi, double theta) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double ct = std::cos(theta), st = std::sin(theta);
    Mat3 r;
    r << ct, 0.0, -st,
         sp * st, cp, sp * ct,
         cp * st, -sp, cp * ct;
    return r;
}

/// Geodesic rotation angle between two desired attitudes,
/// acos((tr(R_a R_b^T) - 1) / 2), clamped against round-off. Range [0, pi].
inline double euler_error(double phi_a, double theta_a, double phi_b, double theta_b) {
    const Mat3 ra = desired_rotation(phi_a, theta_a);
    const Mat3 rb = desired_rotation(phi_b, theta_b);
    const double tr = (ra * rb.transpose()).trace();
    const double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

/// Gradient of euler_error with respect to (phi_b, theta_b). Subgradient 0
/// at the non-differentiable points e = 0 and e = pi.
inline void euler_error_grad(double phi_a, double theta_a, double phi_b, double theta_b,
                             double* d_phi, double* d_theta) {
    const Mat3 ra = desired_rotation(phi_a, theta_a);
    const double cp = std::cos(phi_b), sp = std::sin(phi_b);
    const double ct = std::cos(theta_b), st = std::sin(theta_b);
    const Mat3 rb = desired_rotation(phi_b, theta_b);
    const double c = std::clamp(((ra * rb.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
    if (c >= 1.0 - 1e-12 || c <= -1.0 + 1e-12) {
        *d_phi = 0.0;
        *d_theta = 0.0;
        return;
    }
    Mat3 drb_dphi, drb_dtheta;
    drb_dphi << 0.0, 0.0, 0.0,
                cp * st, -sp, cp * ct,
                -sp * st, -cp, -sp * ct;
    drb_dtheta << -st, 0.0, -ct,
                  sp * ct, 0.0, -sp * st,
                  cp * ct, 0.0, -cp * st;
    // tr(R_a R_b^T) = sum_ij R_a[i][j] R_b[i][j]
    const double dtr_dphi = ra.cwiseProduct(drb_dphi).sum();
    const double dtr_dtheta = ra.cwiseProduct(drb_dtheta).sum();
    const double dacos = -1.0 / std::sqrt(1.0 - c * c);
    *d_phi = dacos * 0.5 * dtr_dphi;
    *d_theta = dacos * 0.5 * dtr_dtheta;
}

/// Thrust-attitude tracking law: PD on position/velocity error plus
/// acceleration feed-forward and gravity compensation,
///   f_des = a_des + K_p o e_p + K_v o e_v + g e3.
/// Thrust is |f_des|; roll/pitch are the unique angles in (-pi/2, pi/2)
/// aligning the body z-axis (third column of desired_rotation) with f_des.
/// Commands with f_des outside the upper half space have no such attitude
/// and are rejected together with the near-free-fall region.
inline AttitudeThrustCmd track(const ControlErrors& errors, const Vec3& desired_acc,
                               const ControlGains& gains) {
    if (!errors.e_p.allFinite() || !errors.e_v.allFinite() || !desired_acc.allFinite())
        throw std::invalid_argument("track: non-finite input");
    Vec3 f_des = desired_acc + gains.k_p.cwiseProduct(errors.e_p) +
                 gains.k_v.cwiseProduct(errors.e_v) + Vec3(0.0, 0.0, kGravity);
    const double norm = f_des.norm();
    if (norm < 0.1)
        throw ThrustSingularityError("track: thrust below free-fall threshold, attitude undefined");
    if (f_des.z() <= 0.0)
        throw ThrustSingularityError("track: desired force not in upper half space");
    const Vec3 dir = f_des / norm;
    AttitudeThrustCmd cmd;
    cmd.thrust = norm;
    // Third column of desired_rotation is (-sin theta, sin phi cos theta, cos phi cos theta).
    cmd.pitch = std::asin(std::clamp(-dir.x(), -1.0, 1.0));
    cmd.roll = std::atan2(dir.y(), dir.z());
    return cmd;
}

}  // namespace gapflight

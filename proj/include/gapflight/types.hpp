#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace gapflight {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kGravity = 9.81;  // m/s^2, mass-normalized convention

/// Translational boundary state of a trajectory: position, velocity,
/// acceleration in world frame, SI units.
struct State {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();

    bool finite() const {
        return p.allFinite() && v.allFinite() && a.allFinite();
    }
};

/// Full kinematic state tracked by the simulator. Attitude is Euler
/// (roll, pitch, yaw) in radians; yaw is held at zero by construction.
struct FullState {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
    Vec3 att = Vec3::Zero();
    Vec3 omega = Vec3::Zero();
    double t = 0.0;

    bool finite() const {
        return p.allFinite() && v.allFinite() && a.allFinite() &&
               att.allFinite() && omega.allFinite() && std::isfinite(t);
    }
};

/// Thrust-attitude command: desired roll/pitch (rad, yaw fixed at 0) and
/// mass-normalized collective thrust (m/s^2).
struct AttitudeThrustCmd {
    double roll = 0.0;
    double pitch = 0.0;
    double thrust = 0.0;

    bool finite() const {
        return std::isfinite(roll) && std::isfinite(pitch) && std::isfinite(thrust);
    }
};

// ---------------------------------------------------------------------------
// Error taxonomy. Each named failure mode in a module contract gets its own
// type so callers and tests can discriminate.
// ---------------------------------------------------------------------------

struct DegenerateDurationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericConditioningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ThrustSingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulationFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingFault : std::runtime_error {
    TrainingFault(const std::string& msg, int where) : std::runtime_error(msg), index(where) {}
    int index;  // epoch or layer, depending on the failing stage
};

struct RangeConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolicyFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleTraverseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RecoverInfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FinetuneFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gapflight

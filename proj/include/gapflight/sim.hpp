#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gapflight/control.hpp"
#include "gapflight/types.hpp"

namespace gapflight {

/// Rectangular opening in a vertical wall (wall plane normal = world X).
/// `tilt` rotates the long side out of horizontal about the world X axis,
/// so a drone has to roll to fit through. Width is the long side.
struct GapPose {
    Vec3 center = Vec3(0.0, 0.0, 2.2);
    double tilt = 0.0;    // rad, 0 <= tilt <= 75 deg
    double width = 0.8;   // m, long side
    double height = 0.36; // m, short side

    /// Long-side direction (in the wall plane).
    Vec3 long_axis() const { return Vec3(0.0, std::cos(tilt), std::sin(tilt)); }
    /// Required body z-axis when traversing: orthogonal to the long side,
    /// in the wall plane.
    Vec3 body_z_axis() const { return Vec3(0.0, -std::sin(tilt), std::cos(tilt)); }
    /// Roll command that realises body_z_axis() under the yaw-zero rotation
    /// convention (pitch 0).
    double roll_attitude() const { return -tilt; }

    void validate() const {
        if (!(tilt >= 0.0 && tilt <= 75.0 * M_PI / 180.0))
            throw std::invalid_argument("GapPose: tilt outside [0, 75 deg]");
        if (!(width > height && height > 0.0))
            throw std::invalid_argument("GapPose: requires width > height > 0");
    }
};

struct LabBounds {
    Vec3 min = Vec3(-5.0, -3.0, 0.0);
    Vec3 max = Vec3(5.0, 3.0, 3.5);

    bool contains(const Vec3& p, double margin = 0.0) const {
        for (int i = 0; i < 3; ++i)
            if (p[i] < min[i] + margin || p[i] > max[i] - margin) return false;
        return true;
    }
};

struct Scenario {
    GapPose gap;
    Vec3 start_hover = Vec3(-3.5, 0.0, 1.2);
    LabBounds lab;
    double drone_radius = 0.15;

    void validate() const {
        gap.validate();
        if (!lab.contains(start_hover))
            throw std::invalid_argument("Scenario: start_hover outside lab bounds");
        if (!(drone_radius < gap.height / 2.0))
            throw std::invalid_argument("Scenario: drone radius does not fit the gap");
    }
};

enum class EventKind { kGapCrossed, kCollision, kOutOfBounds };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::kGapCrossed: return "gap-crossed";
        case EventKind::kCollision: return "collision";
        case EventKind::kOutOfBounds: return "out-of-bounds";
    }
    return "?";
}

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::kGapCrossed;
};

/// Time-stamped rollout: states with the commands that were applied at each
/// step, plus detected events. Timestamps advance by a fixed dt.
struct Trace {
    std::vector<FullState> states;
    std::vector<AttitudeThrustCmd> commands;
    std::vector<Event> events;
    double dt = 0.02;

    bool has_event(EventKind k) const {
        for (const auto& e : events)
            if (e.kind == k) return true;
        return false;
    }
    std::optional<Event> first_event(EventKind k) const {
        for (const auto& e : events)
            if (e.kind == k) return e;
        return std::nullopt;
    }
};

struct SimParams {
    double dt = 0.02;        // s
    double tau_att = 0.08;   // s, inner-loop attitude time constant
    double mu_max = 2.5 * kGravity;  // m/s^2 thrust ceiling
};

/// One fixed-step update. The commanded attitude is tracked by a first-order
/// lag with time constant tau_att (exact exponential update); translational
/// dynamics a = thrust R(att) e3 - g e3 are integrated with RK4 against the
/// lag's closed-form attitude. Thrust saturates to [0, mu_max].
inline FullState step(const FullState& state, const AttitudeThrustCmd& cmd, double dt,
                      const SimParams& params = {}) {
    if (!cmd.finite()) throw SimulationFault("step: non-finite command");
    if (!(dt > 0.0 && dt <= 0.05)) throw std::invalid_argument("step: dt outside (0, 0.05]");

    const double mu = std::clamp(cmd.thrust, 0.0, params.mu_max);
    const double tau = params.tau_att;
    const Vec3 att_cmd(cmd.roll, cmd.pitch, 0.0);
    const Vec3 att0 = state.att;

    auto att_at = [&](double s) -> Vec3 { return att_cmd + (att0 - att_cmd) * std::exp(-s / tau); };
    auto accel_at = [&](double s) -> Vec3 {
        const Vec3 att = att_at(s);
        const Mat3 r = desired_rotation(att.x(), att.y());
        return mu * r.col(2) - Vec3(0.0, 0.0, kGravity);
    };

    // RK4 on (p, v) with time-varying acceleration a(s).
    const Vec3 a1 = accel_at(0.0);
    const Vec3 a2 = accel_at(dt / 2.0);
    const Vec3 a3 = a2;
    const Vec3 a4 = accel_at(dt);

    const Vec3 k1p = state.v, k1v = a1;
    const Vec3 k2p = state.v + (dt / 2.0) * k1v, k2v = a2;
    const Vec3 k3p = state.v + (dt / 2.0) * k2v, k3v = a3;
    const Vec3 k4p = state.v + dt * k3v, k4v = a4;

    FullState next;
    next.p = state.p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    next.v = state.v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    next.att = att_at(dt);
    next.att.z() = 0.0;  // yaw held at zero by construction
    next.omega = (att_cmd - next.att) / tau;  // exact derivative of the lag response
    next.omega.z() = 0.0;
    next.a = accel_at(dt);
    next.t = state.t + dt;
    if (!next.finite()) throw SimulationFault("step: state diverged");
    return next;
}

/// Collision / crossing test for one state. Wall material occupies the plane
/// x = gap.center.x outside the rectangular opening; the drone is a sphere.
/// `prev_plane_dist`, when supplied, enables crossing detection by sign
/// change; a state exactly on the plane counts as crossing too.
inline std::optional<EventKind> check_collision(const FullState& state, const Scenario& scenario,
                                                std::optional<double> prev_plane_dist = std::nullopt,
                                                const Vec3* prev_p = nullptr) {
    const double r = scenario.drone_radius;
    const GapPose& gap = scenario.gap;

    // Ground and lab bounds.
    if (state.p.z() <= r) return EventKind::kCollision;
    if (!scenario.lab.contains(state.p)) return EventKind::kOutOfBounds;

    // Wall plane.
    const double dx = state.p.x() - gap.center.x();
    const Vec3 u = gap.long_axis();
    const Vec3 w = gap.body_z_axis();
    if (std::abs(dx) <= r) {
        const Vec3 d = state.p - gap.center;
        const double cu = d.dot(u);
        const double cw = d.dot(w);
        const bool inside = std::abs(cu) <= gap.width / 2.0 && std::abs(cw) <= gap.height / 2.0;
        if (!inside) return EventKind::kCollision;
        // Inside the opening: nearest wall material sits on the opening rim.
        const double edge = std::min(gap.width / 2.0 - std::abs(cu), gap.height / 2.0 - std::abs(cw));
        if (dx * dx + edge * edge <= r * r) return EventKind::kCollision;
    }

    // Crossing: plane distance changes sign (or lands exactly on the plane)
    // with the interpolated crossing point inside the opening.
    const bool sign_change =
        prev_plane_dist.has_value() &&
        ((*prev_plane_dist < 0.0 && dx >= 0.0) || (*prev_plane_dist > 0.0 && dx <= 0.0));
    if (sign_change || dx == 0.0) {
        Vec3 cross_pt = state.p;
        if (sign_change && prev_p != nullptr && dx != *prev_plane_dist) {
            const double f = *prev_plane_dist / (*prev_plane_dist - dx);
            cross_pt = *prev_p + f * (state.p - *prev_p);
        }
        const Vec3 d = cross_pt - gap.center;
        if (std::abs(d.dot(u)) <= gap.width / 2.0 && std::abs(d.dot(w)) <= gap.height / 2.0)
            return EventKind::kGapCrossed;
    }
    return std::nullopt;
}

/// Simulation fault carrying the partial trace recorded up to the failure.
struct RolloutFault : SimulationFault {
    RolloutFault(const std::string& msg, Trace partial_trace)
        : SimulationFault(msg), partial(std::move(partial_trace)) {}
    Trace partial;
};

using CommandSource = std::function<AttitudeThrustCmd(const FullState&, double /*t*/)>;

/// Hover state at a point: level attitude, zero rates.
inline FullState hover_state(const Vec3& p) {
    FullState s;
    s.p = p;
    return s;
}

/// Closed-loop rollout. Queries the command source at every control tick,
/// steps the simulator, and records states, commands and events. Stops at
/// `duration`, on collision, or on leaving the lab. Gap crossings are
/// recorded and the rollout continues.
inline Trace rollout(const CommandSource& controller, const Scenario& scenario, double duration,
                     const SimParams& params = {}) {
    if (!(duration > 0.0)) throw std::invalid_argument("rollout: duration must be positive");
    scenario.validate();

    Trace trace;
    trace.dt = params.dt;
    FullState state = hover_state(scenario.start_hover);
    const int n_steps = static_cast<int>(std::ceil(duration / params.dt - 1e-9));
    trace.states.reserve(n_steps + 1);
    trace.commands.reserve(n_steps + 1);

    double plane_dist = state.p.x() - scenario.gap.center.x();
    for (int i = 0; i < n_steps; ++i) {
        AttitudeThrustCmd cmd;
        try {
            cmd = controller(state, state.t);
        } catch (const std::exception& e) {
            throw RolloutFault(std::string("rollout: command source fault: ") + e.what(), trace);
        }
        trace.states.push_back(state);
        trace.commands.push_back(cmd);

        const Vec3 prev_p = state.p;
        try {
            state = step(state, cmd, params.dt, params);
        } catch (const SimulationFault& e) {
            throw RolloutFault(e.what(), trace);
        }
        auto event = check_collision(state, scenario, plane_dist, &prev_p);
        plane_dist = state.p.x() - scenario.gap.center.x();
        if (event.has_value()) {
            trace.events.push_back({state.t, *event});
            if (*event != EventKind::kGapCrossed) {
                trace.states.push_back(state);
                trace.commands.push_back(cmd);
                return trace;
            }
        }
    }
    trace.states.push_back(state);
    trace.commands.push_back(trace.commands.empty() ? AttitudeThrustCmd{} : trace.commands.back());
    return trace;
}

}  // namespace gapflight

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gapflight/control.hpp"
#include "gapflight/policy.hpp"
#include "gapflight/sim.hpp"
#include "gapflight/trajectory.hpp"
#include "gapflight/types.hpp"

namespace gapflight {

/// Attitude-locked crossing segment: constant commanded attitude equal to the
/// gap attitude and constant mass-normalized thrust chosen so the net
/// acceleration has no component along the gap's body-z axis. The segment
/// covers [-tau, +tau] around the crossing instant.
struct TraverseSegment {
    State crossing;      // state at the gap center (t = 0 of the segment)
    Vec3 accel;          // constant acceleration during the traverse
    double mu = 0.0;     // commanded thrust
    double roll = 0.0;   // commanded roll (pitch 0, yaw 0)
    double tau = 0.15;   // half window, s

    State at(double t_rel) const {  // t_rel in [-tau, tau]
        State s;
        s.p = crossing.p + crossing.v * t_rel + 0.5 * accel * t_rel * t_rel;
        s.v = crossing.v + accel * t_rel;
        s.a = accel;
        return s;
    }
    State entry() const { return at(-tau); }
    State exit() const { return at(tau); }
};

/// Three-stage mission: approach primitive into the traverse window, the
/// attitude-locked traverse, then a searched recover primitive back to hover.
struct MissionPlan {
    Trajectory approach;
    TraverseSegment traverse;
    double t_traverse_start = 0.0;  // = approach duration
    double t_crossing = 0.0;
    double t_traverse_end = 0.0;
    Vec3 start_hover = Vec3::Zero();
    std::optional<double> learned_endpoint_error;  // m, planner-net quality metric
};

/// Computes the traverse segment for a gap. The crossing velocity has
/// magnitude v_cross along the world X axis (which lies in the plane normal
/// to the gap's body-z axis).
inline TraverseSegment plan_traverse(const GapPose& gap, double v_cross, double tau) {
    if (!(v_cross > 0.0)) throw std::invalid_argument("plan_traverse: v_cross must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("plan_traverse: tau must be positive");
    if (gap.tilt >= M_PI / 2.0)
        throw InfeasibleTraverseError("plan_traverse: tilt >= 90 deg");

    const Vec3 z_gap = gap.body_z_axis();
    // Crossing direction: world X projected into the plane orthogonal to z_gap.
    Vec3 dir = Vec3::UnitX() - Vec3::UnitX().dot(z_gap) * z_gap;
    const double dn = dir.norm();
    if (dn < 1e-9) throw InfeasibleTraverseError("plan_traverse: degenerate crossing direction");
    dir /= dn;

    TraverseSegment seg;
    seg.tau = tau;
    seg.mu = kGravity * z_gap.z();  // cancels gravity along the gap's z-axis
    seg.accel = seg.mu * z_gap - Vec3(0.0, 0.0, kGravity);
    seg.roll = gap.roll_attitude();
    seg.crossing.p = gap.center;
    seg.crossing.v = v_cross * dir;
    seg.crossing.a = seg.accel;
    return seg;
}

enum class ApproachMode { kTraditional, kLearned };

/// Approach primitive from the hover state to the traverse entry state.
/// The traditional mode is the analytic generator. The learned mode uses the
/// same analytic trajectory for reference tracking but also queries the
/// planner network at the end time and reports its endpoint error.
inline Trajectory plan_approach(const State& hover, const State& traverse_entry, double t_approach,
                                ApproachMode mode = ApproachMode::kTraditional,
                                const PolicyNet* policy = nullptr,
                                double* learned_endpoint_error = nullptr) {
    const Trajectory traj = generate_primitive(hover, traverse_entry, t_approach);
    if (mode == ApproachMode::kLearned) {
        if (policy == nullptr)
            throw std::invalid_argument("plan_approach: learned mode needs a policy");
        std::array<double, 17> in{};
        const Vec3 dp = traverse_entry.p - hover.p;
        in[0] = t_approach;
        in[1] = dp.norm() / t_approach;  // vbar consistent with T = |dp|/vbar
        for (int i = 0; i < 3; ++i) {
            in[2 + i] = dp[i];
            in[5 + i] = hover.v[i];
            in[8 + i] = hover.a[i];
            in[11 + i] = traverse_entry.v[i];
            in[14 + i] = traverse_entry.a[i];
        }
        Eigen::Matrix<double, 17, 1> x;
        std::array<double, 9> pred{};
        if (policy->normalization_enabled()) {
            double s = 1.0;
            const auto nx = normalize_planner_input(in, &s);
            for (int i = 0; i < 17; ++i) x(i) = nx[i];
            const Eigen::VectorXd out = forward(policy->planner(), x);
            for (int i = 0; i < 9; ++i) pred[i] = out(i);
            pred = denormalize_planner_output(pred, s);
        } else {
            for (int i = 0; i < 17; ++i) x(i) = in[i];
            const Eigen::VectorXd out = forward(policy->planner(), x);
            for (int i = 0; i < 9; ++i) pred[i] = out(i);
        }
        const Vec3 end_err = Vec3(pred[0], pred[1], pred[2]) - dp;
        if (learned_endpoint_error != nullptr) *learned_endpoint_error = end_err.norm();
    }
    return traj;
}

struct RecoverGrid {
    double start = 0.5;
    double step = 0.3;
    double end = 3.0;

    std::vector<double> candidates() const {
        std::vector<double> out;
        for (double t = start; t <= end + 1e-9; t += step) out.push_back(t);
        return out;
    }
};

/// Searches the recover-duration grid in ascending order and returns the
/// first primitive whose sampled path stays inside the lab with drone-radius
/// margin and whose reference acceleration stays trackable (positive climb
/// authority, below the thrust ceiling). The hover target sits 1 m off the
/// ground, 2.5 m past the gap center along X.
inline Trajectory plan_recover(const State& exit_state, const GapPose& gap, const LabBounds& lab,
                               double drone_radius, const RecoverGrid& grid = {},
                               double hover_past_gap = 2.5, double hover_altitude = 1.0,
                               double sample_step = 0.02, double mu_max = 2.5 * kGravity) {
    if (!exit_state.finite()) throw std::invalid_argument("plan_recover: non-finite exit state");
    State target;
    target.p = Vec3(gap.center.x() + hover_past_gap, gap.center.y(), hover_altitude);

    for (double t_rec : grid.candidates()) {
        const Trajectory traj = generate_primitive(exit_state, target, t_rec);
        bool feasible = true;
        for (double t = 0.0; feasible; t += sample_step) {
            const double tc = std::min(t, t_rec);
            const State s = sample(traj, tc);
            if (!lab.contains(s.p, drone_radius)) feasible = false;
            const Vec3 f = s.a + Vec3(0.0, 0.0, kGravity);  // required specific force
            if (f.z() < 1.0 || f.norm() > 0.9 * mu_max) feasible = false;
            if (tc >= t_rec) break;
        }
        if (feasible) return traj;
    }
    throw RecoverInfeasibleError("plan_recover: no feasible duration on the grid");
}

enum class ControlMode { kTraditional, kEndToEnd, kReinforced };

inline const char* to_string(ControlMode m) {
    switch (m) {
        case ControlMode::kTraditional: return "TR";
        case ControlMode::kEndToEnd: return "E2E";
        case ControlMode::kReinforced: return "RL";
    }
    return "?";
}

inline ControlMode parse_mode(const std::string& s) {
    if (s == "TR" || s == "tr") return ControlMode::kTraditional;
    if (s == "E2E" || s == "e2e") return ControlMode::kEndToEnd;
    if (s == "RL" || s == "rl") return ControlMode::kReinforced;
    throw std::invalid_argument("unknown control mode: " + s);
}

struct MissionConfig {
    double v_cross = 2.0;     // m/s
    double tau_tr = 0.15;     // s, traverse half window
    double t_approach = 2.6;  // s
    RecoverGrid recover_grid;
    double hover_past_gap = 2.5;  // m
    double hover_altitude = 1.0;  // m
    double settle_time = 1.0;     // s of hover tracking appended after recover
};

struct MissionMetrics {
    bool crossed = false;
    bool collided = false;
    bool out_of_bounds = false;
    bool recover_feasible = true;
    double miss_distance = std::numeric_limits<double>::quiet_NaN();  // m at plane crossing
    double crossing_att_err = std::numeric_limits<double>::quiet_NaN();  // rad vs gap attitude
    double avg_omega = 0.0;      // rad/s
    double avg_thrust = 0.0;     // m/s^2
    double ff_latency_ms_p50 = 0.0;  // policy evaluation latency (E2E/RL)
    double ff_latency_ms_p99 = 0.0;
    std::uint64_t thrust_clamps = 0;
};

struct MissionResult {
    Trace trace;
    MissionMetrics metrics;
    MissionPlan plan;
};

namespace detail {

/// Builds the 17-dim planner input for the policy's mission problem: the
/// primitive from hover to the crossing state over t_approach + tau.
inline std::array<double, 17> policy_planner_input(const Vec3& start_p, const TraverseSegment& seg,
                                                   double t_total, double t_clock) {
    std::array<double, 17> in{};
    const Vec3 dp = seg.crossing.p - start_p;
    in[0] = std::clamp(t_clock, 0.0, t_total);
    in[1] = dp.norm() / t_total;
    for (int i = 0; i < 3; ++i) {
        in[2 + i] = dp[i];
        in[5 + i] = 0.0;                  // hover start velocity
        in[8 + i] = 0.0;                  // hover start acceleration
        in[11 + i] = seg.crossing.v[i];
        in[14 + i] = seg.crossing.a[i];
    }
    return in;
}

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = q * (v.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (idx - lo) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Runs one full mission in the requested mode and reports the trace plus
/// closed-loop metrics. TR tracks the analytic plan with the tracking law;
/// E2E/RL drive the simulator with the policy through approach and traverse
/// and hand off to the traditional recover search after the crossing window.
inline MissionResult run_mission(ControlMode mode, const Scenario& scenario, PolicyNet* policy,
                                 const MissionConfig& mission_cfg = {},
                                 const SimParams& sim_params = {}, const ControlGains& gains = {}) {
    scenario.validate();
    if (mode != ControlMode::kTraditional && policy == nullptr)
        throw std::invalid_argument("run_mission: E2E/RL modes need a policy");

    MissionResult result;
    MissionPlan& plan = result.plan;
    plan.start_hover = scenario.start_hover;
    plan.traverse = plan_traverse(scenario.gap, mission_cfg.v_cross, mission_cfg.tau_tr);
    const State hover = State{scenario.start_hover, Vec3::Zero(), Vec3::Zero()};
    if (mode == ControlMode::kTraditional) {
        plan.approach = plan_approach(hover, plan.traverse.entry(), mission_cfg.t_approach);
    } else {
        double err = 0.0;
        plan.approach = plan_approach(hover, plan.traverse.entry(), mission_cfg.t_approach,
                                      ApproachMode::kLearned, policy, &err);
        plan.learned_endpoint_error = err;
    }
    plan.t_traverse_start = mission_cfg.t_approach;
    plan.t_crossing = mission_cfg.t_approach + mission_cfg.tau_tr;
    plan.t_traverse_end = mission_cfg.t_approach + 2.0 * mission_cfg.tau_tr;

    // Policy mission problem: hover -> crossing state over approach + tau.
    const double t_policy = mission_cfg.t_approach + mission_cfg.tau_tr;
    if (policy != nullptr && policy->normalization_enabled())
        policy->set_mission_scale(t_policy);

    // The recover trajectory is planned on the fly from the actual state at
    // the traverse end; shared state for the command source below.
    struct RecoverState {
        std::optional<Trajectory> traj;
        double t_start = 0.0;
        bool infeasible = false;
        Vec3 emergency_hold = Vec3::Zero();
    };
    auto recover = std::make_shared<RecoverState>();
    std::vector<double> latencies_ms;
    latencies_ms.reserve(1024);

    auto reference_at = [&](double t) -> State {
        if (t < plan.t_traverse_start) return sample(plan.approach, t);
        return plan.traverse.at(std::min(t, plan.t_traverse_end) - plan.t_crossing);
    };

    // Thrust acts instantly in the plant while attitude follows a known
    // first-order lag, so the two channels are compensated separately: the
    // thrust magnitude tracks the current reference acceleration and the
    // attitude is commanded from the reference one lag constant ahead.
    auto tracking_cmd = [&](const FullState& st, const State& ref,
                            const Vec3& a_lead) -> AttitudeThrustCmd {
        ControlErrors err;
        err.e_p = ref.p - st.p;
        err.e_v = ref.v - st.v;
        err.e_a = ref.a;  // feed-forward convention: the acceleration slot carries a_d
        err.att = st.att;
        try {
            AttitudeThrustCmd cmd = track(err, ref.a, gains);
            if ((a_lead - ref.a).norm() > 1e-12) {
                const AttitudeThrustCmd led = track(err, a_lead, gains);
                cmd.roll = led.roll;
                cmd.pitch = led.pitch;
            }
            return cmd;
        } catch (const ThrustSingularityError&) {
            // The reference asks for more than free fall; the closest
            // realizable command is thrust-off, level.
            return AttitudeThrustCmd{0.0, 0.0, 0.0};
        }
    };

    auto recover_or_hold_cmd = [&](const FullState& st, double t) -> AttitudeThrustCmd {
        if (!recover->traj.has_value() && !recover->infeasible) {
            recover->t_start = t;
            try {
                recover->traj = plan_recover(State{st.p, st.v, st.a}, scenario.gap, scenario.lab,
                                             scenario.drone_radius, mission_cfg.recover_grid,
                                             mission_cfg.hover_past_gap, mission_cfg.hover_altitude,
                                             sim_params.dt, sim_params.mu_max);
            } catch (const RecoverInfeasibleError&) {
                recover->infeasible = true;
                recover->emergency_hold = st.p;
            }
        }
        State ref;
        Vec3 a_ff = Vec3::Zero();
        if (recover->infeasible) {
            ref.p = recover->emergency_hold;
        } else {
            const double tr = std::clamp(t - recover->t_start, 0.0, recover->traj->duration);
            ref = sample(*recover->traj, tr);
            const double tl = std::clamp(tr + sim_params.tau_att, 0.0, recover->traj->duration);
            a_ff = sample(*recover->traj, tl).a;
        }
        return tracking_cmd(st, ref, a_ff);
    };

    CommandSource source;
    if (mode == ControlMode::kTraditional) {
        source = [&](const FullState& st, double t) -> AttitudeThrustCmd {
            if (t < plan.t_traverse_start) {
                // The inner attitude loop is a first-order lag; advance the
                // acceleration feed-forward so the realized attitude matches
                // the reference on time.
                return tracking_cmd(st, reference_at(t), reference_at(t + sim_params.tau_att).a);
            }
            if (t < plan.t_traverse_end) {
                AttitudeThrustCmd cmd;
                cmd.roll = plan.traverse.roll;
                cmd.pitch = 0.0;
                cmd.thrust = plan.traverse.mu;
                return cmd;
            }
            return recover_or_hold_cmd(st, t);
        };
    } else {
        source = [&](const FullState& st, double t) -> AttitudeThrustCmd {
            if (t < plan.t_traverse_end) {
                PolicyObs obs;
                obs.planner_in = detail::policy_planner_input(scenario.start_hover, plan.traverse,
                                                              t_policy, t);
                obs.dp_c = st.p - scenario.start_hover;
                obs.v_c = st.v;
                obs.a_c = Vec3::Zero();  // feed-forward convention (see README)
                obs.att = st.att;
                const auto t0 = std::chrono::steady_clock::now();
                const AttitudeThrustCmd cmd = policy_eval(*policy, obs);
                const auto t1 = std::chrono::steady_clock::now();
                latencies_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                return cmd;
            }
            return recover_or_hold_cmd(st, t);
        };
    }

    const double recover_budget = mission_cfg.recover_grid.end + mission_cfg.settle_time;
    const double duration = plan.t_traverse_end + recover_budget;
    const std::uint64_t clamps_before = policy != nullptr ? policy->clamp_count() : 0;
    result.trace = rollout(source, scenario, duration, sim_params);

    // Metrics.
    MissionMetrics& m = result.metrics;
    m.collided = result.trace.has_event(EventKind::kCollision);
    m.out_of_bounds = result.trace.has_event(EventKind::kOutOfBounds);
    m.crossed = result.trace.has_event(EventKind::kGapCrossed);
    m.recover_feasible = !recover->infeasible;
    if (policy != nullptr) m.thrust_clamps = policy->clamp_count() - clamps_before;

    double omega_sum = 0.0, thrust_sum = 0.0;
    for (size_t i = 0; i < result.trace.states.size(); ++i) {
        omega_sum += result.trace.states[i].omega.norm();
        thrust_sum += result.trace.commands[i].thrust;
    }
    const double n = static_cast<double>(result.trace.states.size());
    m.avg_omega = omega_sum / n;
    m.avg_thrust = thrust_sum / n;

    if (auto crossing = result.trace.first_event(EventKind::kGapCrossed)) {
        // Interpolate the crossing point and attitude at the wall plane.
        const double tc = crossing->t;
        size_t k = 1;
        while (k < result.trace.states.size() && result.trace.states[k].t < tc - 1e-9) ++k;
        const FullState& s1 = result.trace.states[std::min(k, result.trace.states.size() - 1)];
        const FullState& s0 = result.trace.states[k > 0 ? k - 1 : 0];
        double f = 1.0;
        const double d0 = s0.p.x() - scenario.gap.center.x();
        const double d1 = s1.p.x() - scenario.gap.center.x();
        if (d1 != d0) f = std::clamp(d0 / (d0 - d1), 0.0, 1.0);
        const Vec3 p_cross = s0.p + f * (s1.p - s0.p);
        const Vec3 att_cross = s0.att + f * (s1.att - s0.att);
        m.miss_distance = (p_cross - scenario.gap.center).norm();
        m.crossing_att_err =
            euler_error(att_cross.x(), att_cross.y(), plan.traverse.roll, 0.0);
    }
    if (!latencies_ms.empty()) {
        m.ff_latency_ms_p50 = detail::percentile(latencies_ms, 0.5);
        m.ff_latency_ms_p99 = detail::percentile(latencies_ms, 0.99);
    }
    return result;
}

}  // namespace gapflight

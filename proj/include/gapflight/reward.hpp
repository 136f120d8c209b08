#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gapflight/mission.hpp"
#include "gapflight/policy.hpp"
#include "gapflight/rng.hpp"
#include "gapflight/sim.hpp"
#include "gapflight/types.hpp"

namespace gapflight {

/// Reward constants. The shaping weights penalize angular speed, angular
/// acceleration and translational jerk; C is the collision penalty applied as
/// a negative term, d_a the activation distance of the proximity reward, and
/// S the one-time bonus on first activation.
struct RewardConfig {
    double w_omega = 2.0 * 57.3;
    double w_alpha = 5.0 * 57.3;
    double w_j = 10.0;
    double collision_penalty = 1e9;  // applied with negative sign on collision
    double d_a = 0.15;               // m
    double w_r = 1000.0;
    double one_time_bonus = 5e5;     // S
    double dt = 0.02;                // s

    void validate() const {
        if (!(w_omega >= 0.0 && w_alpha >= 0.0 && w_j >= 0.0 && collision_penalty >= 0.0 &&
              d_a > 0.0 && w_r >= 0.0 && one_time_bonus >= 0.0 && dt > 0.0))
            throw std::invalid_argument("RewardConfig: invalid constants");
    }
};

/// One-step reward. Derivatives of omega and acceleration are realized as
/// backward differences over dt. `activated_now` reports whether the
/// proximity term fired this step (the caller latches it to pay S once).
inline double reward_step(const FullState& prev, const FullState& cur, const Vec3& gap_center,
                          const RewardConfig& cfg, bool collision_this_step,
                          bool already_activated, bool* activated_now = nullptr) {
    if (std::abs((cur.t - prev.t) - cfg.dt) > 1e-9)
        throw std::invalid_argument("reward_step: state pair not dt apart");

    const double omega = cur.omega.norm();
    const double alpha = ((cur.omega - prev.omega) / cfg.dt).norm();
    const double jerk = ((cur.a - prev.a) / cfg.dt).norm();
    double r_neg = -(cfg.w_omega * omega + cfg.w_alpha * alpha + cfg.w_j * jerk) * cfg.dt;
    if (collision_this_step) r_neg -= cfg.collision_penalty;

    const double proximity = std::max(0.0, cfg.d_a - (gap_center - cur.p).norm());
    double r_pos = cfg.w_r * proximity * cfg.dt;
    const bool active = proximity > 0.0;
    if (active && !already_activated) r_pos += cfg.one_time_bonus;
    if (activated_now != nullptr) *activated_now = active;
    return r_neg + r_pos;
}

struct EpisodeResult {
    Trace trace;
    std::vector<double> step_rewards;
    double episode_return = 0.0;
    bool bonus_paid = false;  // the one-time S
    bool crossed = false;
    bool collided = false;
};

/// Accumulates step rewards over a trace (states dt apart, events stamped).
inline EpisodeResult score_trace(Trace trace, const Vec3& gap_center, const RewardConfig& cfg) {
    EpisodeResult res;
    res.trace = std::move(trace);
    res.crossed = res.trace.has_event(EventKind::kGapCrossed);
    res.collided = res.trace.has_event(EventKind::kCollision);
    bool activated = false;
    for (size_t i = 1; i < res.trace.states.size(); ++i) {
        const FullState& cur = res.trace.states[i];
        bool collision_here = false;
        for (const auto& ev : res.trace.events)
            if (ev.kind == EventKind::kCollision && std::abs(ev.t - cur.t) < 1e-9)
                collision_here = true;
        bool active = false;
        const double r = reward_step(res.trace.states[i - 1], cur, gap_center, cfg,
                                     collision_here, activated, &active);
        if (active && !activated) res.bonus_paid = true;
        activated = activated || active;
        res.step_rewards.push_back(r);
        res.episode_return += r;
    }
    return res;
}

/// Episode observation/termination mirrors the mission's policy phase: the
/// policy flies from hover toward the crossing state; the episode ends a
/// short tail after the traverse window or on collision / leaving the lab.
inline EpisodeResult episode(PolicyNet& policy, const Scenario& scenario, const RewardConfig& cfg,
                             const MissionConfig& mission_cfg = {}, const SimParams& sim_params = {},
                             double tail = 0.5) {
    scenario.validate();
    const TraverseSegment seg = plan_traverse(scenario.gap, mission_cfg.v_cross, mission_cfg.tau_tr);
    const double t_policy = mission_cfg.t_approach + mission_cfg.tau_tr;
    if (policy.normalization_enabled()) policy.set_mission_scale(t_policy);

    CommandSource source = [&](const FullState& st, double t) -> AttitudeThrustCmd {
        PolicyObs obs;
        obs.planner_in = detail::policy_planner_input(scenario.start_hover, seg, t_policy, t);
        obs.dp_c = st.p - scenario.start_hover;
        obs.v_c = st.v;
        obs.a_c = Vec3::Zero();
        obs.att = st.att;
        return policy_eval(policy, obs);
    };

    const double duration = t_policy + mission_cfg.tau_tr + tail;
    Trace trace;
    try {
        trace = rollout(source, scenario, duration, sim_params);
    } catch (const RolloutFault& f) {
        // Truncated episode: keep the partial trace; the scorer sees no
        // crossing and the caller treats the fault step as a collision.
        trace = f.partial;
        trace.events.push_back({trace.states.empty() ? 0.0 : trace.states.back().t,
                                EventKind::kCollision});
    }
    return score_trace(std::move(trace), scenario.gap.center, cfg);
}

/// Generic-command-source variant (lets the traditional pipeline be scored
/// with the same reward).
inline EpisodeResult episode_with_source(const CommandSource& source, const Scenario& scenario,
                                         const RewardConfig& cfg, double duration,
                                         const SimParams& sim_params = {}) {
    Trace trace = rollout(source, scenario, duration, sim_params);
    return score_trace(std::move(trace), scenario.gap.center, cfg);
}

/// Time-averaged |omega| and commanded thrust over a trace.
inline std::pair<double, double> eval_metrics(const Trace& trace) {
    if (trace.states.empty()) throw std::invalid_argument("eval_metrics: empty trace");
    double omega_sum = 0.0, thrust_sum = 0.0;
    for (size_t i = 0; i < trace.states.size(); ++i) {
        omega_sum += trace.states[i].omega.norm();
        thrust_sum += trace.commands[i].thrust;
    }
    const double n = static_cast<double>(trace.states.size());
    return {omega_sum / n, thrust_sum / n};
}

/// Scenario randomization for fine-tuning: gap tilt, gap center jitter and
/// start-hover jitter drawn uniformly from configured ranges.
struct ScenarioRandomization {
    double tilt_min = 0.0;          // rad
    double tilt_max = 60.0 * M_PI / 180.0;
    double center_jitter = 0.5;     // m, each axis
    double hover_jitter = 0.5;      // m, each axis

    Scenario draw(const Scenario& base, Rng& rng) const {
        Scenario s = base;
        s.gap.tilt = rng.uniform(tilt_min, tilt_max);
        for (int i = 0; i < 3; ++i) {
            s.gap.center[i] = base.gap.center[i] + rng.uniform(-center_jitter, center_jitter);
            s.start_hover[i] = base.start_hover[i] + rng.uniform(-hover_jitter, hover_jitter);
        }
        return s;
    }
};

}  // namespace gapflight

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <string>

#include "gapflight/dataset.hpp"
#include "gapflight/mlp.hpp"
#include "gapflight/types.hpp"

namespace gapflight {

/// Observation record for the merged policy. The 29-dimensional policy input
/// is planner_in (17) plus the current relative position / velocity /
/// acceleration (9); the current Euler attitude rides along because the
/// controller half consumes it as its 12th..14th input dims.
struct PolicyObs {
    std::array<double, 17> planner_in{};
    Vec3 dp_c = Vec3::Zero();  // current position relative to the start point
    Vec3 v_c = Vec3::Zero();
    Vec3 a_c = Vec3::Zero();
    Vec3 att = Vec3::Zero();
};

inline constexpr std::uint32_t kPolicyWiringVersion = 1;

/// Planner and controller networks merged into one thrust-attitude policy.
/// Parameters are immutable after assembly; evaluation is pure, so instances
/// may be shared across rollout workers.
class PolicyNet {
   public:
    PolicyNet() = default;
    PolicyNet(Mlp planner, Mlp controller, bool normalize, double mu_max = 2.5 * kGravity)
        : planner_(std::move(planner)),
          controller_(std::move(controller)),
          normalize_(normalize),
          mu_max_(mu_max) {
        if (planner_.spec.input_dim != 17 || planner_.spec.output_dim != 9)
            throw AssemblyError("PolicyNet: planner must map 17 -> 9");
        if (controller_.spec.input_dim != 12 || controller_.spec.output_dim != 3)
            throw AssemblyError("PolicyNet: controller must map 12 -> 3");
    }

    PolicyNet(const PolicyNet& o)
        : planner_(o.planner_),
          controller_(o.controller_),
          normalize_(o.normalize_),
          scale_(o.scale_),
          mu_max_(o.mu_max_),
          clamp_count_(o.clamp_count_.load()) {}
    PolicyNet& operator=(const PolicyNet& o) {
        planner_ = o.planner_;
        controller_ = o.controller_;
        normalize_ = o.normalize_;
        scale_ = o.scale_;
        mu_max_ = o.mu_max_;
        clamp_count_.store(o.clamp_count_.load());
        return *this;
    }

    const Mlp& planner() const { return planner_; }
    const Mlp& controller() const { return controller_; }
    Mlp& mutable_planner() { return planner_; }
    Mlp& mutable_controller() { return controller_; }
    bool normalization_enabled() const { return normalize_; }
    double mission_scale() const { return scale_; }
    double mu_max() const { return mu_max_; }
    std::uint64_t clamp_count() const { return clamp_count_.load(); }

    /// Fixes the normalization scale for the coming mission (s = traveling
    /// time, computed once at plan time).
    void set_mission_scale(double s) {
        if (!(s > 0.0) || !std::isfinite(s))
            throw PolicyFault("PolicyNet: degenerate mission scale");
        scale_ = s;
    }

    void count_clamp() const { clamp_count_.fetch_add(1, std::memory_order_relaxed); }

   private:
    Mlp planner_;
    Mlp controller_;
    bool normalize_ = false;
    double scale_ = 1.0;
    double mu_max_ = 2.5 * kGravity;
    mutable std::atomic<std::uint64_t> clamp_count_{0};
};

/// Merges two trained networks into a policy.
inline PolicyNet assemble(Mlp planner, Mlp controller, bool normalize,
                          double mu_max = 2.5 * kGravity) {
    return PolicyNet(std::move(planner), std::move(controller), normalize, mu_max);
}

/// One policy evaluation: planner half (with the mission's fixed time-scaling
/// when enabled), error formation against the current state, controller half.
/// Thrust is clamped to [0, mu_max]; clamping events are counted.
inline AttitudeThrustCmd policy_eval(const PolicyNet& policy, const PolicyObs& obs) {
    Eigen::Matrix<double, 17, 1> x17;
    double s = 1.0;
    if (policy.normalization_enabled()) {
        // The planner boundary inputs are fixed over a mission, so the scale
        // derived from the observation equals the mission's s = T set at
        // plan time (no per-step recomputation against the remaining path).
        std::array<double, 17> nx;
        try {
            nx = normalize_planner_input(obs.planner_in, &s);
        } catch (const std::exception& e) {
            throw PolicyFault(std::string("policy_eval: degenerate scale: ") + e.what());
        }
        if (!(s > 0.0) || !std::isfinite(s)) throw PolicyFault("policy_eval: degenerate scale");
        for (int i = 0; i < 17; ++i) x17(i) = nx[i];
    } else {
        for (int i = 0; i < 17; ++i) x17(i) = obs.planner_in[i];
    }

    const Eigen::VectorXd plan_out = forward(policy.planner(), x17);
    std::array<double, 9> plan{};
    for (int i = 0; i < 9; ++i) plan[i] = plan_out(i);
    if (policy.normalization_enabled()) plan = denormalize_planner_output(plan, s);

    Eigen::Matrix<double, 12, 1> x12;
    for (int i = 0; i < 3; ++i) {
        x12(i) = plan[i] - obs.dp_c[i];
        x12(3 + i) = plan[3 + i] - obs.v_c[i];
        x12(6 + i) = plan[6 + i] - obs.a_c[i];
        x12(9 + i) = obs.att[i];
    }
    const Eigen::VectorXd out = forward(policy.controller(), x12);

    AttitudeThrustCmd cmd;
    cmd.roll = out(0);
    cmd.pitch = out(1);
    cmd.thrust = out(2);
    if (cmd.thrust < 0.0 || cmd.thrust > policy.mu_max()) {
        policy.count_clamp();
        cmd.thrust = std::clamp(cmd.thrust, 0.0, policy.mu_max());
    }
    if (!cmd.finite()) throw PolicyFault("policy_eval: non-finite command");
    return cmd;
}

}  // namespace gapflight

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gapflight/control.hpp"
#include "gapflight/rng.hpp"
#include "gapflight/trajectory.hpp"
#include "gapflight/types.hpp"

namespace gapflight {

/// One supervised pair for the planner network. Input order:
/// (t, vbar, dp_se 3, v_s 3, a_s 3, v_e 3, a_e 3); label (dp_l 3, v_l 3, a_l 3)
/// with dp_l relative to the start position.
struct PlannerSample {
    std::array<double, 17> x{};
    std::array<double, 9> y{};

    double t() const { return x[0]; }
    double vbar() const { return x[1]; }
    Vec3 dp() const { return Vec3(x[2], x[3], x[4]); }
};

/// One supervised pair for the controller network. Input order:
/// (e_p 3, e_v 3, e_a 3, euler 3); label (roll, pitch, thrust).
struct ControllerSample {
    std::array<double, 12> x{};
    std::array<double, 3> y{};
};

struct PlannerRanges {
    double dp = 30.0;        // each axis of dp_se in [-dp, dp], m
    double v = 10.0;         // boundary velocities, m/s
    double a = 10.0;         // boundary accelerations, m/s^2
    double vbar_min = 1.0;   // m/s
    double vbar_max = 7.0;
    double reject_v = 30.0;  // drop trajectory if any sampled |v| component exceeds
    double reject_a = 60.0;  // ... or any sampled |a| component

    void validate() const {
        if (!(dp > 0.0 && v >= 0.0 && a >= 0.0 && vbar_min > 0.0 && vbar_max >= vbar_min))
            throw RangeConfigError("PlannerRanges: invalid box");
    }
};

struct ControllerRanges {
    double e_p = 0.2;        // m per axis
    double e_v = 0.3;        // m/s
    double e_a = 10.0;       // m/s^2
    double euler_deg = 30.0; // attitude inputs, degrees per axis

    static ControllerRanges short_range() { return {0.2, 0.3, 10.0, 30.0}; }
    static ControllerRanges large_range() { return {10.0, 5.0, 10.0, 180.0}; }

    void validate() const {
        if (!(e_p >= 0.0 && e_v >= 0.0 && e_a >= 0.0 && euler_deg >= 0.0))
            throw RangeConfigError("ControllerRanges: invalid box");
    }
};

struct PlannerDataset {
    std::vector<PlannerSample> samples;  // grouped: points_per_traj consecutive per trajectory
    int n_traj = 0;                      // kept trajectories
    int points_per_traj = 0;
    int n_rejected = 0;
    PlannerRanges ranges;
    std::uint64_t seed = 0;

    double retention() const {
        const int drawn = n_traj + n_rejected;
        return drawn == 0 ? 0.0 : static_cast<double>(n_traj) / drawn;
    }
};

struct ControllerDataset {
    std::vector<ControllerSample> samples;
    ControllerRanges ranges;
    ControlGains gains;
    std::uint64_t seed = 0;
    int n_resampled = 0;
};

/// Draws random fully-constrained boundary states, generates the jerk-optimal
/// primitive, and samples it uniformly (endpoints included). Trajectories
/// with excessive sampled velocity/acceleration are dropped.
inline PlannerDataset gen_planner_dataset(int n_traj, int points_per_traj,
                                          const PlannerRanges& ranges, std::uint64_t seed) {
    if (n_traj < 1) throw std::invalid_argument("gen_planner_dataset: n_traj must be >= 1");
    if (points_per_traj < 2)
        throw std::invalid_argument("gen_planner_dataset: need at least 2 points per trajectory");
    ranges.validate();

    PlannerDataset ds;
    ds.points_per_traj = points_per_traj;
    ds.ranges = ranges;
    ds.seed = seed;
    ds.samples.reserve(static_cast<size_t>(n_traj) * points_per_traj);

    int kept = 0;
    std::uint64_t draw_index = 0;
    std::vector<PlannerSample> traj_samples(points_per_traj);
    while (kept < n_traj) {
        // Per-draw derived seed keeps generation order-independent.
        Rng rng(derive_seed(seed, draw_index++));

        Vec3 dp, v_s, a_s, v_e, a_e;
        for (int i = 0; i < 3; ++i) {
            dp[i] = rng.uniform(-ranges.dp, ranges.dp);
            v_s[i] = rng.uniform(-ranges.v, ranges.v);
            a_s[i] = rng.uniform(-ranges.a, ranges.a);
            v_e[i] = rng.uniform(-ranges.v, ranges.v);
            a_e[i] = rng.uniform(-ranges.a, ranges.a);
        }
        const double vbar = rng.uniform(ranges.vbar_min, ranges.vbar_max);
        if (dp.norm() == 0.0) {  // zero displacement cannot define a duration
            ++ds.n_rejected;
            continue;
        }
        const double T = travel_time(dp, vbar);

        State start{Vec3::Zero(), v_s, a_s};
        State end{dp, v_e, a_e};
        const Trajectory traj = generate_primitive(start, end, T);

        bool ok = true;
        for (int k = 0; k < points_per_traj; ++k) {
            const double t = T * static_cast<double>(k) / (points_per_traj - 1);
            const State s = sample(traj, std::min(t, T));
            if (s.v.cwiseAbs().maxCoeff() > ranges.reject_v ||
                s.a.cwiseAbs().maxCoeff() > ranges.reject_a) {
                ok = false;
                break;
            }
            PlannerSample& ps = traj_samples[k];
            ps.x = {t, vbar, dp.x(), dp.y(), dp.z(), v_s.x(), v_s.y(), v_s.z(),
                    a_s.x(), a_s.y(), a_s.z(), v_e.x(), v_e.y(), v_e.z(),
                    a_e.x(), a_e.y(), a_e.z()};
            ps.y = {s.p.x(), s.p.y(), s.p.z(), s.v.x(), s.v.y(), s.v.z(),
                    s.a.x(), s.a.y(), s.a.z()};
        }
        if (!ok) {
            ++ds.n_rejected;
            if (ds.n_rejected >= 100 && ds.retention() < 0.1)
                throw RangeConfigError("gen_planner_dataset: rejection rate above 90%");
            continue;
        }
        ds.samples.insert(ds.samples.end(), traj_samples.begin(), traj_samples.end());
        ++kept;
    }
    ds.n_traj = kept;
    return ds;
}

// ---------------------------------------------------------------------------
// Time-scaling normalization. The scale factor is the traveling time,
// s = T = |dp_se| / vbar. Scaled quantities: t' = t/s, vbar' = s^2 vbar,
// dp' = s dp, v' = s^2 v, a' = s^3 a; outputs rescale by the inverse powers.
// ---------------------------------------------------------------------------

inline double planner_scale_factor(const std::array<double, 17>& raw) {
    const Vec3 dp(raw[2], raw[3], raw[4]);
    const double vbar = raw[1];
    if (!(vbar > 0.0)) throw std::invalid_argument("normalize: vbar must be positive");
    if (dp.norm() == 0.0) throw DegenerateDurationError("normalize: zero displacement");
    return dp.norm() / vbar;
}

inline std::array<double, 17> normalize_planner_input(const std::array<double, 17>& raw,
                                                      double* scale_out = nullptr) {
    const double s = planner_scale_factor(raw);
    const double s2 = s * s, s3 = s2 * s;
    std::array<double, 17> out;
    out[0] = raw[0] / s;       // t' in [0, 1]
    out[1] = s2 * raw[1];      // vbar'
    for (int i = 0; i < 3; ++i) {
        out[2 + i] = s * raw[2 + i];    // dp'
        out[5 + i] = s2 * raw[5 + i];   // v_s'
        out[8 + i] = s3 * raw[8 + i];   // a_s'
        out[11 + i] = s2 * raw[11 + i]; // v_e'
        out[14 + i] = s3 * raw[14 + i]; // a_e'
    }
    if (scale_out != nullptr) *scale_out = s;
    return out;
}

/// Scales a label into the normalized frame (training targets for the
/// normalization settings).
inline std::array<double, 9> normalize_planner_label(const std::array<double, 9>& label, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("normalize_planner_label: scale must be positive");
    const double s2 = s * s, s3 = s2 * s;
    std::array<double, 9> out;
    for (int i = 0; i < 3; ++i) {
        out[i] = s * label[i];
        out[3 + i] = s2 * label[3 + i];
        out[6 + i] = s3 * label[6 + i];
    }
    return out;
}

/// Maps a normalized network output back to raw units:
/// dp = dp'/s, v = v'/s^2, a = a'/s^3.
inline std::array<double, 9> denormalize_planner_output(const std::array<double, 9>& scaled,
                                                        double s) {
    if (!(s > 0.0)) throw std::invalid_argument("denormalize: scale must be positive");
    const double s2 = s * s, s3 = s2 * s;
    std::array<double, 9> out;
    for (int i = 0; i < 3; ++i) {
        out[i] = scaled[i] / s;
        out[3 + i] = scaled[3 + i] / s2;
        out[6 + i] = scaled[6 + i] / s3;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation (exact by linearity of the primitive generator).
// ---------------------------------------------------------------------------

struct AugmentMode {
    enum Kind { kFlip, kScale } kind = kFlip;
    double k = 1.0;  // scale factor for kScale, in (0, 5]

    static AugmentMode flip() { return {kFlip, 1.0}; }
    static AugmentMode scale(double k) { return {kScale, k}; }
};

/// Sign flip negates every spatial field of input and label; scaling
/// multiplies all spatial fields plus vbar by k. Both keep t (the traveling
/// time is invariant under either transform).
inline PlannerSample augment(const PlannerSample& sample, const AugmentMode& mode) {
    PlannerSample out = sample;
    if (mode.kind == AugmentMode::kFlip) {
        for (int i = 2; i < 17; ++i) out.x[i] = -out.x[i];
        for (int i = 0; i < 9; ++i) out.y[i] = -out.y[i];
    } else {
        if (!(mode.k > 0.0 && mode.k <= 5.0))
            throw std::invalid_argument("augment: scale factor outside (0, 5]");
        out.x[1] *= mode.k;
        for (int i = 2; i < 17; ++i) out.x[i] *= mode.k;
        for (int i = 0; i < 9; ++i) out.y[i] *= mode.k;
    }
    return out;
}

/// Uniform random controller inputs labeled by the tracking law; draws whose
/// desired force is singular (free fall or outside the upper half space) are
/// resampled.
inline ControllerDataset gen_controller_dataset(const ControllerRanges& ranges, int n,
                                                std::uint64_t seed,
                                                const ControlGains& gains = {}) {
    if (n < 1) throw std::invalid_argument("gen_controller_dataset: n must be >= 1");
    ranges.validate();

    ControllerDataset ds;
    ds.ranges = ranges;
    ds.gains = gains;
    ds.seed = seed;
    ds.samples.reserve(n);
    const double euler_rad = ranges.euler_deg * M_PI / 180.0;

    std::uint64_t draw_index = 0;
    while (static_cast<int>(ds.samples.size()) < n) {
        Rng rng(derive_seed(seed ^ 0xC0117011ULL, draw_index++));
        ControlErrors err;
        for (int i = 0; i < 3; ++i) {
            err.e_p[i] = rng.uniform(-ranges.e_p, ranges.e_p);
            err.e_v[i] = rng.uniform(-ranges.e_v, ranges.e_v);
            err.e_a[i] = rng.uniform(-ranges.e_a, ranges.e_a);
            err.att[i] = rng.uniform(-euler_rad, euler_rad);
        }
        AttitudeThrustCmd label;
        try {
            // The acceleration-error input doubles as the feed-forward term.
            label = track(err, err.e_a, gains);
        } catch (const ThrustSingularityError&) {
            ++ds.n_resampled;
            continue;
        }
        ControllerSample cs;
        cs.x = {err.e_p.x(), err.e_p.y(), err.e_p.z(), err.e_v.x(), err.e_v.y(), err.e_v.z(),
                err.e_a.x(), err.e_a.y(), err.e_a.z(), err.att.x(), err.att.y(), err.att.z()};
        cs.y = {label.roll, label.pitch, label.thrust};
        ds.samples.push_back(cs);
    }
    return ds;
}

}  // namespace gapflight

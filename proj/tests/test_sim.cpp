#include <catch2/catch.hpp>

#include <cstring>

#include "gapflight/sim.hpp"

using namespace gapflight;

namespace {

Scenario default_scenario(double tilt = 0.0) {
    Scenario s;
    s.gap.tilt = tilt;
    return s;
}

}  // namespace

TEST_CASE("hover equilibrium") {
    FullState s = hover_state(Vec3(0, 0, 1));
    const AttitudeThrustCmd cmd{0.0, 0.0, kGravity};
    for (int i = 0; i < 50; ++i) {
        s = step(s, cmd, 0.02);
        CHECK(s.v.norm() == Approx(0.0).margin(1e-9));
        CHECK((s.p - Vec3(0, 0, 1)).norm() == Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("free fall and gravity") {
    FullState s = hover_state(Vec3(0, 0, 5));
    const FullState next = step(s, AttitudeThrustCmd{0, 0, 0}, 0.02);
    CHECK(next.v.z() == Approx(-kGravity * 0.02).margin(1e-9));
    CHECK(next.v.x() == Approx(0.0).margin(1e-12));
}

TEST_CASE("attitude first-order lag") {
    SimParams params;
    params.tau_att = 0.08;
    FullState s = hover_state(Vec3::Zero());
    s.p.z() = 2.0;
    const AttitudeThrustCmd cmd{0.4, 0.0, kGravity};
    const FullState next = step(s, cmd, 0.02, params);
    CHECK(next.att.x() == Approx(0.4 * (1.0 - std::exp(-0.25))).margin(1e-12));
    // omega is the exact lag derivative at the end of the step.
    CHECK(next.omega.x() == Approx((0.4 - next.att.x()) / 0.08).margin(1e-12));
}

TEST_CASE("step validates inputs") {
    FullState s = hover_state(Vec3(0, 0, 1));
    CHECK_THROWS_AS(step(s, AttitudeThrustCmd{0, 0, std::nan("")}, 0.02), SimulationFault);
    CHECK_THROWS_AS(step(s, AttitudeThrustCmd{}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(step(s, AttitudeThrustCmd{}, 0.1), std::invalid_argument);
}

TEST_CASE("thrust saturation") {
    SimParams params;
    FullState s = hover_state(Vec3(0, 0, 1));
    const FullState next = step(s, AttitudeThrustCmd{0, 0, 100.0}, 0.02, params);
    // Saturated to mu_max: net upward acceleration mu_max - g.
    CHECK(next.a.z() == Approx(params.mu_max - kGravity).margin(1e-9));
}

TEST_CASE("ballistic energy conservation") {
    FullState s = hover_state(Vec3(0, 0, 50));
    s.v = Vec3(2.0, -1.0, 3.0);
    const auto energy = [](const FullState& st) {
        return 0.5 * st.v.squaredNorm() + kGravity * st.p.z();
    };
    const double e0 = energy(s);
    for (int i = 0; i < 100; ++i) s = step(s, AttitudeThrustCmd{0, 0, 0}, 0.02);
    CHECK(energy(s) == Approx(e0).epsilon(1e-6));
}

TEST_CASE("collision geometry") {
    const Scenario sc = default_scenario();

    FullState at_center;
    at_center.p = sc.gap.center;
    auto ev = check_collision(at_center, sc);
    REQUIRE(ev.has_value());
    CHECK(*ev == EventKind::kGapCrossed);

    // Offset along the long side by width/2 + radius: wall strike.
    FullState offset = at_center;
    offset.p += sc.gap.long_axis() * (sc.gap.width / 2.0 + sc.drone_radius);
    ev = check_collision(offset, sc);
    REQUIRE(ev.has_value());
    CHECK(*ev == EventKind::kCollision);

    // Hovering in the interior: nothing.
    FullState interior;
    interior.p = Vec3(-2.0, 0.0, 1.0);
    CHECK_FALSE(check_collision(interior, sc).has_value());

    // Ground contact.
    FullState low = interior;
    low.p.z() = sc.drone_radius * 0.9;
    ev = check_collision(low, sc);
    REQUIRE(ev.has_value());
    CHECK(*ev == EventKind::kCollision);

    // Outside the lab.
    FullState outside = interior;
    outside.p.x() = sc.lab.max.x() + 0.1;
    ev = check_collision(outside, sc);
    REQUIRE(ev.has_value());
    CHECK(*ev == EventKind::kOutOfBounds);

    // Sign-change crossing through the opening.
    FullState before = at_center;
    before.p.x() -= 0.5;
    FullState after = at_center;
    after.p.x() += 0.5;
    const Vec3 prev_p = before.p;
    ev = check_collision(after, sc, before.p.x() - sc.gap.center.x(), &prev_p);
    REQUIRE(ev.has_value());
    CHECK(*ev == EventKind::kGapCrossed);
}

TEST_CASE("tilted gap collision frame") {
    const double tilt = 60.0 * M_PI / 180.0;
    const Scenario sc = default_scenario(tilt);
    // A point just beyond the short half-side along the gap's body-z axis
    // collides, while the same offset along the long axis stays inside.
    FullState along_short;
    along_short.p = sc.gap.center + sc.gap.body_z_axis() * (sc.gap.height / 2.0 + 0.01);
    auto ev = check_collision(along_short, sc);
    REQUIRE(ev.has_value());
    CHECK(*ev == EventKind::kCollision);

    FullState along_long;
    along_long.p = sc.gap.center + sc.gap.long_axis() * (sc.gap.height / 2.0 + 0.01);
    ev = check_collision(along_long, sc);
    // Inside the opening (long half-side is 0.4) but near the plane: the rim
    // is further than the drone radius only if the edge margin says so; with
    // the default geometry this point is interior and un-collided.
    CHECK((!ev.has_value() || *ev == EventKind::kGapCrossed));
}

TEST_CASE("rollout hover and determinism") {
    const Scenario sc = default_scenario();
    const CommandSource hover_cmd = [](const FullState&, double) {
        return AttitudeThrustCmd{0, 0, kGravity};
    };
    const Trace t1 = rollout(hover_cmd, sc, 1.0);
    CHECK(t1.states.size() == 51);
    for (const auto& s : t1.states) CHECK((s.p - sc.start_hover).norm() < 1e-9);
    CHECK(t1.events.empty());

    const Trace t2 = rollout(hover_cmd, sc, 1.0);
    REQUIRE(t1.states.size() == t2.states.size());
    for (size_t i = 0; i < t1.states.size(); ++i) {
        CHECK(std::memcmp(t1.states[i].p.data(), t2.states[i].p.data(), 3 * sizeof(double)) == 0);
        CHECK(std::memcmp(t1.states[i].v.data(), t2.states[i].v.data(), 3 * sizeof(double)) == 0);
    }
}

TEST_CASE("rollout terminates on ground collision") {
    const Scenario sc = default_scenario();
    const CommandSource cut = [](const FullState&, double) { return AttitudeThrustCmd{0, 0, 0}; };
    const Trace t = rollout(cut, sc, 5.0);
    REQUIRE(t.has_event(EventKind::kCollision));
    // Ballistic fall to the sphere-bottom altitude: t = sqrt(2h/g).
    const double t_expect =
        std::sqrt(2.0 * (sc.start_hover.z() - sc.drone_radius) / kGravity);
    CHECK(t.events.front().t == Approx(t_expect).margin(0.03));
    CHECK(t.states.size() < 5.0 / 0.02 + 2);
}

TEST_CASE("rollout wraps command faults with the partial trace") {
    const Scenario sc = default_scenario();
    int calls = 0;
    const CommandSource flaky = [&](const FullState&, double) -> AttitudeThrustCmd {
        if (++calls > 10) throw std::runtime_error("dead link");
        return AttitudeThrustCmd{0, 0, kGravity};
    };
    try {
        rollout(flaky, sc, 1.0);
        FAIL("expected RolloutFault");
    } catch (const RolloutFault& f) {
        CHECK(f.partial.states.size() == 10);
    }
}

TEST_CASE("step-size robustness") {
    Scenario sc = default_scenario();
    sc.lab.min = Vec3(-100, -100, 0);  // keep the scripted maneuver in bounds
    sc.lab.max = Vec3(100, 100, 200);
    sc.start_hover = Vec3(-3.5, 0, 50);
    sc.gap.center = Vec3(90, 0, 1.5);  // wall far away from the maneuver
    // Open-loop scripted maneuver held on the coarse grid in both runs, so
    // the comparison isolates integration error from input quantization.
    const CommandSource script = [](const FullState&, double t) {
        const double tq = std::floor(t / 0.02 + 1e-9) * 0.02;
        return AttitudeThrustCmd{0.3 * std::sin(2.0 * tq), 0.2 * std::cos(1.5 * tq),
                                 kGravity + 2.0 * std::sin(tq)};
    };
    SimParams coarse, fine;
    coarse.dt = 0.02;
    fine.dt = 0.01;
    const Trace tc = rollout(script, sc, 3.0, coarse);
    const Trace tf = rollout(script, sc, 3.0, fine);
    REQUIRE(tc.events.empty());
    REQUIRE(tf.events.empty());
    double max_dev = 0.0;
    for (size_t i = 0; i < tc.states.size(); ++i) {
        const size_t j = 2 * i;
        if (j >= tf.states.size()) break;
        max_dev = std::max(max_dev, (tc.states[i].p - tf.states[j].p).norm());
    }
    CHECK(max_dev < 1e-3);

    const CommandSource hover_cmd = [](const FullState&, double) {
        return AttitudeThrustCmd{0, 0, kGravity};
    };
    const Trace hc = rollout(hover_cmd, sc, 3.0, coarse);
    const Trace hf = rollout(hover_cmd, sc, 3.0, fine);
    double hover_dev = 0.0;
    for (size_t i = 0; i < hc.states.size(); ++i)
        hover_dev = std::max(hover_dev, (hc.states[i].p - hf.states[2 * i].p).norm());
    CHECK(hover_dev < 1e-8);
}

#include <catch2/catch.hpp>

#include "gapflight/rng.hpp"
#include "gapflight/trajectory.hpp"
#include "support/oracles.hpp"

using namespace gapflight;

namespace {

State rest_at(const Vec3& p) {
    State s;
    s.p = p;
    return s;
}

State random_state(Rng& rng, double p_box, double v_box, double a_box) {
    State s;
    for (int i = 0; i < 3; ++i) {
        s.p[i] = rng.uniform(-p_box, p_box);
        s.v[i] = rng.uniform(-v_box, v_box);
        s.a[i] = rng.uniform(-a_box, a_box);
    }
    return s;
}

}  // namespace

TEST_CASE("travel_time basics") {
    CHECK(travel_time(Vec3(3, 4, 0), 2.5) == Approx(2.0));
    CHECK(travel_time(Vec3(6, 0, 0), 3.0) == Approx(2.0));
    CHECK_THROWS_AS(travel_time(Vec3(1, 0, 0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(travel_time(Vec3(1, 0, 0), -1.0), std::invalid_argument);
    CHECK_THROWS_AS(travel_time(Vec3(0, 0, 0), 1.0), DegenerateDurationError);
}

TEST_CASE("rest-to-rest zero displacement is constant") {
    const State rest{Vec3(1, 2, 3), Vec3::Zero(), Vec3::Zero()};
    const Trajectory traj = generate_primitive(rest, rest, 1.0);
    for (double t : {0.0, 0.25, 0.7, 1.0}) {
        const State s = sample(traj, t);
        CHECK(s.p.isApprox(Vec3(1, 2, 3), 1e-12));
        CHECK(s.v.norm() == Approx(0.0).margin(1e-12));
        CHECK(s.a.norm() == Approx(0.0).margin(1e-12));
    }
    CHECK(mean_squared_jerk(traj) == Approx(0.0).margin(1e-12));
}

TEST_CASE("1-D rest-to-rest gives the classic quintic") {
    const Trajectory traj = generate_primitive(State{}, rest_at(Vec3(1, 0, 0)), 1.0);
    // p(t) = 6t^5 - 15t^4 + 10t^3 on the x axis.
    const std::array<double, 6> expect = {0, 0, 0, 10, -15, 6};
    for (int i = 0; i < 6; ++i) CHECK(traj.coeffs[0][i] == Approx(expect[i]).margin(1e-9));

    // Against the independent elimination oracle as well.
    const auto oracle = oracles::quintic_by_elimination(0, 0, 0, 1, 0, 0, 1.0);
    for (int i = 0; i < 6; ++i) CHECK(traj.coeffs[0][i] == Approx(oracle[i]).margin(1e-12));

    const State mid = sample(traj, 0.5);
    CHECK(mid.p.x() == Approx(0.5).margin(1e-12));
    CHECK(mid.v.x() == Approx(1.875).margin(1e-12));
    CHECK(mid.a.x() == Approx(0.0).margin(1e-12));
}

TEST_CASE("generation rejects degenerate durations") {
    State s, e;
    e.p = Vec3(1, 0, 0);
    CHECK_THROWS_AS(generate_primitive(s, e, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(generate_primitive(s, e, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(generate_primitive(s, e, 1e-7), NumericConditioningError);
    State bad = e;
    bad.v.x() = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(generate_primitive(s, bad, 1.0), std::invalid_argument);
}

TEST_CASE("sample boundary exactness") {
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const State start = random_state(rng, 10, 5, 5);
        const State end = random_state(rng, 10, 5, 5);
        const double T = rng.uniform(0.5, 5.0);
        const Trajectory traj = generate_primitive(start, end, T);

        const State s0 = sample(traj, 0.0);
        CHECK((s0.p - start.p).norm() == Approx(0.0).margin(1e-12));
        CHECK((s0.v - start.v).norm() == Approx(0.0).margin(1e-12));
        CHECK((s0.a - start.a).norm() == Approx(0.0).margin(1e-12));

        const State s1 = sample(traj, T);
        CHECK((s1.p - end.p).norm() == Approx(0.0).margin(1e-9));
        CHECK((s1.v - end.v).norm() == Approx(0.0).margin(1e-9));
        CHECK((s1.a - end.a).norm() == Approx(0.0).margin(1e-9));
    }
    const Trajectory traj = generate_primitive(State{}, rest_at(Vec3(1, 0, 0)), 1.0);
    CHECK_THROWS_AS(sample(traj, -0.01), std::out_of_range);
    CHECK_THROWS_AS(sample(traj, 1.01), std::out_of_range);
}

TEST_CASE("generator is linear in the boundary states") {
    Rng rng(12);
    for (int rep = 0; rep < 1000; ++rep) {
        const State s1 = random_state(rng, 8, 4, 4);
        const State e1 = random_state(rng, 8, 4, 4);
        const State s2 = random_state(rng, 8, 4, 4);
        const State e2 = random_state(rng, 8, 4, 4);
        const double T = rng.uniform(0.5, 4.0);
        const double alpha = rng.uniform(-2.0, 2.0), beta = rng.uniform(-2.0, 2.0);

        State sc, ec;
        sc.p = alpha * s1.p + beta * s2.p;
        sc.v = alpha * s1.v + beta * s2.v;
        sc.a = alpha * s1.a + beta * s2.a;
        ec.p = alpha * e1.p + beta * e2.p;
        ec.v = alpha * e1.v + beta * e2.v;
        ec.a = alpha * e1.a + beta * e2.a;

        const Trajectory t1 = generate_primitive(s1, e1, T);
        const Trajectory t2 = generate_primitive(s2, e2, T);
        const Trajectory tc = generate_primitive(sc, ec, T);
        const double t = rng.uniform(0.0, T);
        const State a = sample(t1, t), b = sample(t2, t), c = sample(tc, t);
        CHECK((c.p - (alpha * a.p + beta * b.p)).norm() == Approx(0.0).margin(1e-9));
        CHECK((c.v - (alpha * a.v + beta * b.v)).norm() == Approx(0.0).margin(1e-9));
        CHECK((c.a - (alpha * a.a + beta * b.a)).norm() == Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("time-scaling law") {
    Rng rng(13);
    for (int rep = 0; rep < 100; ++rep) {
        const State start = random_state(rng, 5, 3, 3);
        const State end = random_state(rng, 5, 3, 3);
        const double T = rng.uniform(1.0, 3.0);
        const double k = rng.uniform(0.5, 3.0);  // scale factor s

        State start_k, end_k;
        start_k.p = k * start.p;
        start_k.v = k * k * start.v;
        start_k.a = k * k * k * start.a;
        end_k.p = k * end.p;
        end_k.v = k * k * end.v;
        end_k.a = k * k * k * end.a;

        const Trajectory base = generate_primitive(start, end, T);
        const Trajectory scaled = generate_primitive(start_k, end_k, T / k);
        const double t = rng.uniform(0.0, T);
        const State sb = sample(base, t);
        const State ss = sample(scaled, t / k);
        CHECK((ss.p - k * sb.p).norm() == Approx(0.0).margin(1e-7 * std::max(1.0, sb.p.norm())));
        CHECK((ss.v - k * k * sb.v).norm() ==
              Approx(0.0).margin(1e-7 * std::max(1.0, k * k * sb.v.norm())));
        CHECK((ss.a - k * k * k * sb.a).norm() ==
              Approx(0.0).margin(1e-7 * std::max(1.0, k * k * k * sb.a.norm())));
    }
}

TEST_CASE("mean squared jerk: analytic vs quadrature") {
    // The classic quintic: msj = 720 over T = 1.
    const Trajectory classic = generate_primitive(State{}, rest_at(Vec3(1, 0, 0)), 1.0);
    CHECK(mean_squared_jerk(classic) == Approx(720.0).margin(1e-9));

    Rng rng(14);
    for (int rep = 0; rep < 20; ++rep) {
        const State start = random_state(rng, 5, 3, 3);
        const State end = random_state(rng, 5, 3, 3);
        const double T = rng.uniform(1.0, 3.0);
        const Trajectory traj = generate_primitive(start, end, T);
        const double analytic = mean_squared_jerk(traj);
        const double quad = oracles::mean_squared_jerk_quadrature(traj, 4000);
        CHECK(analytic == Approx(quad).epsilon(1e-8));
    }
}

TEST_CASE("mean squared jerk scales as k^-6 under time stretch") {
    const State start{};
    const State end = rest_at(Vec3(2, -1, 0.5));
    const Trajectory base = generate_primitive(start, end, 1.0);
    for (double k : {2.0, 3.0, 0.5}) {
        const Trajectory stretched = generate_primitive(start, end, k);
        CHECK(mean_squared_jerk(stretched) ==
              Approx(mean_squared_jerk(base) / std::pow(k, 6)).epsilon(1e-9));
    }
}

TEST_CASE("collocation oracle agreement") {
    Rng rng(15);
    for (int rep = 0; rep < 20; ++rep) {
        const State start = random_state(rng, 10, 5, 5);
        const State end = random_state(rng, 10, 5, 5);
        const double T = rng.uniform(1.0, 4.0);
        const Trajectory traj = generate_primitive(start, end, T);
        const auto oracle = oracles::jerk_optimal_collocation(start, end, T, 8000);

        double max_dev = 0.0;
        for (size_t k = 0; k < oracle.times.size(); ++k) {
            const State s = sample(traj, std::min(oracle.times[k], T));
            max_dev = std::max(max_dev, (s.p - oracle.positions[k]).norm());
        }
        CHECK(max_dev < 1e-4);

        const double msj = mean_squared_jerk(traj);
        CHECK(msj == Approx(oracle.mean_squared_jerk).epsilon(0.01));
        // The quintic is the true optimum; the discrete relaxation cannot
        // beat it (up to rounding).
        CHECK(msj <= oracle.mean_squared_jerk * (1.0 + 1e-9));
    }
}

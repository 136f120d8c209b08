#include <catch2/catch.hpp>

#include "gapflight/control.hpp"
#include "gapflight/rng.hpp"
#include "support/oracles.hpp"

using namespace gapflight;

TEST_CASE("desired_rotation basics") {
    CHECK(desired_rotation(0.0, 0.0).isApprox(Mat3::Identity(), 1e-15));

    // roll = 30 deg: second and third rows carry sin/cos 30.
    const Mat3 r = desired_rotation(M_PI / 6.0, 0.0);
    CHECK(r(1, 1) == Approx(std::sqrt(3.0) / 2.0));
    CHECK(r(1, 2) == Approx(0.5));
    CHECK(r(2, 1) == Approx(-0.5));
    CHECK(r(2, 2) == Approx(std::sqrt(3.0) / 2.0));

    Rng rng(21);
    for (int rep = 0; rep < 500; ++rep) {
        const double phi = rng.uniform(-M_PI, M_PI);
        const double theta = rng.uniform(-M_PI, M_PI);
        const Mat3 m = desired_rotation(phi, theta);
        CHECK((m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(m.determinant() == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("euler_error basics and oracle") {
    CHECK(euler_error(0.3, -0.2, 0.3, -0.2) == Approx(0.0).margin(1e-12));
    CHECK(euler_error(0.5236, 0.0, 0.0, 0.0) == Approx(0.5236).margin(1e-9));
    // Common pitch cancels: still a single-axis relative rotation.
    CHECK(euler_error(0.45, 0.7, 0.35, 0.7) == Approx(0.1).margin(1e-9));

    Rng rng(22);
    for (int rep = 0; rep < 1000; ++rep) {
        const double pa = rng.uniform(-1.2, 1.2), ta = rng.uniform(-1.2, 1.2);
        const double pb = rng.uniform(-1.2, 1.2), tb = rng.uniform(-1.2, 1.2);
        const double lib = euler_error(pa, ta, pb, tb);
        const double quat = oracles::quaternion_relative_angle(pa, ta, pb, tb);
        CHECK(lib == Approx(quat).margin(1e-9));
        CHECK(lib >= 0.0);
        CHECK(lib <= M_PI);
        // Symmetry.
        CHECK(euler_error(pb, tb, pa, ta) == Approx(lib).margin(1e-12));
    }
}

TEST_CASE("euler_error triangle inequality") {
    Rng rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        const double p1 = rng.uniform(-1.0, 1.0), t1 = rng.uniform(-1.0, 1.0);
        const double p2 = rng.uniform(-1.0, 1.0), t2 = rng.uniform(-1.0, 1.0);
        const double p3 = rng.uniform(-1.0, 1.0), t3 = rng.uniform(-1.0, 1.0);
        const double d12 = euler_error(p1, t1, p2, t2);
        const double d23 = euler_error(p2, t2, p3, t3);
        const double d13 = euler_error(p1, t1, p3, t3);
        CHECK(d13 <= d12 + d23 + 1e-9);
    }
}

TEST_CASE("track hover and feed-forward cases") {
    ControlErrors zero;
    const ControlGains gains;

    const AttitudeThrustCmd hover = track(zero, Vec3::Zero(), gains);
    CHECK(hover.thrust == 9.81);
    CHECK(hover.roll == 0.0);
    CHECK(hover.pitch == 0.0);

    // Pure forward acceleration of one g: 45-degree tilt, thrust g*sqrt(2).
    const AttitudeThrustCmd fwd = track(zero, Vec3(9.81, 0, 0), gains);
    CHECK(fwd.thrust == Approx(9.81 * std::sqrt(2.0)));
    CHECK(fwd.roll == Approx(0.0).margin(1e-12));
    CHECK(std::sin(fwd.pitch) == Approx(-1.0 / std::sqrt(2.0)));  // -sin(theta) = 1/sqrt(2)

    // Position error through the gains.
    ControlErrors ep;
    ep.e_p = Vec3(0.1, 0, 0);
    ControlGains flat;
    flat.k_p = Vec3(4, 4, 4);
    flat.k_v = Vec3(0, 0, 0);
    const AttitudeThrustCmd cmd = track(ep, Vec3::Zero(), flat);
    CHECK(cmd.thrust == Approx(Vec3(0.4, 0, 9.81).norm()));
}

TEST_CASE("track singularities") {
    ControlErrors zero;
    const ControlGains gains;
    // Free-fall region: desired force cancels gravity.
    CHECK_THROWS_AS(track(zero, Vec3(0, 0, -9.81), gains), ThrustSingularityError);
    // Desired force pointing below the horizon has no yaw-free attitude in
    // the open (-pi/2, pi/2) box.
    CHECK_THROWS_AS(track(zero, Vec3(0, 0, -20.0), gains), ThrustSingularityError);
    CHECK_THROWS_AS(track(zero, Vec3(1, 0, std::numeric_limits<double>::infinity()), gains),
                    std::invalid_argument);
}

TEST_CASE("track closes the algebraic loop") {
    Rng rng(24);
    const ControlGains gains;
    int checked = 0;
    while (checked < 1000) {
        ControlErrors err;
        Vec3 acc;
        for (int i = 0; i < 3; ++i) {
            err.e_p[i] = rng.uniform(-1.0, 1.0);
            err.e_v[i] = rng.uniform(-1.0, 1.0);
            acc[i] = rng.uniform(-8.0, 8.0);
        }
        AttitudeThrustCmd cmd;
        try {
            cmd = track(err, acc, gains);
        } catch (const ThrustSingularityError&) {
            continue;
        }
        ++checked;
        CHECK(std::abs(cmd.roll) < M_PI / 2.0);
        CHECK(std::abs(cmd.pitch) < M_PI / 2.0);
        CHECK(cmd.thrust >= 0.0);
        // thrust * R(att) e3 - g e3 must reproduce f_des - g e3.
        const Vec3 f_des = acc + gains.k_p.cwiseProduct(err.e_p) +
                           gains.k_v.cwiseProduct(err.e_v) + Vec3(0, 0, kGravity);
        const Vec3 rebuilt = cmd.thrust * desired_rotation(cmd.roll, cmd.pitch).col(2);
        CHECK((rebuilt - f_des).norm() == Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("track is locally Lipschitz away from the singularity") {
    Rng rng(25);
    const ControlGains gains;
    const double h = 1e-6;
    for (int rep = 0; rep < 300; ++rep) {
        ControlErrors err;
        Vec3 acc;
        for (int i = 0; i < 3; ++i) {
            err.e_p[i] = rng.uniform(-0.5, 0.5);
            err.e_v[i] = rng.uniform(-0.5, 0.5);
            acc[i] = rng.uniform(-3.0, 3.0);
        }
        ControlErrors err2 = err;
        Vec3 acc2 = acc;
        const int slot = static_cast<int>(rng.below(9));
        if (slot < 3)
            err2.e_p[slot] += h;
        else if (slot < 6)
            err2.e_v[slot - 3] += h;
        else
            acc2[slot - 6] += h;
        const AttitudeThrustCmd c1 = track(err, acc, gains);
        const AttitudeThrustCmd c2 = track(err2, acc2, gains);
        const double delta = std::abs(c1.roll - c2.roll) + std::abs(c1.pitch - c2.pitch) +
                             std::abs(c1.thrust - c2.thrust);
        CHECK(delta / h < 50.0);
    }
}

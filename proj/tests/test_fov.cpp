#include <doctest.h>

#include <cmath>
#include <random>

#include "fovctl/errors.hpp"
#include "fovctl/fov.hpp"
#include "test_support.hpp"

using namespace fovctl;
using testsup::PairScene;
using testsup::random_pair;

TEST_CASE("angle wrapping") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));  // (-pi, pi]
    CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    CHECK(wrap_angle(-5 * kPi) == doctest::Approx(kPi));
}

TEST_CASE("triangle vertices in the world frame") {
    FovTriangle fov = FovTriangle::standard(kPi / 6.0, 2.0, 0.0);

    RobotState ahead{0, 0, 0};
    auto v = triangle_vertices(ahead, fov);
    CHECK(v[0].norm() < 1e-15);
    CHECK((v[1] - 2.0 * Vec2(std::cos(kPi / 6), std::sin(kPi / 6))).norm() < 1e-15);
    CHECK((v[2] - 2.0 * Vec2(std::cos(kPi / 6), -std::sin(kPi / 6))).norm() < 1e-15);

    // rotating the robot rotates the triangle
    RobotState up{0, 0, kPi / 2};
    auto vu = triangle_vertices(up, fov);
    Mat2 rot = up.rotation();
    for (int i = 0; i < 3; ++i) CHECK((vu[i] - rot * (v[i])).norm() < 1e-14);

    // translating the robot translates the triangle
    RobotState shifted{3, -1, 0};
    auto vs = triangle_vertices(shifted, fov);
    for (int i = 0; i < 3; ++i) CHECK((vs[i] - v[i] - Vec2(3, -1)).norm() < 1e-14);
}

TEST_CASE("containment is strict") {
    FovTriangle fov = FovTriangle::standard();
    RobotState robot{0.4, -0.2, 0.3};

    const Vec2 mean_world = robot.position() + robot.rotation() * fov.quality_mean;
    CHECK(contains(robot, fov, mean_world));

    const Vec2 apex_world = triangle_vertices(robot, fov)[0];
    CHECK_FALSE(contains(robot, fov, apex_world));  // boundary

    const Vec2 far_ahead = robot.position() + robot.rotation() * Vec2(10 * fov.depth, 0.0);
    CHECK_FALSE(contains(robot, fov, far_ahead));
}

TEST_CASE("fov validation") {
    FovTriangle fov = FovTriangle::standard();
    CHECK_NOTHROW(fov.validate());

    FovTriangle bad = fov;
    bad.half_angle = 2.0;
    CHECK_THROWS_AS(bad.validate(), validation_error);

    bad = fov;
    bad.quality_mean = Vec2(-1.0, 0.0);  // behind the apex
    CHECK_THROWS_AS(bad.validate(), validation_error);

    bad = fov;
    bad.quality_sigma = Vec2(0.0, 1.0);
    CHECK_THROWS_AS(bad.validate(), validation_error);
}

TEST_CASE("barrier value at the incenter and boundary behavior") {
    // with a pi/6 half-angle the centroid is the incenter: all three side
    // distances equal, so the barrier is 3 / (2 r^2)
    FovTriangle fov = FovTriangle::standard(kPi / 6.0, 2.0, 0.0);
    RobotState robot{0.7, 1.3, -0.8};
    const Vec2 incenter_body = fov.body_centroid();
    const auto d = side_distances(fov, incenter_body);
    CHECK(d[0] == doctest::Approx(d[1]).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(d[2]).epsilon(1e-12));
    const double r = d[0];

    const Vec2 incenter_world = robot.position() + robot.rotation() * incenter_body;
    CHECK(phi(robot, fov, incenter_world) == doctest::Approx(3.0 / (2.0 * r * r)).epsilon(1e-12));

    // the barrier grows monotonically toward a side and diverges
    double prev = phi(robot, fov, incenter_world);
    const Vec2 toward_far_body(1.0, 0.0);
    for (double step = 0.1; step < r / 1.01; step += 0.05) {
        const Vec2 p = robot.position() + robot.rotation() * (incenter_body + step * toward_far_body);
        const double now = phi(robot, fov, p);
        CHECK(now > prev);
        prev = now;
    }
    CHECK(prev > 1e2);

    // outside and boundary points are rejected
    CHECK_THROWS_AS(phi(robot, fov, robot.position() + robot.rotation() * Vec2(-0.5, 0.0)),
                    topology_violation);
    CHECK_THROWS_AS(phi(robot, fov, triangle_vertices(robot, fov)[0]), topology_violation);
}

TEST_CASE("barrier scales inverse-quadratically with the triangle") {
    // doubling the triangle about the observed point doubles every side
    // distance, quartering the barrier
    FovTriangle fov = FovTriangle::standard(kPi / 6.0, 2.0, 0.1);
    RobotState robot{0, 0, 0.25};
    const Vec2 body_point = fov.body_centroid() + Vec2(0.2, 0.1);
    const Vec2 world_point = robot.position() + robot.rotation() * body_point;
    const double base = phi(robot, fov, world_point);

    FovTriangle big = fov;
    big.apex_offset *= 2.0;
    big.depth *= 2.0;
    big.quality_mean *= 2.0;
    // scaling the triangle about the point: move the robot so the scaled
    // triangle is the image of the original under x -> p + 2 (x - p)
    const Vec2 p2 = 2.0 * robot.position() - world_point;
    RobotState moved{p2.x(), p2.y(), robot.theta};
    CHECK(phi(moved, big, world_point) == doctest::Approx(base / 4.0).epsilon(1e-12));
}

TEST_CASE("quality map values") {
    FovTriangle fov = FovTriangle::standard();
    fov.amplitude = 1.7;
    RobotState robot{-0.3, 0.9, 1.1};
    auto world = [&](const Vec2& body) { return Vec2(robot.position() + robot.rotation() * body); };

    CHECK(psi(robot, fov, world(fov.quality_mean)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(psi(robot, fov, world(fov.quality_mean + Vec2(fov.quality_sigma.x(), 0))) ==
          doctest::Approx(fov.amplitude * (1.0 - std::exp(-0.5))).epsilon(1e-12));
    CHECK(psi(robot, fov, world(Vec2(500.0, 400.0))) == doctest::Approx(fov.amplitude).epsilon(1e-9));
}

TEST_CASE("pair gradients match finite differences") {
    std::mt19937 rng(99);
    int done = 0;
    const double h = 1e-6;
    for (int trial = 0; trial < 300; ++trial) {
        const PairScene s = random_pair(rng);
        const PairGradient g = pair_gradient(s.observer, s.observed, s.fov);

        auto value = [&](const RobotState& si, const Vec2& pj) {
            return phi(si, s.fov, pj) + psi(si, s.fov, pj);
        };
        for (int axis = 0; axis < 2; ++axis) {
            Vec2 dp = Vec2::Zero();
            dp(axis) = h;
            const double fd_j =
                (value(s.observer, s.observed.position() + dp) -
                 value(s.observer, s.observed.position() - dp)) / (2 * h);
            RobotState op = s.observer, om = s.observer;
            if (axis == 0) { op.x += h; om.x -= h; }
            else { op.y += h; om.y -= h; }
            const double fd_i = (value(op, s.observed.position()) -
                                 value(om, s.observed.position())) / (2 * h);
            CHECK(g.d_pj(axis) == doctest::Approx(fd_j).epsilon(1e-6).scale(1.0));
            CHECK(g.d_pi(axis) == doctest::Approx(fd_i).epsilon(1e-6).scale(1.0));
        }
        RobotState tp = s.observer, tm = s.observer;
        tp.theta += h;
        tm.theta -= h;
        const double fd_th = (value(tp, s.observed.position()) -
                              value(tm, s.observed.position())) / (2 * h);
        CHECK(g.d_thetai == doctest::Approx(fd_th).epsilon(1e-6).scale(1.0));
        ++done;
    }
    CHECK(done == 300);
}

TEST_CASE("position gradients are exactly antisymmetric") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 2000; ++trial) {
        const PairScene s = random_pair(rng);
        const PairGradient g = pair_gradient(s.observer, s.observed, s.fov);
        CHECK((g.d_pi + g.d_pj).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("frame equivariance") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const PairScene s = random_pair(rng);
        const double phi0 = phi(s.observer, s.fov, s.observed.position());
        const double psi0 = psi(s.observer, s.fov, s.observed.position());

        const double rot = u(rng);
        const Vec2 t(u(rng), u(rng));
        Mat2 R;
        R << std::cos(rot), -std::sin(rot), std::sin(rot), std::cos(rot);
        const Vec2 pi2 = R * s.observer.position() + t;
        const Vec2 pj2 = R * s.observed.position() + t;
        RobotState obs2{pi2.x(), pi2.y(), wrap_angle(s.observer.theta + rot)};

        CHECK(phi(obs2, s.fov, pj2) == doctest::Approx(phi0).epsilon(1e-10));
        CHECK(psi(obs2, s.fov, pj2) == doctest::Approx(psi0).epsilon(1e-10));
    }
}

TEST_CASE("pair potential: additivity, nonnegativity, descent toward the mean") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const PairScene s = random_pair(rng);
        const double total = pair_potential(s.observer, s.observed, s.fov);
        CHECK(total == doctest::Approx(phi(s.observer, s.fov, s.observed.position()) +
                                       psi(s.observer, s.fov, s.observed.position()))
                           .epsilon(1e-12));
        CHECK(total >= 0.0);
    }

    // sliding from a one-sigma offset toward the mean lowers the potential
    FovTriangle fov = FovTriangle::standard();
    RobotState robot{0, 0, 0};
    const Vec2 start = fov.quality_mean + Vec2(fov.quality_sigma.x(), 0);
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 40; ++step) {
        const Vec2 body = start + (fov.quality_mean - start) * (step / 40.0);
        RobotState observed{body.x(), body.y(), 0};
        const double value = pair_potential(robot, observed, fov);
        CHECK(value < prev);
        prev = value;
    }
}

TEST_CASE("second-order pair evaluation matches finite differences") {
    std::mt19937 rng(55);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const PairScene s = random_pair(rng);
        const EdgeSecondOrder so = edge_second_order(s.observer, s.observed.position(), s.fov);

        // value and first-order parts agree with the scalar evaluations
        CHECK(so.value == doctest::Approx(pair_potential(s.observer, s.observed, s.fov))
                              .epsilon(1e-12));
        const PairGradient g = pair_gradient(s.observer, s.observed, s.fov);
        CHECK((so.b + g.d_pi).norm() < 1e-14);
        CHECK(so.eta == doctest::Approx(g.d_thetai).epsilon(1e-12));

        // Jacobian of b with respect to the observed position
        for (int axis = 0; axis < 2; ++axis) {
            Vec2 dp = Vec2::Zero();
            dp(axis) = h;
            RobotState obs_p{s.observed.x + dp.x(), s.observed.y + dp.y(), 0};
            RobotState obs_m{s.observed.x - dp.x(), s.observed.y - dp.y(), 0};
            const Vec2 fd = (-pair_gradient(s.observer, obs_p, s.fov).d_pi +
                             pair_gradient(s.observer, obs_m, s.fov).d_pi) / (2 * h);
            CHECK((so.db_dpj.col(axis) - fd).lpNorm<Eigen::Infinity>() <
                  1e-4 * std::max(1.0, fd.norm()));
        }
        // derivative of b with respect to the observer heading
        RobotState tp = s.observer, tm = s.observer;
        tp.theta += h;
        tm.theta -= h;
        const Vec2 fd_th = (-pair_gradient(tp, s.observed, s.fov).d_pi +
                            pair_gradient(tm, s.observed, s.fov).d_pi) / (2 * h);
        CHECK((so.db_dtheta - fd_th).lpNorm<Eigen::Infinity>() <
              1e-4 * std::max(1.0, fd_th.norm()));
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uwsn/dynamics.hpp"

using namespace uwsn;

TEST_CASE("transition and process covariance at the default parameters") {
    const MotionModel m = build_motion_model(1.25, 2.5e-3);
    CHECK(m.transition(0, 2) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(m.transition(1, 3) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(m.transition(0, 0) == 1.0);
    CHECK(m.process_cov(0, 0) ==
          doctest::Approx(2.5e-3 * std::pow(1.25, 3) / 3.0).epsilon(1e-15));
}

TEST_CASE("zero noise intensity zeroes the covariance") {
    const MotionModel m = build_motion_model(1.0, 0.0);
    CHECK(m.process_cov.norm() == 0.0);
    CHECK(m.noise_chol.norm() == 0.0);
}

TEST_CASE("covariance cross terms at interval 2, unit intensity") {
    const MotionModel m = build_motion_model(2.0, 1.0);
    CHECK(m.process_cov(2, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.process_cov(2, 2) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("invalid model parameters are rejected") {
    CHECK_THROWS_AS(build_motion_model(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_motion_model(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_motion_model(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("noiseless propagation is pure kinematics") {
    const MotionModel m = build_motion_model(1.0, 0.0);
    Rng rng(1);
    const TargetState a = propagate(TargetState(0, 0, 1, 1), m, rng);
    CHECK(a(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a(1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a(3) == doctest::Approx(1.0).epsilon(1e-15));

    const TargetState b = propagate(TargetState(5, -3, 0, 0), m, rng);
    CHECK(b(0) == 5.0);
    CHECK(b(1) == -3.0);
    CHECK(b(2) == 0.0);
    CHECK(b(3) == 0.0);
}

TEST_CASE("propagation noise has the modeled mean") {
    const MotionModel m = build_motion_model(1.25, 2.5e-3);
    const TargetState x0(1.0, 2.0, 0.5, -0.5);
    const TargetState mean_expect = m.transition * x0;
    Rng rng(42);
    const int n = 100000;
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    for (int i = 0; i < n; ++i) sum += propagate(x0, m, rng);
    const Eigen::Vector4d mean = sum / n;
    for (int c = 0; c < 4; ++c) {
        const double sd = std::sqrt(m.process_cov(c, c));
        CHECK(std::abs(mean(c) - mean_expect(c)) <
              3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("trajectory of length one is the start state") {
    const MotionModel m = build_motion_model(1.0, 1e-3);
    Rng rng(7);
    const TargetState x0(1, 2, 3, 4);
    const auto traj = generate_trajectory(x0, m, 1, rng);
    REQUIRE(traj.size() == 1);
    CHECK((traj[0] - x0).norm() == 0.0);
}

TEST_CASE("noiseless default trajectory is the diagonal track") {
    const MotionModel m = build_motion_model(1.25, 0.0);
    Rng rng(7);
    const TargetState x0(-23, -24, 2, 2);
    const auto traj = generate_trajectory(x0, m, 20, rng);
    REQUIRE(traj.size() == 20);
    CHECK(traj.back()(0) == doctest::Approx(-23.0 + 19.0 * 2.5).epsilon(1e-13));
    CHECK(traj.back()(1) == doctest::Approx(-24.0 + 19.0 * 2.5).epsilon(1e-13));
    // straight line: x - y constant
    for (const auto& s : traj)
        CHECK(s(0) - s(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fixed seed replays the same trajectory") {
    const MotionModel m = build_motion_model(1.25, 2.5e-3);
    Rng a(99), b(99);
    const TargetState x0(-23, -24, 2, 2);
    const auto ta = generate_trajectory(x0, m, 20, a);
    const auto tb = generate_trajectory(x0, m, 20, b);
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i)
        CHECK((ta[i] - tb[i]).norm() == 0.0);
}

TEST_CASE("psd cholesky tolerates rank deficiency") {
    Mat4 q = Mat4::Zero();
    q(0, 0) = 4.0;
    q(2, 2) = 9.0;
    const Mat4 l = cholesky_psd(q);
    CHECK(((l * l.transpose()) - q).norm() < 1e-12);
}

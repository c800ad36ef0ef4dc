#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tsgm/geometry.hpp"

using namespace tsgm;

namespace {

StereoCalib test_calib() {
    StereoCalib c;
    c.focal_px = 240.0;
    c.cx = 160.0;
    c.cy = 120.0;
    c.baseline_m = 0.5;
    c.width = 320;
    c.height = 240;
    c.d_max = 128;
    return c;
}

RigidMotion rotation_z(double radians) {
    RigidMotion m;
    m.rotation = Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return m;
}

RigidMotion random_motion(std::mt19937& rng) {
    std::uniform_real_distribution<double> angle(-0.05, 0.05);
    std::uniform_real_distribution<double> shift(-0.3, 0.3);
    RigidMotion m;
    m.rotation = (Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitX()) *
                  Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitZ()))
                     .toRotationMatrix();
    m.translation = Eigen::Vector3d(shift(rng), shift(rng), shift(rng));
    return m;
}

}  // namespace

TEST_CASE("triangulation formulas") {
    const StereoCalib c = test_calib();

    SUBCASE("principal-point ray at unit depth") {
        const Eigen::Vector3d p = triangulate(c.cx, c.cy, c.focal_px * c.baseline_m, c);
        CHECK(p.x() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p.y() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p.z() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("hand-computed off-axis point") {
        StereoCalib c2 = c;
        c2.focal_px = 100.0;
        const Eigen::Vector3d p = triangulate(c2.cx + 10.0, c2.cy, 50.0, c2);
        CHECK(p.z() == doctest::Approx(1.0));
        CHECK(p.x() == doctest::Approx(0.1));
        CHECK(p.y() == doctest::Approx(0.0));
    }
    SUBCASE("non-positive disparity is rejected") {
        CHECK_THROWS_AS(triangulate(10, 10, 0.0, c), std::invalid_argument);
        CHECK_THROWS_AS(triangulate(10, 10, -3.0, c), std::invalid_argument);
    }
    SUBCASE("project inverts triangulate") {
        std::mt19937 rng(41);
        std::uniform_real_distribution<double> px(0.0, 319.0);
        std::uniform_real_distribution<double> py(0.0, 239.0);
        std::uniform_real_distribution<double> pd(0.5, 127.0);
        for (int i = 0; i < 200; ++i) {
            const double x = px(rng), y = py(rng), d = pd(rng);
            const Eigen::Vector3d back = project(triangulate(x, y, d, c), c);
            CHECK(back.x() == doctest::Approx(x).epsilon(1e-12));
            CHECK(back.y() == doctest::Approx(y).epsilon(1e-12));
            CHECK(back.z() == doctest::Approx(d).epsilon(1e-12));
        }
    }
}

TEST_CASE("identity motion yields the identity disparity-space map") {
    const DispHomography h = disparity_homography(RigidMotion{}, test_calib());
    for (auto [x, y, d] : {std::tuple{10.0, 20.0, 5.0}, {160.0, 120.0, 64.0}, {311.5, 2.25, 0.125}}) {
        const auto m = h.apply(x, y, d);
        REQUIRE(m.has_value());
        CHECK(m->x() == x);
        CHECK(m->y() == y);
        CHECK(m->z() == d);
    }
}

TEST_CASE("translation by the baseline shifts pixels by their disparity") {
    const StereoCalib c = test_calib();
    // camera slides +b along x, so scene points move -b in camera coordinates
    RigidMotion m;
    m.translation = Eigen::Vector3d(-c.baseline_m, 0.0, 0.0);
    const DispHomography h = disparity_homography(m, c);
    for (double d : {2.0, 17.0, 96.5}) {
        const auto r = h.apply(200.0, 80.0, d);
        REQUIRE(r.has_value());
        CHECK(r->x() == doctest::Approx(200.0 - d).epsilon(1e-10));
        CHECK(r->y() == doctest::Approx(80.0).epsilon(1e-10));
        CHECK(r->z() == doctest::Approx(d).epsilon(1e-10));
    }
}

TEST_CASE("homography agrees with triangulate-transform-project on random samples") {
    std::mt19937 rng(42);
    const StereoCalib c = test_calib();
    std::uniform_real_distribution<double> px(0.0, 319.0);
    std::uniform_real_distribution<double> py(0.0, 239.0);
    std::uniform_real_distribution<double> pd(1.0, 127.0);
    for (int i = 0; i < 1000; ++i) {
        const RigidMotion m = random_motion(rng);
        const DispHomography h = disparity_homography(m, c);
        const double x = px(rng), y = py(rng), d = pd(rng);

        const Eigen::Vector3d moved = m.rotation * triangulate(x, y, d, c) + m.translation;
        if (moved.z() <= 1e-6)
            continue;
        const Eigen::Vector3d want = project(moved, c);
        const auto got = h.apply(x, y, d);
        REQUIRE(got.has_value());
        CHECK((*got - want).norm() <= 1e-9 * std::max(1.0, want.norm()));
    }
}

TEST_CASE("points moved behind the camera map to nothing") {
    const StereoCalib c = test_calib();
    RigidMotion m;
    const double depth = c.focal_px * c.baseline_m / 10.0;  // disparity 10
    m.translation = Eigen::Vector3d(0.0, 0.0, -2.0 * depth);
    const DispHomography h = disparity_homography(m, c);
    CHECK_FALSE(h.apply(c.cx, c.cy, 10.0).has_value());
}

TEST_CASE("degenerate calibration is rejected") {
    StereoCalib c = test_calib();
    c.focal_px = 0.0;
    CHECK_THROWS_AS(disparity_homography(RigidMotion{}, c), std::invalid_argument);
    c = test_calib();
    c.baseline_m = 0.0;
    CHECK_THROWS_AS(disparity_homography(RigidMotion{}, c), std::invalid_argument);
}

TEST_CASE("motion validation checks orthonormality") {
    RigidMotion m;
    m.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = RigidMotion{};
    m.rotation.col(0) *= -1.0;  // det becomes -1
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    CHECK_NOTHROW(RigidMotion{}.validate());
}

TEST_CASE("motion composition and inverse") {
    std::mt19937 rng(43);
    const RigidMotion a = random_motion(rng);
    const RigidMotion b = random_motion(rng);
    const Eigen::Vector3d p(0.3, -1.2, 7.0);

    const Eigen::Vector3d via_compose = b.after(a).rotation * p + b.after(a).translation;
    const Eigen::Vector3d stepwise = b.rotation * (a.rotation * p + a.translation) + b.translation;
    CHECK((via_compose - stepwise).norm() <= 1e-12);

    const RigidMotion round = a.inverse().after(a);
    CHECK((round.rotation - Eigen::Matrix3d::Identity()).norm() <= 1e-12);
    CHECK(round.translation.norm() <= 1e-12);
    // exact identity is reserved for the all-zero motion
    CHECK(RigidMotion{}.is_identity());
    CHECK_FALSE(a.is_identity());
}

TEST_CASE("forward warp basics") {
    const StereoCalib c = test_calib();

    SUBCASE("identity warp copies the state exactly") {
        DisparityState s(12, 9);
        std::mt19937 rng(44);
        std::uniform_real_distribution<double> pd(1.0, 100.0);
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 12; ++x)
                if ((x + y) % 3 != 0)
                    s.set(x, y, pd(rng), pd(rng));
        const DisparityState out = warp_state(s, disparity_homography(RigidMotion{}, c), c.d_max);
        CHECK(out.d == s.d);
        CHECK(out.p == s.p);
        CHECK(out.valid == s.valid);
    }
    SUBCASE("the larger disparity wins a collision") {
        // baseline slide maps (x, y, d) to (x - d, y, d): craft two sources
        // that land on the same target with different disparities
        RigidMotion m;
        m.translation = Eigen::Vector3d(-c.baseline_m, 0.0, 0.0);
        DisparityState s(64, 16);
        s.set(40, 8, 10.0, 1.0);
        s.set(60, 8, 30.0, 2.0);  // both map to x = 30
        const DisparityState out = warp_state(s, disparity_homography(m, c), c.d_max);
        REQUIRE(out.is_valid(30, 8));
        CHECK(out.d(30, 8) == doctest::Approx(30.0));
        CHECK(out.p(30, 8) == doctest::Approx(2.0));
    }
    SUBCASE("warped disparities stay strictly inside (0, d_max)") {
        std::mt19937 rng(45);
        std::uniform_real_distribution<double> pd(1.0, 127.0);
        DisparityState s(40, 30);
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x)
                s.set(x, y, pd(rng), 1.0);
        StereoCalib small = c;
        small.width = 40;
        small.height = 30;
        small.cx = 19.5;
        small.cy = 14.5;
        small.d_max = 64;  // half the state's disparities must be dropped
        const RigidMotion m = random_motion(rng);
        const DisparityState out = warp_state(s, disparity_homography(m, small), small.d_max);
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x)
                if (out.is_valid(x, y)) {
                    CHECK(out.d(x, y) > 0.0);
                    CHECK(out.d(x, y) < 64.0);
                }
    }
}

TEST_CASE("warp equals the gather-based oracle on random states") {
    std::mt19937 rng(46);
    const StereoCalib c = test_calib();
    std::uniform_real_distribution<double> pd(1.0, 120.0);
    std::uniform_real_distribution<double> pp(0.5, 50.0);
    std::uniform_int_distribution<int> keep(0, 4);
    for (int trial = 0; trial < 4; ++trial) {
        DisparityState s(48, 36);
        for (int y = 0; y < 36; ++y)
            for (int x = 0; x < 48; ++x)
                if (keep(rng) > 0)
                    s.set(x, y, pd(rng), pp(rng));
        const DispHomography h = disparity_homography(random_motion(rng), c);
        const DisparityState got = warp_state(s, h, c.d_max);
        const DisparityState want = oracle::warp(s, h, c.d_max);
        CHECK(got.valid == want.valid);
        CHECK(got.d == want.d);
        CHECK(got.p == want.p);
    }
}

TEST_CASE("rotating about the optical axis preserves a fronto-parallel plane") {
    const StereoCalib c = test_calib();
    const double d0 = 40.0;
    DisparityState s(c.width, c.height);
    for (int y = 0; y < c.height; ++y)
        for (int x = 0; x < c.width; ++x)
            s.set(x, y, d0, 2.0);

    // camera roll of 5 degrees: points rotate the opposite way about z
    const RigidMotion m = rotation_z(-5.0 * M_PI / 180.0);
    const DisparityState out = warp_state(s, disparity_homography(m, c), c.d_max);

    double err_sum = 0.0;
    long long n = 0;
    for (int y = 20; y < c.height - 20; ++y)
        for (int x = 20; x < c.width - 20; ++x)
            if (out.is_valid(x, y)) {
                err_sum += std::abs(out.d(x, y) - d0);
                ++n;
            }
    REQUIRE(n > 10000);
    CHECK(err_sum / static_cast<double>(n) < 0.5);
}

TEST_CASE("pose files load and difference into relative motions") {
    oracle::TempDir tmp;
    const std::string path = tmp.path + "/poses.txt";
    {
        std::ofstream out(path);
        out << "1 0 0 0 0 1 0 0 0 0 1 0\n";
        out << "1 0 0 1.5 0 1 0 0 0 0 1 2.0\n";
    }
    const std::vector<Pose> poses = load_poses(path);
    REQUIRE(poses.size() == 2u);
    CHECK(poses[1](0, 3) == 1.5);

    // camera advanced to (1.5, 0, 2): points lose that offset in the new frame
    const RigidMotion rel = relative_motion(poses[0], poses[1]);
    const Eigen::Vector3d p =
        rel.rotation * Eigen::Vector3d(0.0, 0.0, 10.0) + rel.translation;
    CHECK(p.x() == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(p.y() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.z() == doctest::Approx(8.0).epsilon(1e-12));

    SUBCASE("malformed rows are rejected") {
        const std::string bad = tmp.path + "/bad.txt";
        std::ofstream(bad) << "1 0 0 0 0 1 0\n";
        CHECK_THROWS(load_poses(bad));
    }
}

#include "tsgm/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsgm {

namespace {

constexpr double kOrthoTol = 1e-9;

void check(bool ok, const char* msg) {
    if (!ok)
        throw std::invalid_argument(msg);
}

}  // namespace

void StereoCalib::validate() const {
    check(focal_px > 0.0, "StereoCalib: focal_px must be positive");
    check(baseline_m > 0.0, "StereoCalib: baseline_m must be positive");
    check(width > 0 && height > 0, "StereoCalib: empty image");
    check(cx >= 0.0 && cx < width, "StereoCalib: cx outside image");
    check(cy >= 0.0 && cy < height, "StereoCalib: cy outside image");
    check(d_max >= 1, "StereoCalib: d_max must be at least 1");
}

void RigidMotion::validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    check((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= kOrthoTol,
          "RigidMotion: rotation is not orthonormal");
    check(std::abs(rotation.determinant() - 1.0) <= kOrthoTol,
          "RigidMotion: rotation determinant is not +1");
}

bool RigidMotion::is_identity() const {
    return rotation == Eigen::Matrix3d::Identity() && translation == Eigen::Vector3d::Zero();
}

RigidMotion RigidMotion::inverse() const {
    RigidMotion inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
}

RigidMotion RigidMotion::after(const RigidMotion& first) const {
    RigidMotion out;
    out.rotation = rotation * first.rotation;
    out.translation = rotation * first.translation + translation;
    return out;
}

std::optional<Eigen::Vector3d> DispHomography::apply(double x, double y, double d) const {
    const Eigen::Vector4d v = m * Eigen::Vector4d(x, y, d, 1.0);
    if (!(v.w() > 1e-12))
        return std::nullopt;
    return Eigen::Vector3d(v.x() / v.w(), v.y() / v.w(), v.z() / v.w());
}

Eigen::Vector3d triangulate(double x, double y, double d, const StereoCalib& calib) {
    check(d > 0.0, "triangulate: disparity must be positive");
    const double z = calib.focal_px * calib.baseline_m / d;
    return {(x - calib.cx) * z / calib.focal_px, (y - calib.cy) * z / calib.focal_px, z};
}

Eigen::Vector3d project(const Eigen::Vector3d& point, const StereoCalib& calib) {
    check(point.z() > 0.0, "project: point is not in front of the camera");
    const double x = calib.focal_px * point.x() / point.z() + calib.cx;
    const double y = calib.focal_px * point.y() / point.z() + calib.cy;
    const double d = calib.focal_px * calib.baseline_m / point.z();
    return {x, y, d};
}

DispHomography disparity_homography(const RigidMotion& motion, const StereoCalib& calib) {
    calib.validate();
    motion.validate();

    if (motion.is_identity())
        return {};  // exact identity, no round-trip through Q

    const double f = calib.focal_px;
    const double b = calib.baseline_m;

    // Q maps (x, y, d, 1) to the homogeneous 3D point, Qinv is its closed-form
    // inverse mapping homogeneous 3D back to disparity space.
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    q(0, 0) = 1.0;
    q(0, 3) = -calib.cx;
    q(1, 1) = 1.0;
    q(1, 3) = -calib.cy;
    q(2, 3) = f;
    q(3, 2) = 1.0 / b;

    Eigen::Matrix4d qinv = Eigen::Matrix4d::Zero();
    qinv(0, 0) = 1.0;
    qinv(0, 2) = calib.cx / f;
    qinv(1, 1) = 1.0;
    qinv(1, 2) = calib.cy / f;
    qinv(2, 3) = b;
    qinv(3, 2) = 1.0 / f;

    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() = motion.rotation;
    t.topRightCorner<3, 1>() = motion.translation;

    return {qinv * t * q};
}

namespace {

// Collision policy: larger disparity wins, remaining components break ties so
// the merge is associative, commutative and idempotent.
bool replaces(double d_new, double p_new, double s_new,
              double d_old, double p_old, double s_old) {
    if (d_new != d_old)
        return d_new > d_old;
    if (p_new != p_old)
        return p_new < p_old;
    return s_new < s_old;
}

}  // namespace

WarpedState warp_state_ex(const DisparityState& state, const DispHomography& h, int d_max) {
    const int w = state.width();
    const int hgt = state.height();
    WarpedState out{DisparityState(w, hgt), Image<double>(w, hgt)};

    for (int y = 0; y < hgt; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!state.is_valid(x, y))
                continue;
            const double ds = state.d(x, y);
            const auto mapped = h.apply(static_cast<double>(x), static_cast<double>(y), ds);
            if (!mapped)
                continue;
            const double dp = mapped->z();
            if (!(dp > 0.0) || !(dp < static_cast<double>(d_max)))
                continue;
            const int tx = static_cast<int>(std::lround(mapped->x()));
            const int ty = static_cast<int>(std::lround(mapped->y()));
            if (!out.state.valid.contains(tx, ty))
                continue;
            const double ps = state.p(x, y);
            if (out.state.is_valid(tx, ty) &&
                !replaces(dp, ps, ds, out.state.d(tx, ty), out.state.p(tx, ty), out.source_d(tx, ty)))
                continue;
            out.state.set(tx, ty, dp, ps);
            out.source_d(tx, ty) = ds;
        }
    }
    return out;
}

DisparityState warp_state(const DisparityState& state, const DispHomography& h, int d_max) {
    return warp_state_ex(state, h, d_max).state;
}

std::vector<Pose> load_poses(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open pose file: " + path);
    std::vector<Pose> poses;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream ss(line);
        Pose p;
        for (int i = 0; i < 12; ++i) {
            if (!(ss >> p(i / 4, i % 4)))
                throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                         ": expected 12 pose entries");
        }
        double extra;
        if (ss >> extra)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": trailing pose entries");
        poses.push_back(p);
    }
    return poses;
}

RigidMotion relative_motion(const Pose& prev, const Pose& cur) {
    RigidMotion prev_to_world{prev.leftCols<3>(), prev.col(3)};
    RigidMotion cur_to_world{cur.leftCols<3>(), cur.col(3)};
    prev_to_world.validate();
    cur_to_world.validate();
    if (prev == cur)
        return {};  // exact identity for repeated poses
    return cur_to_world.inverse().after(prev_to_world);
}

}  // namespace tsgm

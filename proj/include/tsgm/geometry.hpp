#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsgm/image.hpp"

namespace tsgm {

// Rectified stereo rig: shared focal length, principal point, baseline and the
// disparity search depth. Disparity d at pixel (x, y) triangulates to
// Z = focal_px * baseline_m / d.
struct StereoCalib {
    double focal_px = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double baseline_m = 0.0;
    int width = 0;
    int height = 0;
    int d_max = 0;  // number of disparity levels, valid levels are [0, d_max)

    void validate() const;  // throws std::invalid_argument
};

// Frame-to-frame camera motion, mapping points expressed in the previous
// camera frame into the current one: X_cur = rotation * X_prev + translation.
struct RigidMotion {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    void validate() const;  // orthonormality and det = +1 within 1e-9
    bool is_identity() const;
    RigidMotion inverse() const;
    // Composition: (m2.after(m1)) maps a point first by m1, then by m2.
    RigidMotion after(const RigidMotion& first) const;
};

// 4x4 homogeneous map acting on disparity-space coordinates (x, y, d, 1).
struct DispHomography {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

    // Applies the map and dehomogenizes. Empty when the target lies at or
    // behind the plane at infinity (non-positive homogeneous weight).
    std::optional<Eigen::Vector3d> apply(double x, double y, double d) const;
};

// Per-pixel disparity mean/variance with a validity flag; the Kalman filter
// state image. d and p are unspecified at invalid pixels.
struct DisparityState {
    Image<double> d;
    Image<double> p;
    Image<std::uint8_t> valid;

    DisparityState() = default;
    DisparityState(int width, int height)
        : d(width, height), p(width, height), valid(width, height) {}

    int width() const { return valid.width(); }
    int height() const { return valid.height(); }
    bool is_valid(int x, int y) const { return valid(x, y) != 0; }
    void set(int x, int y, double disp, double var) {
        d(x, y) = disp;
        p(x, y) = var;
        valid(x, y) = 1;
    }
    void invalidate(int x, int y) {
        d(x, y) = 0.0;
        p(x, y) = 0.0;
        valid(x, y) = 0;
    }
};

// Back-projects pixel (x, y) at disparity d > 0 into camera coordinates.
Eigen::Vector3d triangulate(double x, double y, double d, const StereoCalib& calib);

// Projects a camera-space point with Z > 0 to (x, y, d).
Eigen::Vector3d project(const Eigen::Vector3d& point, const StereoCalib& calib);

// H = Q^-1 * T * Q where T is the homogeneous rigid transform of `motion` and
// Q reprojects (x, y, d, 1) to a homogeneous 3D point. Applying H and
// dehomogenizing moves disparity-space coordinates from the previous frame
// into the current one. Exact identity motion yields the exact identity map.
DispHomography disparity_homography(const RigidMotion& motion, const StereoCalib& calib);

// Forward warp: every valid source pixel is mapped by H, rounded to the
// nearest target pixel and kept only when it lands inside the image with
// 0 < d' < d_max. Colliding sources resolve to the larger disparity (nearer
// surface wins); the merge is a lattice join, so the result does not depend
// on traversal order. Variance rides along unscaled.
DisparityState warp_state(const DisparityState& state, const DispHomography& h, int d_max);

// warp_state variant that also records, per valid target pixel, the source
// disparity the winner came from (needed for the prediction variance model).
struct WarpedState {
    DisparityState state;
    Image<double> source_d;
};
WarpedState warp_state_ex(const DisparityState& state, const DispHomography& h, int d_max);

// Plain-text pose file: one frame per line, 12 numbers forming the row-major
// 3x4 camera-to-world matrix [R|t] (KITTI odometry convention).
using Pose = Eigen::Matrix<double, 3, 4>;
std::vector<Pose> load_poses(const std::string& path);

// Relative motion taking points from the camera frame of `prev` into the
// camera frame of `cur`.
RigidMotion relative_motion(const Pose& prev, const Pose& cur);

}  // namespace tsgm

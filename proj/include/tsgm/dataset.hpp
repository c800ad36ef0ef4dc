#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsgm/geometry.hpp"
#include "tsgm/image.hpp"
#include "tsgm/motion_detect.hpp"
#include "tsgm/sgm.hpp"

namespace tsgm {

// One stereo frame of a sequence. Ground truth and pose are attached when the
// sequence directory provides them. gt_disp is real-valued with 0 = invalid
// (the on-disk encoding cannot represent a valid zero disparity).
struct SequenceFrame {
    int index = 0;
    GrayImage left;
    GrayImage right;
    std::optional<Pose> pose;
    std::optional<Image<double>> gt_disp;
    std::optional<std::vector<DetectionBox>> gt_boxes;
};

struct LoadOptions {
    int max_frames = -1;     // cap the frame count when >= 0
    std::string poses_path;  // empty: <dir>/poses.txt when present
    std::string gt_dir;      // empty: <dir>/disp_gt
    bool load_gt = true;
};

// Loads a KITTI-raw-style directory: image_00/data (or image_02/data) left
// and image_01/data (or image_03/data) right PNGs with numeric stems, sorted
// by filename. Grayscale folders are preferred over color; color input is
// converted by Rec.601 luma. Optional per-sequence files: poses.txt (one
// 12-number 3x4 camera-to-world row per frame), disp_gt/<same stem>.png,
// boxes_gt.txt. A left image without its right counterpart is an error that
// names the frame index.
std::vector<SequenceFrame> load_kitti_sequence(const std::string& dir,
                                               const LoadOptions& opts = {});

// key=value calib file with '#' comments. Keys: focal_px, cx, cy, baseline_m,
// width, height, d_max. Unknown or missing keys are errors.
StereoCalib load_calib(const std::string& path);
void write_calib(const std::string& path, const StereoCalib& calib);

// 16-bit single-channel PNG, stored value = round(256 * disparity), 0 means
// invalid. Values that would round to 0 or overflow 16 bits are write errors.
Image<double> read_disparity_png(const std::string& path);
void write_disparity_png(const std::string& path, const Image<double>& disp);
void write_disparity_png(const std::string& path, const DisparityMap& dm);

// Box list file: one "frame x0 y0 x1 y1 score" line per box, '#' comments.
// read_boxes returns one (possibly empty) list per frame index.
void write_boxes(const std::string& path,
                 const std::vector<std::vector<DetectionBox>>& per_frame);
std::vector<std::vector<DetectionBox>> read_boxes(const std::string& path, int frame_count);

// A fronto-parallel textured rectangle riding above the background plane.
// x/y give the frame-0 top-left corner in the left image; the box translates
// by (vx, vy) px/frame and keeps a constant disparity offset over the plane.
struct SynthObject {
    double x = 0.0;
    double y = 0.0;
    int w = 0;
    int h = 0;
    double disparity_offset = 0.0;
    double vx = 0.0;
    double vy = 0.0;
};

// Synthetic scene: a value-noise textured plane at plane_depth_m in front of
// the frame-0 left camera, plus moving rectangles. motions holds the frame-to-
// frame camera motion (frames-1 entries, or empty for a static camera); only
// translations are supported. Right images are rendered from the right camera
// center, so stereo correspondence is exact up to quantization.
struct SynthConfig {
    int width = 320;
    int height = 240;
    int frames = 2;
    std::uint32_t seed = 1;
    double plane_depth_m = 10.0;
    StereoCalib calib;
    std::vector<RigidMotion> motions;
    std::vector<SynthObject> objects;
    double noise_sigma = 0.0;

    // Throws when sizes disagree with calib, motions rotate, or any induced
    // disparity leaves (0, d_max) at any frame.
    void validate() const;
};

// Renders the sequence with dense GT disparity, per-frame poses, and GT
// detection boxes (union of each object's footprint over the last step;
// frame 0 carries an empty list).
std::vector<SequenceFrame> synth_sequence(const SynthConfig& cfg);

// Writes frames in the layout load_kitti_sequence reads: image_00/data,
// image_01/data, disp_gt/ (frames that have GT), poses.txt and boxes_gt.txt
// (when every frame has them), calib.txt.
void write_sequence(const std::string& dir, const std::vector<SequenceFrame>& frames,
                    const StereoCalib& calib);

}  // namespace tsgm

#pragma once

#include "tsgm/geometry.hpp"
#include "tsgm/sgm.hpp"

namespace tsgm {

struct NoiseParams {
    double q = 0.5;  // process-noise variance, px^2
    double r = 1.0;  // measurement-noise variance, px^2

    void validate() const;
};

struct FilterConfig {
    NoiseParams noise;
    double p_init = 4096.0;      // variance assigned when nothing is known
    double disc_thresh = 2.0;    // disparity jump treated as a discontinuity
    int min_range_halfwidth = 2;
    // The search window is d +- p by default (p is a variance, taken
    // literally). The stddev switch uses d +- gain*sqrt(p) instead.
    bool range_use_stddev = false;
    double range_stddev_gain = 2.0;

    void validate(int d_max) const;  // p_init must cover the disparity space
};

// Ego-motion warp of the posterior state plus variance propagation: each
// surviving pixel gets p = (d_new/d_old)^2 * p_old + q. Predictions adjacent
// to disparity discontinuities are then rejected and single-pixel warp holes
// filled.
DisparityState predict(const DisparityState& state, const RigidMotion& motion,
                       const StereoCalib& calib, const FilterConfig& cfg);

// Invalidates every valid pixel that has a valid 4-neighbor differing by more
// than disc_thresh. Decisions are made against the input state, so the result
// does not depend on scan order.
DisparityState reject_discontinuities(const DisparityState& state, const FilterConfig& cfg);

// One pass over the input state: an invalid pixel whose left+right or up+down
// neighbors are both valid becomes the average of that pair (of all four when
// both pairs qualify). Fills never chain within the pass.
DisparityState fill_zoom_holes(const DisparityState& state);

// Valid pixels search [floor(d - p), ceil(d + p)] clamped to [0, d_max - 1]
// and widened to at least 2*min_range_halfwidth + 1 levels; invalid pixels
// search the full space.
SearchRangeMap derive_search_ranges(const DisparityState& state, const StereoCalib& calib,
                                    const FilterConfig& cfg);

// Scalar Kalman correction with gain K = p_pred / (p_pred + r). A measurement
// without a prediction starts fresh at (d_z, r); a prediction without a
// measurement is carried through unchanged.
DisparityState correct(const DisparityState& pred, const DisparityMap& meas,
                       const FilterConfig& cfg);

struct StepTimings {
    double predict_s = 0;
    double ranges_s = 0;
    SgmStageTimings sgm;
    double correct_s = 0;
};

struct StepResult {
    DisparityState state;      // posterior, feeds the next step
    DisparityMap export_map;   // median-refined integer rendering of the posterior
    Image<double> diff;        // |d_pred - d_z| where both valid, 0 elsewhere
    StepTimings timings;
};

// One frame of the pipeline: predict -> derive ranges -> match -> correct.
// The median filter only touches the exported map, never the recursive state.
// An all-invalid input state degenerates to full-range matching.
StepResult step(const DisparityState& state, const GrayImage& left, const GrayImage& right,
                const RigidMotion& motion, const StereoCalib& calib, const SgmParams& params,
                const FilterConfig& cfg, int threads = 1);

}  // namespace tsgm

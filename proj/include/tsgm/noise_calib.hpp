#pragma once

#include <string>
#include <vector>

#include "tsgm/dataset.hpp"
#include "tsgm/geometry.hpp"
#include "tsgm/image.hpp"
#include "tsgm/sgm.hpp"

namespace tsgm {

// Disparity-error histogram over [lo, hi) with uniform bins. Samples beyond
// the gate land in the underflow/overflow tallies so the histogram still
// accounts for every pooled sample; mean/variance summarize the gated
// samples only.
struct ErrorHistogram {
    double lo = -10.0;
    double hi = 10.0;
    double bin_width = 0.25;
    std::vector<long long> counts;
    long long underflow = 0;
    long long overflow = 0;

    ErrorHistogram() = default;
    ErrorHistogram(double lo_v, double hi_v, double bin_w);

    void add(double e);
    long long total() const;         // every sample ever added
    long long gated_count() const { return n_gated_; }
    double mean() const;             // gated samples
    double variance() const;         // unbiased sample variance, gated
    double fraction_within_1px() const;  // |e| <= 1 over all samples

private:
    long long n_gated_ = 0;
    long long n_within_1_ = 0;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
};

struct CalibOptions {
    double outlier_gate_px = 10.0;  // samples beyond this are kept out of the variance
    double bin_width = 0.25;
    double q_floor = 0.1;           // applied by the report, not the estimators

    void validate() const;
};

struct NoiseEstimate {
    double variance = 0.0;  // raw, no floor
    ErrorHistogram hist;
    long long samples_used = 0;  // gated samples entering the variance
};

// Pools warped-GT-vs-GT disparity errors over consecutive frame pairs: the GT
// of frame k-1 is warped by the relative camera motion and compared to the GT
// of frame k wherever both are valid. Frames must carry GT and poses. Fewer
// than 2 frames is an invalid argument; zero overlapping pixels a runtime
// error.
NoiseEstimate estimate_process_noise(const std::vector<SequenceFrame>& frames,
                                     const StereoCalib& calib, const CalibOptions& opts = {});

// Pools full-range SGM-vs-GT errors per frame, each frame matched in
// isolation. Frames must carry GT.
NoiseEstimate estimate_measurement_noise(const std::vector<SequenceFrame>& frames,
                                         const SgmParams& params, int threads = 1,
                                         const CalibOptions& opts = {});

// Per-pixel sum of |warped GT - GT| over consecutive pairs; pixels that never
// overlap stay 0. Same preconditions as estimate_process_noise.
Image<double> accumulate_error_map(const std::vector<SequenceFrame>& frames,
                                   const StereoCalib& calib);

// Text report with q=/r= lines a run config can consume directly; everything
// else is comments. q gets opts.q_floor applied; r is reported raw.
void write_calib_report(const std::string& path, const NoiseEstimate& process,
                        const NoiseEstimate& measurement, const CalibOptions& opts = {});

}  // namespace tsgm

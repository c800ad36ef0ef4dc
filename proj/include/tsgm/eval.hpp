#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tsgm/dataset.hpp"
#include "tsgm/sgm.hpp"
#include "tsgm/temporal_filter.hpp"

namespace tsgm {

struct OutlierOptions {
    double abs_thresh_px = 3.0;
    double rel_thresh = 0.05;
    // When set, a pixel with valid GT but no estimate counts as evaluated and
    // as an outlier instead of being skipped.
    bool strict_density = false;
};

struct OutlierStats {
    long long evaluated = 0;
    long long outliers = 0;

    double pct() const {
        return evaluated > 0 ? 100.0 * static_cast<double>(outliers) /
                                   static_cast<double>(evaluated)
                             : 0.0;
    }
};

// KITTI-style rule over pixels valid in both maps: an estimate is an outlier
// iff its absolute error exceeds abs_thresh_px AND its error relative to GT
// exceeds rel_thresh. GT validity is gt > 0.
OutlierStats count_outliers(const DisparityMap& est, const Image<double>& gt,
                            const OutlierOptions& opts = {});

// count_outliers as a percentage; zero evaluated pixels is a runtime error.
double outlier_rate(const DisparityMap& est, const Image<double>& gt,
                    const OutlierOptions& opts = {});

enum class BenchMode {
    full_space,  // per-frame SGM over the full range + median, no temporal state
    reduced,     // temporal pipeline: predict -> ranges -> match -> correct
    gt_self,     // GT rounded to integers scored against itself (sanity row)
};

struct BenchConfig {
    std::string name;
    BenchMode mode = BenchMode::full_space;
    SgmParams sgm;
    FilterConfig filter;  // reduced mode only
    int threads = 1;
};

struct FrameReport {
    int index = 0;
    double outlier_pct = 0.0;
    double density_pct = 0.0;  // valid estimate pixels over image pixels
    long long evaluated = 0;
    long long outliers = 0;
    // stage seconds; predict_s includes search-range derivation
    double census_s = 0, cost_s = 0, aggregate_s = 0, wta_s = 0;
    double predict_s = 0, correct_s = 0, detect_s = 0;
    double total_s = 0;
};

struct ConfigReport {
    std::string name;
    int frames = 0;
    double mean_time_s = 0.0;
    double median_time_s = 0.0;
    double mean_time_after_first_s = 0.0;  // skips the cold first frame when frames > 1
    double pooled_outlier_pct = 0.0;       // pooled pixels, the headline number
    double mean_frame_outlier_pct = 0.0;   // mean of per-frame percentages
    double density_pct = 0.0;
    std::vector<FrameReport> per_frame;
};

// Runs each config over the sequence (every frame needs GT disparity; reduced
// mode takes motion from poses and falls back to identity). Timing covers
// compute only, never I/O or scoring.
std::vector<ConfigReport> run_benchmark(const std::vector<SequenceFrame>& frames,
                                        const StereoCalib& calib,
                                        const std::vector<BenchConfig>& configs,
                                        const OutlierOptions& opts = {});

void write_report_table(std::ostream& out, const std::vector<ConfigReport>& reports);
// One row per config: config,frames,mean_time_s,median_time_s,outlier_pct,density_pct
void write_report_csv(std::ostream& out, const std::vector<ConfigReport>& reports);

}  // namespace tsgm

#pragma once

#include <string>

#include "tsgm/motion_detect.hpp"
#include "tsgm/sgm.hpp"
#include "tsgm/temporal_filter.hpp"

namespace tsgm {

// Everything a pipeline run needs besides the data paths.
struct RunConfig {
    SgmParams sgm;
    FilterConfig filter;
    DetectConfig detect;
    int threads = 1;

    void validate() const;
};

// Applies one key=value setting. Keys: q, r, p_init, disc_thresh,
// min_range_halfwidth, range_use_stddev, range_stddev_gain, p1, p2, paths,
// path_set (nondiag|diag), d_max, threads, score_thresh, merge_stop_iou,
// min_box_area. Unknown keys and unparsable values throw.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// key=value file with '#' comments layered onto `base`. The calibration
// report is valid input (its q=/r= lines apply, the rest is comments).
RunConfig load_run_config(const std::string& path, RunConfig base = {});

}  // namespace tsgm

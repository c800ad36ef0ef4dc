#pragma once

#include <utility>
#include <vector>

#include "tsgm/geometry.hpp"
#include "tsgm/sgm.hpp"

namespace tsgm {

// Cumulative sums with a zero first row/column: sum[i][j] holds the total of
// the input over rows < i, cols < j, so any rectangle costs four lookups.
struct SummedAreaTable {
    int width = 0;
    int height = 0;
    std::vector<double> sum;  // (height + 1) x (width + 1), row-major

    double at(int row, int col) const {
        return sum[static_cast<std::size_t>(row) * (width + 1) + col];
    }
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct DetectionBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double score = 0.0;  // mean absolute disparity difference inside

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long long area() const { return static_cast<long long>(width()) * height(); }

    friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

struct DetectConfig {
    std::vector<std::pair<int, int>> window_sizes = {
        {20, 20}, {30, 30}, {40, 40}, {50, 50}, {50, 75}};
    double score_thresh = 2.0;   // mean |disparity difference| per window
    double merge_stop_iou = 0.2;
    long long min_box_area = 400;

    void validate() const;
};

SummedAreaTable integral_image(const Image<double>& map);

// Rectangle total via inclusion-exclusion; throws on an out-of-bounds box.
double box_sum(const SummedAreaTable& sat, const DetectionBox& box);

double iou(const DetectionBox& a, const DetectionBox& b);

// Slides every configured window size over the bottom two-thirds of the map
// (stride: a quarter of the window dimension) and emits the windows whose
// mean exceeds score_thresh. Output order is (size, row, column), independent
// of the thread count.
std::vector<DetectionBox> detect_candidate_windows(const Image<double>& diff,
                                                   const DetectConfig& cfg, int threads = 1);

// Repeatedly replaces the pair with the highest intersection-over-union by
// its joint bounding box (score: area-weighted mean) until the best pair
// falls below merge_stop_iou, then discards boxes under min_box_area. Ties
// pick the earliest pair in list order.
std::vector<DetectionBox> greedy_merge(std::vector<DetectionBox> boxes, const DetectConfig& cfg);

// |d_pred - d_z| where both maps are valid, 0 elsewhere.
Image<double> disparity_difference(const DisparityState& pred, const DisparityMap& meas);

std::vector<DetectionBox> detect_moving_objects(const Image<double>& diff,
                                                const DetectConfig& cfg, int threads = 1);
std::vector<DetectionBox> detect_moving_objects(const DisparityState& pred,
                                                const DisparityMap& meas,
                                                const DetectConfig& cfg, int threads = 1);

}  // namespace tsgm

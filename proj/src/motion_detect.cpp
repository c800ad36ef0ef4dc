#include "tsgm/motion_detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsgm/parallel.hpp"

namespace tsgm {

void DetectConfig::validate() const {
    if (window_sizes.empty())
        throw std::invalid_argument("DetectConfig: no window sizes");
    for (const auto& [w, h] : window_sizes)
        if (w < 1 || h < 1)
            throw std::invalid_argument("DetectConfig: non-positive window size");
    if (!(score_thresh > 0.0))
        throw std::invalid_argument("DetectConfig: score_thresh must be positive");
    if (!(merge_stop_iou > 0.0 && merge_stop_iou < 1.0))
        throw std::invalid_argument("DetectConfig: merge_stop_iou must lie in (0, 1)");
    if (min_box_area < 0)
        throw std::invalid_argument("DetectConfig: negative min_box_area");
}

SummedAreaTable integral_image(const Image<double>& map) {
    SummedAreaTable sat;
    sat.width = map.width();
    sat.height = map.height();
    sat.sum.assign(static_cast<std::size_t>(sat.height + 1) * (sat.width + 1), 0.0);
    for (int y = 0; y < sat.height; ++y) {
        double row_acc = 0.0;
        const double* src = map.row(y);
        const double* above = sat.sum.data() + static_cast<std::size_t>(y) * (sat.width + 1);
        double* cur = sat.sum.data() + static_cast<std::size_t>(y + 1) * (sat.width + 1);
        for (int x = 0; x < sat.width; ++x) {
            row_acc += src[x];
            cur[x + 1] = above[x + 1] + row_acc;
        }
    }
    return sat;
}

double box_sum(const SummedAreaTable& sat, const DetectionBox& box) {
    if (box.x0 < 0 || box.y0 < 0 || box.x1 > sat.width || box.y1 > sat.height ||
        box.x0 >= box.x1 || box.y0 >= box.y1)
        throw std::invalid_argument("box_sum: box out of bounds");
    return sat.at(box.y1, box.x1) - sat.at(box.y0, box.x1) - sat.at(box.y1, box.x0) +
           sat.at(box.y0, box.x0);
}

double iou(const DetectionBox& a, const DetectionBox& b) {
    const int ix0 = std::max(a.x0, b.x0);
    const int iy0 = std::max(a.y0, b.y0);
    const int ix1 = std::min(a.x1, b.x1);
    const int iy1 = std::min(a.y1, b.y1);
    if (ix0 >= ix1 || iy0 >= iy1)
        return 0.0;
    const double inter = static_cast<double>(ix1 - ix0) * (iy1 - iy0);
    const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
    return inter / uni;
}

std::vector<DetectionBox> detect_candidate_windows(const Image<double>& diff,
                                                   const DetectConfig& cfg, int threads) {
    cfg.validate();
    const SummedAreaTable sat = integral_image(diff);
    const int w = diff.width();
    const int h = diff.height();
    const int region_top = h / 3;  // moving objects live in the bottom two-thirds

    std::vector<DetectionBox> out;
    for (const auto& [ww, wh] : cfg.window_sizes) {
        if (ww > w || region_top + wh > h)
            continue;
        const int stride_x = std::max(1, ww / 4);
        const int stride_y = std::max(1, wh / 4);
        const int n_rows = (h - wh - region_top) / stride_y + 1;

        std::vector<std::vector<DetectionBox>> rows(n_rows);
        parallel_rows(n_rows, threads, [&](int begin, int end) {
            for (int row = begin; row < end; ++row) {
                const int y0 = region_top + row * stride_y;
                for (int x0 = 0; x0 + ww <= w; x0 += stride_x) {
                    DetectionBox box{x0, y0, x0 + ww, y0 + wh, 0.0};
                    const double mean = box_sum(sat, box) / static_cast<double>(box.area());
                    if (mean > cfg.score_thresh) {
                        box.score = mean;
                        rows[row].push_back(box);
                    }
                }
            }
        });
        for (auto& row : rows)
            out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

std::vector<DetectionBox> greedy_merge(std::vector<DetectionBox> boxes, const DetectConfig& cfg) {
    cfg.validate();
    while (boxes.size() > 1) {
        double best = 0.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i + 1 < boxes.size(); ++i) {
            for (std::size_t j = i + 1; j < boxes.size(); ++j) {
                const double v = iou(boxes[i], boxes[j]);
                if (v > best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best < cfg.merge_stop_iou)
            break;
        DetectionBox& a = boxes[bi];
        const DetectionBox& b = boxes[bj];
        const double area_a = static_cast<double>(a.area());
        const double area_b = static_cast<double>(b.area());
        a.score = (a.score * area_a + b.score * area_b) / (area_a + area_b);
        a.x0 = std::min(a.x0, b.x0);
        a.y0 = std::min(a.y0, b.y0);
        a.x1 = std::max(a.x1, b.x1);
        a.y1 = std::max(a.y1, b.y1);
        boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    std::erase_if(boxes, [&](const DetectionBox& b) { return b.area() < cfg.min_box_area; });
    return boxes;
}

Image<double> disparity_difference(const DisparityState& pred, const DisparityMap& meas) {
    if (!pred.valid.same_size(meas.valid))
        throw std::invalid_argument("disparity_difference: dimension mismatch");
    Image<double> diff(pred.width(), pred.height(), 0.0);
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x)
            if (pred.is_valid(x, y) && meas.is_valid(x, y))
                diff(x, y) = std::abs(pred.d(x, y) - meas.d(x, y));
    return diff;
}

std::vector<DetectionBox> detect_moving_objects(const Image<double>& diff,
                                                const DetectConfig& cfg, int threads) {
    return greedy_merge(detect_candidate_windows(diff, cfg, threads), cfg);
}

std::vector<DetectionBox> detect_moving_objects(const DisparityState& pred,
                                                const DisparityMap& meas,
                                                const DetectConfig& cfg, int threads) {
    return detect_moving_objects(disparity_difference(pred, meas), cfg, threads);
}

}  // namespace tsgm

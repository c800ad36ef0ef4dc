#pragma once

#include <cstdint>

#include "tsgm/image.hpp"
#include "tsgm/matching_cost.hpp"

namespace tsgm {

enum class PathSet {
    nondiagonal,  // left, right, up, down
    diagonal,     // the four diagonals
};

struct SgmParams {
    int p1 = 6;    // penalty for a 1-level disparity change
    int p2 = 65;   // penalty for larger changes
    int paths = 8;  // 4 or 8 aggregation paths
    PathSet path_set = PathSet::nondiagonal;  // which 4 when paths == 4
    int d_max = 128;

    void validate() const;
};

// Integer disparity levels with a validity flag. Valid entries always lie in
// the pixel's search range.
struct DisparityMap {
    Image<std::int32_t> d;
    Image<std::uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int width, int height) : d(width, height), valid(width, height) {}

    int width() const { return valid.width(); }
    int height() const { return valid.height(); }
    bool is_valid(int x, int y) const { return valid(x, y) != 0; }

    friend bool operator==(const DisparityMap&, const DisparityMap&) = default;
};

// Sums the recursive per-path losses over the selected path directions. Each
// path applies the matching cost plus the P1/P2 jump penalties of its
// predecessor pixel, minus the predecessor minimum so 16-bit accumulators
// stay bounded. Disparities absent from the predecessor's range fall back to
// predecessor_min + P2. Runs as two full-frame sweeps (top-left to
// bottom-right, then the reverse), sequential by contract.
AggregatedCostVolume aggregate_paths(const MatchingCostVolume& vol, const SgmParams& params);

// Per-pixel argmin over the pixel's range; ties resolve to the smaller
// disparity. Pixels inside the census border margin carry no defined cost and
// come out invalid.
DisparityMap winner_takes_all(const AggregatedCostVolume& agg, int threads = 1);

// 3x3 block median. A pixel of the output is valid iff at least 5 of its 9
// neighbors (itself included) are valid; its value is the lower median of the
// valid neighbors. Runs outside the temporal filter loop, export only.
DisparityMap median_refine(const DisparityMap& dm, int threads = 1);

struct SgmStageTimings {
    double census_s = 0;
    double cost_s = 0;
    double aggregate_s = 0;
    double wta_s = 0;
};

// census -> cost volume -> path aggregation -> winner-takes-all. No median.
DisparityMap sgm_match(const GrayImage& left, const GrayImage& right,
                       const SearchRangeMap& ranges, const SgmParams& params,
                       int threads = 1, SgmStageTimings* timings = nullptr);

}  // namespace tsgm

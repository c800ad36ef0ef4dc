#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsgm/image.hpp"

namespace tsgm {

inline constexpr int kCensusRadius = 2;  // 5x5 window
inline constexpr int kCensusBits = 24;
inline constexpr int kMaxMatchingCost = kCensusBits;

// Per-pixel 24-bit census signature. Bits are assigned in raster order of the
// 5x5 window with the center skipped: the (-2,-2) neighbor lands in bit 23,
// (+2,+2) in bit 0. A bit is set iff the neighbor is strictly darker than the
// center. The 2-pixel border carries signature 0 and is undefined.
struct CensusMap {
    Image<std::uint32_t> sig;

    int width() const { return sig.width(); }
    int height() const { return sig.height(); }
    bool defined(int x, int y) const {
        return x >= kCensusRadius && x < sig.width() - kCensusRadius &&
               y >= kCensusRadius && y < sig.height() - kCensusRadius;
    }
};

// Per-pixel inclusive disparity interval [lo, hi] fed into matching and
// aggregation.
struct SearchRangeMap {
    Image<std::uint16_t> lo;
    Image<std::uint16_t> hi;

    SearchRangeMap() = default;
    SearchRangeMap(int width, int height, std::uint16_t lo_v, std::uint16_t hi_v)
        : lo(width, height, lo_v), hi(width, height, hi_v) {}

    static SearchRangeMap full(int width, int height, int d_max);

    int width() const { return lo.width(); }
    int height() const { return lo.height(); }
    int length(int x, int y) const { return hi(x, y) - lo(x, y) + 1; }
    void validate(int d_max) const;  // 0 <= lo <= hi < d_max everywhere
};

// Ragged per-pixel cost arrays over the ranges of a SearchRangeMap. Matching
// costs fit 8 bits (Hamming distance <= 24), aggregated costs fit 16 bits.
template <typename T>
struct CostVolume {
    SearchRangeMap ranges;
    std::vector<std::uint32_t> offsets;  // width*height + 1 prefix sums
    std::vector<T> cost;

    int width() const { return ranges.width(); }
    int height() const { return ranges.height(); }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * ranges.width() + x;
    }
    std::span<T> at(int x, int y) {
        const std::size_t i = index(x, y);
        return {cost.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
    std::span<const T> at(int x, int y) const {
        const std::size_t i = index(x, y);
        return {cost.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
};

using MatchingCostVolume = CostVolume<std::uint8_t>;
using AggregatedCostVolume = CostVolume<std::uint16_t>;

// Allocates a volume with the prefix-sum layout of `ranges`, cost entries
// value-initialized.
template <typename T>
CostVolume<T> make_cost_volume(const SearchRangeMap& ranges);

CensusMap census_transform(const GrayImage& img, int threads = 1);

// Hamming distance between the left signature at (x, y) and the right
// signature at (x - d, y). Out-of-image right coordinates and undefined
// border signatures cost the maximum (24).
int matching_cost(const CensusMap& left, const CensusMap& right, int x, int y, int d);

MatchingCostVolume build_cost_volume(const CensusMap& left, const CensusMap& right,
                                     const SearchRangeMap& ranges, int threads = 1);

}  // namespace tsgm

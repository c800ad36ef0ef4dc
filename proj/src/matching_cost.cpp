#include "tsgm/matching_cost.hpp"

#include <bit>
#include <limits>
#include <stdexcept>

#include "tsgm/parallel.hpp"

namespace tsgm {

SearchRangeMap SearchRangeMap::full(int width, int height, int d_max) {
    if (d_max < 1 || d_max > std::numeric_limits<std::uint16_t>::max())
        throw std::invalid_argument("SearchRangeMap: d_max out of range");
    return SearchRangeMap(width, height, 0, static_cast<std::uint16_t>(d_max - 1));
}

void SearchRangeMap::validate(int d_max) const {
    if (!lo.same_size(hi))
        throw std::invalid_argument("SearchRangeMap: lo/hi size mismatch");
    for (int y = 0; y < height(); ++y) {
        const std::uint16_t* l = lo.row(y);
        const std::uint16_t* h = hi.row(y);
        for (int x = 0; x < width(); ++x) {
            if (l[x] > h[x] || h[x] >= d_max)
                throw std::invalid_argument("SearchRangeMap: range outside [0, d_max)");
        }
    }
}

template <typename T>
CostVolume<T> make_cost_volume(const SearchRangeMap& ranges) {
    CostVolume<T> vol;
    vol.ranges = ranges;
    const std::size_t n = ranges.lo.pixel_count();
    vol.offsets.resize(n + 1);
    std::uint64_t total = 0;
    const std::uint16_t* lo = ranges.lo.data();
    const std::uint16_t* hi = ranges.hi.data();
    for (std::size_t i = 0; i < n; ++i) {
        vol.offsets[i] = static_cast<std::uint32_t>(total);
        total += static_cast<std::uint64_t>(hi[i]) - lo[i] + 1;
    }
    if (total > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("CostVolume: volume exceeds 32-bit addressing");
    vol.offsets[n] = static_cast<std::uint32_t>(total);
    vol.cost.assign(total, T{});
    return vol;
}

template CostVolume<std::uint8_t> make_cost_volume<std::uint8_t>(const SearchRangeMap&);
template CostVolume<std::uint16_t> make_cost_volume<std::uint16_t>(const SearchRangeMap&);

CensusMap census_transform(const GrayImage& img, int threads) {
    const int w = img.width();
    const int h = img.height();
    if (w < 2 * kCensusRadius + 1 || h < 2 * kCensusRadius + 1)
        throw std::invalid_argument("census_transform: image smaller than the 5x5 window");

    CensusMap map{Image<std::uint32_t>(w, h)};
    parallel_rows(h - 2 * kCensusRadius, threads, [&](int begin, int end) {
        for (int y = begin + kCensusRadius; y < end + kCensusRadius; ++y) {
            std::uint32_t* out = map.sig.row(y);
            for (int x = kCensusRadius; x < w - kCensusRadius; ++x) {
                const std::uint8_t center = img(x, y);
                std::uint32_t sig = 0;
                for (int dy = -kCensusRadius; dy <= kCensusRadius; ++dy) {
                    const std::uint8_t* row = img.row(y + dy);
                    for (int dx = -kCensusRadius; dx <= kCensusRadius; ++dx) {
                        if (dx == 0 && dy == 0)
                            continue;
                        sig = (sig << 1) | (row[x + dx] < center ? 1u : 0u);
                    }
                }
                out[x] = sig;
            }
        }
    });
    return map;
}

int matching_cost(const CensusMap& left, const CensusMap& right, int x, int y, int d) {
    const int xr = x - d;
    if (xr < 0 || !left.defined(x, y) || !right.defined(xr, y))
        return kMaxMatchingCost;
    return std::popcount(left.sig(x, y) ^ right.sig(xr, y));
}

MatchingCostVolume build_cost_volume(const CensusMap& left, const CensusMap& right,
                                     const SearchRangeMap& ranges, int threads) {
    if (!left.sig.same_size(right.sig) || !left.sig.same_size(ranges.lo))
        throw std::invalid_argument("build_cost_volume: input size mismatch");

    MatchingCostVolume vol = make_cost_volume<std::uint8_t>(ranges);
    const int w = vol.width();
    parallel_rows(vol.height(), threads, [&](int begin, int end) {
        for (int y = begin; y < end; ++y) {
            for (int x = 0; x < w; ++x) {
                const int lo = ranges.lo(x, y);
                std::span<std::uint8_t> out = vol.at(x, y);
                if (!left.defined(x, y)) {
                    std::fill(out.begin(), out.end(),
                              static_cast<std::uint8_t>(kMaxMatchingCost));
                    continue;
                }
                const std::uint32_t sig = left.sig(x, y);
                for (std::size_t i = 0; i < out.size(); ++i) {
                    const int xr = x - (lo + static_cast<int>(i));
                    out[i] = static_cast<std::uint8_t>(
                        (xr < 0 || !right.defined(xr, y))
                            ? kMaxMatchingCost
                            : std::popcount(sig ^ right.sig(xr, y)));
                }
            }
        }
    });
    return vol;
}

}  // namespace tsgm

#include "tsgm/sgm.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tsgm/parallel.hpp"

namespace tsgm {

void SgmParams::validate() const {
    if (p1 <= 0 || p2 < p1)
        throw std::invalid_argument("SgmParams: require 0 < p1 <= p2");
    if (paths != 4 && paths != 8)
        throw std::invalid_argument("SgmParams: paths must be 4 or 8");
    if (d_max < 1 || d_max > std::numeric_limits<std::uint16_t>::max())
        throw std::invalid_argument("SgmParams: d_max out of range");
    if ((kMaxMatchingCost + p2) * paths > std::numeric_limits<std::uint16_t>::max())
        throw std::invalid_argument("SgmParams: p2 too large for 16-bit accumulation");
}

namespace {

// Predecessor pixel offsets per path direction, grouped by sweep. The first
// sweep runs in raster order and covers the paths arriving from the top-left
// side, the second sweep mirrors it.
struct Pred {
    int dx, dy;
};

struct DirBuffers {
    std::vector<std::uint16_t> cur_l, prev_l;   // ragged row of per-path losses
    std::vector<std::int32_t> cur_min, prev_min;  // per-pixel minimum of that row
};

void run_sweep(AggregatedCostVolume& agg, const MatchingCostVolume& vol,
               const std::vector<Pred>& preds, bool reverse, int p1, int p2) {
    const int w = vol.width();
    const int h = vol.height();
    const std::uint16_t* lo_map = vol.ranges.lo.data();
    const std::uint32_t* offsets = vol.offsets.data();

    std::size_t max_row = 0;
    for (int y = 0; y < h; ++y)
        max_row = std::max<std::size_t>(
            max_row, offsets[static_cast<std::size_t>(y + 1) * w] -
                         offsets[static_cast<std::size_t>(y) * w]);

    std::vector<DirBuffers> dirs(preds.size());
    for (auto& d : dirs) {
        d.cur_l.resize(max_row);
        d.prev_l.resize(max_row);
        d.cur_min.assign(w, 0);
        d.prev_min.assign(w, 0);
    }

    const int y_first = reverse ? h - 1 : 0;
    const int y_last = reverse ? -1 : h;
    const int y_step = reverse ? -1 : 1;
    const int x_first = reverse ? w - 1 : 0;
    const int x_last = reverse ? -1 : w;
    const int x_step = reverse ? -1 : 1;

    for (int y = y_first; y != y_last; y += y_step) {
        const std::size_t row_i = static_cast<std::size_t>(y) * w;
        const std::uint32_t row_base = offsets[row_i];
        const std::uint32_t prev_row_base =
            (y - y_step >= 0 && y - y_step < h)
                ? offsets[static_cast<std::size_t>(y - y_step) * w]
                : 0;
        for (auto& d : dirs) {
            std::swap(d.cur_l, d.prev_l);
            std::swap(d.cur_min, d.prev_min);
        }
        for (int x = x_first; x != x_last; x += x_step) {
            const std::size_t i = row_i + x;
            const std::uint32_t entry = offsets[i] - row_base;
            const int lo = lo_map[i];
            const int len = static_cast<int>(offsets[i + 1] - offsets[i]);
            const std::uint8_t* c = vol.cost.data() + offsets[i];
            std::uint16_t* sum = agg.cost.data() + offsets[i];

            for (std::size_t k = 0; k < dirs.size(); ++k) {
                DirBuffers& dir = dirs[k];
                const int qx = x + preds[k].dx;
                const int qy = y + preds[k].dy;
                std::uint16_t* out = dir.cur_l.data() + entry;
                std::int32_t path_min = std::numeric_limits<std::int32_t>::max();

                if (qx < 0 || qx >= w || qy < 0 || qy >= h) {
                    // path starts here
                    for (int j = 0; j < len; ++j) {
                        out[j] = c[j];
                        sum[j] = static_cast<std::uint16_t>(sum[j] + c[j]);
                        path_min = std::min<std::int32_t>(path_min, c[j]);
                    }
                } else {
                    const std::size_t qi = static_cast<std::size_t>(qy) * w + qx;
                    const bool same_row = preds[k].dy == 0;
                    const std::uint32_t q_entry =
                        offsets[qi] - (same_row ? row_base : prev_row_base);
                    const std::uint16_t* lq =
                        (same_row ? dir.cur_l.data() : dir.prev_l.data()) + q_entry;
                    const int q_min = same_row ? dir.cur_min[qx] : dir.prev_min[qx];
                    const int q_len = static_cast<int>(offsets[qi + 1] - offsets[qi]);
                    const int shift = lo - lo_map[qi];  // q index of this pixel's lowest d
                    const int cap = q_min + p2;

                    for (int j = 0; j < len; ++j) {
                        const int qj = j + shift;
                        int best = cap;
                        if (qj >= 0 && qj < q_len)
                            best = std::min(best, static_cast<int>(lq[qj]));
                        if (qj - 1 >= 0 && qj - 1 < q_len)
                            best = std::min(best, lq[qj - 1] + p1);
                        if (qj + 1 >= 0 && qj + 1 < q_len)
                            best = std::min(best, lq[qj + 1] + p1);
                        const int l = c[j] + best - q_min;
                        out[j] = static_cast<std::uint16_t>(l);
                        sum[j] = static_cast<std::uint16_t>(sum[j] + l);
                        path_min = std::min(path_min, l);
                    }
                }
                dir.cur_min[x] = path_min;
            }
        }
    }
}

}  // namespace

AggregatedCostVolume aggregate_paths(const MatchingCostVolume& vol, const SgmParams& params) {
    params.validate();
    AggregatedCostVolume agg;
    agg.ranges = vol.ranges;
    agg.offsets = vol.offsets;
    agg.cost.assign(vol.cost.size(), 0);

    std::vector<Pred> forward, backward;
    const bool diag = params.paths == 8 || params.path_set == PathSet::diagonal;
    const bool nondiag = params.paths == 8 || params.path_set == PathSet::nondiagonal;
    if (nondiag) {
        forward.push_back({-1, 0});
        forward.push_back({0, -1});
        backward.push_back({1, 0});
        backward.push_back({0, 1});
    }
    if (diag) {
        forward.push_back({-1, -1});
        forward.push_back({1, -1});
        backward.push_back({1, 1});
        backward.push_back({-1, 1});
    }

    run_sweep(agg, vol, forward, false, params.p1, params.p2);
    run_sweep(agg, vol, backward, true, params.p1, params.p2);
    return agg;
}

DisparityMap winner_takes_all(const AggregatedCostVolume& agg, int threads) {
    const int w = agg.width();
    const int h = agg.height();
    DisparityMap dm(w, h);
    parallel_rows(h, threads, [&](int begin, int end) {
        for (int y = begin; y < end; ++y) {
            for (int x = 0; x < w; ++x) {
                // census border pixels have no defined cost
                if (x < kCensusRadius || x >= w - kCensusRadius ||
                    y < kCensusRadius || y >= h - kCensusRadius) {
                    continue;
                }
                const std::span<const std::uint16_t> costs = agg.at(x, y);
                int best = 0;
                for (int j = 1; j < static_cast<int>(costs.size()); ++j) {
                    if (costs[j] < costs[best])
                        best = j;
                }
                dm.d(x, y) = agg.ranges.lo(x, y) + best;
                dm.valid(x, y) = 1;
            }
        }
    });
    return dm;
}

DisparityMap median_refine(const DisparityMap& dm, int threads) {
    const int w = dm.width();
    const int h = dm.height();
    DisparityMap out(w, h);
    parallel_rows(h, threads, [&](int begin, int end) {
        for (int y = begin; y < end; ++y) {
            for (int x = 0; x < w; ++x) {
                std::array<std::int32_t, 9> vals;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h || !dm.is_valid(nx, ny))
                            continue;
                        vals[n++] = dm.d(nx, ny);
                    }
                }
                if (n < 5)
                    continue;
                std::nth_element(vals.begin(), vals.begin() + (n - 1) / 2, vals.begin() + n);
                out.d(x, y) = vals[(n - 1) / 2];
                out.valid(x, y) = 1;
            }
        }
    });
    return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

DisparityMap sgm_match(const GrayImage& left, const GrayImage& right,
                       const SearchRangeMap& ranges, const SgmParams& params,
                       int threads, SgmStageTimings* timings) {
    if (!left.same_size(right))
        throw std::invalid_argument("sgm_match: image size mismatch");
    if (!left.same_size(ranges.lo))
        throw std::invalid_argument("sgm_match: range map size mismatch");
    params.validate();
    ranges.validate(params.d_max);

    auto t0 = std::chrono::steady_clock::now();
    const CensusMap cl = census_transform(left, threads);
    const CensusMap cr = census_transform(right, threads);
    if (timings)
        timings->census_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const MatchingCostVolume vol = build_cost_volume(cl, cr, ranges, threads);
    if (timings)
        timings->cost_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const AggregatedCostVolume agg = aggregate_paths(vol, params);
    if (timings)
        timings->aggregate_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    DisparityMap dm = winner_takes_all(agg, threads);
    if (timings)
        timings->wta_s = seconds_since(t0);
    return dm;
}

}  // namespace tsgm

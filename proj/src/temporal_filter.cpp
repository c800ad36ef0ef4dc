#include "tsgm/temporal_filter.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "tsgm/parallel.hpp"

namespace tsgm {

void NoiseParams::validate() const {
    if (!(q > 0.0) || !(r > 0.0))
        throw std::invalid_argument("NoiseParams: q and r must be positive");
}

void FilterConfig::validate(int d_max) const {
    noise.validate();
    if (p_init < static_cast<double>(d_max) * d_max / 4.0)
        throw std::invalid_argument("FilterConfig: p_init does not cover the disparity space");
    if (disc_thresh < 1.0)
        throw std::invalid_argument("FilterConfig: disc_thresh must be at least 1");
    if (min_range_halfwidth < 0)
        throw std::invalid_argument("FilterConfig: negative min_range_halfwidth");
    if (range_use_stddev && !(range_stddev_gain > 0.0))
        throw std::invalid_argument("FilterConfig: range_stddev_gain must be positive");
}

DisparityState predict(const DisparityState& state, const RigidMotion& motion,
                       const StereoCalib& calib, const FilterConfig& cfg) {
    const DispHomography h = disparity_homography(motion, calib);
    WarpedState warped = warp_state_ex(state, h, calib.d_max);

    const int w = state.width();
    const int h_px = state.height();
    for (int y = 0; y < h_px; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!warped.state.is_valid(x, y))
                continue;
            const double d_src = warped.source_d(x, y);
            if (!(d_src > 0.0)) {
                warped.state.invalidate(x, y);
                continue;
            }
            const double phi = warped.state.d(x, y) / d_src;
            warped.state.p(x, y) = phi * phi * warped.state.p(x, y) + cfg.noise.q;
        }
    }
    return fill_zoom_holes(reject_discontinuities(warped.state, cfg));
}

DisparityState reject_discontinuities(const DisparityState& state, const FilterConfig& cfg) {
    static constexpr int kDx[4] = {1, -1, 0, 0};
    static constexpr int kDy[4] = {0, 0, 1, -1};
    const int w = state.width();
    const int h = state.height();
    DisparityState out = state;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!state.is_valid(x, y))
                continue;
            for (int n = 0; n < 4; ++n) {
                const int nx = x + kDx[n];
                const int ny = y + kDy[n];
                if (!state.valid.contains(nx, ny) || !state.is_valid(nx, ny))
                    continue;
                if (std::abs(state.d(x, y) - state.d(nx, ny)) > cfg.disc_thresh) {
                    out.invalidate(x, y);
                    break;
                }
            }
        }
    }
    return out;
}

DisparityState fill_zoom_holes(const DisparityState& state) {
    const int w = state.width();
    const int h = state.height();
    DisparityState out = state;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (state.is_valid(x, y))
                continue;
            const bool horiz = state.valid.contains(x - 1, y) && state.valid.contains(x + 1, y) &&
                               state.is_valid(x - 1, y) && state.is_valid(x + 1, y);
            const bool vert = state.valid.contains(x, y - 1) && state.valid.contains(x, y + 1) &&
                              state.is_valid(x, y - 1) && state.is_valid(x, y + 1);
            if (!horiz && !vert)
                continue;
            double d_sum = 0.0, p_sum = 0.0;
            int n = 0;
            if (horiz) {
                d_sum += state.d(x - 1, y) + state.d(x + 1, y);
                p_sum += state.p(x - 1, y) + state.p(x + 1, y);
                n += 2;
            }
            if (vert) {
                d_sum += state.d(x, y - 1) + state.d(x, y + 1);
                p_sum += state.p(x, y - 1) + state.p(x, y + 1);
                n += 2;
            }
            out.set(x, y, d_sum / n, p_sum / n);
        }
    }
    return out;
}

SearchRangeMap derive_search_ranges(const DisparityState& state, const StereoCalib& calib,
                                    const FilterConfig& cfg) {
    const int w = state.width();
    const int h = state.height();
    const int top = calib.d_max - 1;
    const int min_len = 2 * cfg.min_range_halfwidth + 1;
    SearchRangeMap ranges(w, h, 0, static_cast<std::uint16_t>(top));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!state.is_valid(x, y))
                continue;
            const double d = state.d(x, y);
            const double half =
                cfg.range_use_stddev ? cfg.range_stddev_gain * std::sqrt(state.p(x, y))
                                     : state.p(x, y);
            int lo = std::max(0, std::min(top, static_cast<int>(std::floor(d - half))));
            int hi = std::max(0, std::min(top, static_cast<int>(std::ceil(d + half))));
            const int deficit = min_len - (hi - lo + 1);
            if (deficit > 0) {
                lo -= deficit / 2;
                hi += deficit - deficit / 2;
                if (lo < 0) {
                    hi = std::min(top, hi - lo);
                    lo = 0;
                }
                if (hi > top) {
                    lo = std::max(0, lo - (hi - top));
                    hi = top;
                }
            }
            ranges.lo(x, y) = static_cast<std::uint16_t>(lo);
            ranges.hi(x, y) = static_cast<std::uint16_t>(hi);
        }
    }
    return ranges;
}

DisparityState correct(const DisparityState& pred, const DisparityMap& meas,
                       const FilterConfig& cfg) {
    if (!pred.valid.same_size(meas.valid))
        throw std::invalid_argument("correct: dimension mismatch");
    const int w = pred.width();
    const int h = pred.height();
    const double r = cfg.noise.r;
    DisparityState out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool has_pred = pred.is_valid(x, y);
            const bool has_meas = meas.is_valid(x, y);
            if (has_pred && has_meas) {
                const double p = pred.p(x, y);
                const double k = p / (p + r);
                const double d = pred.d(x, y) + k * (meas.d(x, y) - pred.d(x, y));
                out.set(x, y, d, (1.0 - k) * (1.0 - k) * p + k * k * r);
            } else if (has_meas) {
                out.set(x, y, meas.d(x, y), r);
            } else if (has_pred) {
                out.set(x, y, pred.d(x, y), pred.p(x, y));
            }
        }
    }
    return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DisparityMap render_integer(const DisparityState& state, int threads) {
    DisparityMap dm(state.width(), state.height());
    parallel_rows(state.height(), threads, [&](int begin, int end) {
        for (int y = begin; y < end; ++y) {
            for (int x = 0; x < state.width(); ++x) {
                if (!state.is_valid(x, y))
                    continue;
                dm.d(x, y) = static_cast<std::int32_t>(std::lround(state.d(x, y)));
                dm.valid(x, y) = 1;
            }
        }
    });
    return dm;
}

}  // namespace

StepResult step(const DisparityState& state, const GrayImage& left, const GrayImage& right,
                const RigidMotion& motion, const StereoCalib& calib, const SgmParams& params,
                const FilterConfig& cfg, int threads) {
    if (!left.same_size(right))
        throw std::invalid_argument("step: left/right dimension mismatch");
    if (state.width() == 0 && state.height() == 0)  // default state: no prior
        return step(DisparityState(left.width(), left.height()), left, right, motion, calib,
                    params, cfg, threads);
    if (!left.same_size(state.valid))
        throw std::invalid_argument("step: state dimension mismatch");
    if (params.d_max != calib.d_max)
        throw std::invalid_argument("step: params.d_max disagrees with calibration");

    StepResult res;
    auto t0 = std::chrono::steady_clock::now();
    const DisparityState pred = predict(state, motion, calib, cfg);
    res.timings.predict_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const SearchRangeMap ranges = derive_search_ranges(pred, calib, cfg);
    res.timings.ranges_s = seconds_since(t0);

    const DisparityMap meas = sgm_match(left, right, ranges, params, threads, &res.timings.sgm);

    t0 = std::chrono::steady_clock::now();
    res.state = correct(pred, meas, cfg);
    res.timings.correct_s = seconds_since(t0);

    res.diff = Image<double>(left.width(), left.height(), 0.0);
    for (int y = 0; y < left.height(); ++y) {
        for (int x = 0; x < left.width(); ++x) {
            if (pred.is_valid(x, y) && meas.is_valid(x, y))
                res.diff(x, y) = std::abs(pred.d(x, y) - meas.d(x, y));
        }
    }
    res.export_map = median_refine(render_integer(res.state, threads), threads);
    return res;
}

}  // namespace tsgm

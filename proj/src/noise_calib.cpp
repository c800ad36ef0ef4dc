#include "tsgm/noise_calib.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tsgm {

ErrorHistogram::ErrorHistogram(double lo_v, double hi_v, double bin_w)
    : lo(lo_v), hi(hi_v), bin_width(bin_w) {
    if (!(hi > lo) || !(bin_width > 0.0))
        throw std::invalid_argument("ErrorHistogram: bad bin layout");
    counts.assign(static_cast<std::size_t>(std::ceil((hi - lo) / bin_width)), 0);
}

void ErrorHistogram::add(double e) {
    if (std::abs(e) <= 1.0)
        ++n_within_1_;
    if (e < lo) {
        ++underflow;
        return;
    }
    if (e >= hi) {
        ++overflow;
        return;
    }
    auto bin = static_cast<std::size_t>((e - lo) / bin_width);
    if (bin >= counts.size())
        bin = counts.size() - 1;  // e just below hi with rounding
    ++counts[bin];
    ++n_gated_;
    sum_ += e;
    sum_sq_ += e * e;
}

long long ErrorHistogram::total() const {
    return n_gated_ + underflow + overflow;
}

double ErrorHistogram::mean() const {
    return n_gated_ > 0 ? sum_ / static_cast<double>(n_gated_) : 0.0;
}

double ErrorHistogram::variance() const {
    if (n_gated_ < 2)
        return 0.0;
    const double n = static_cast<double>(n_gated_);
    const double m = sum_ / n;
    const double var = (sum_sq_ - n * m * m) / (n - 1.0);
    return var > 0.0 ? var : 0.0;
}

double ErrorHistogram::fraction_within_1px() const {
    const long long t = total();
    return t > 0 ? static_cast<double>(n_within_1_) / static_cast<double>(t) : 0.0;
}

void CalibOptions::validate() const {
    if (!(outlier_gate_px > 0.0))
        throw std::invalid_argument("CalibOptions: outlier_gate_px must be positive");
    if (!(bin_width > 0.0) || bin_width > outlier_gate_px)
        throw std::invalid_argument("CalibOptions: bad bin_width");
    if (!(q_floor >= 0.0))
        throw std::invalid_argument("CalibOptions: negative q_floor");
}

namespace {

DisparityState state_from_gt(const Image<double>& gt) {
    DisparityState s(gt.width(), gt.height());
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt(x, y) > 0.0)
                s.set(x, y, gt(x, y), 0.0);
    return s;
}

void require_gt(const SequenceFrame& f, const char* who) {
    if (!f.gt_disp)
        throw std::invalid_argument(std::string(who) + ": frame " + std::to_string(f.index) +
                                    " has no GT disparity");
}

void require_pose(const SequenceFrame& f, const char* who) {
    if (!f.pose)
        throw std::invalid_argument(std::string(who) + ": frame " + std::to_string(f.index) +
                                    " has no pose");
}

NoiseEstimate finish(ErrorHistogram hist, const char* who) {
    if (hist.total() == 0)
        throw std::runtime_error(std::string(who) + ": no overlapping valid pixels");
    NoiseEstimate est;
    est.variance = hist.variance();
    est.samples_used = hist.gated_count();
    est.hist = std::move(hist);
    return est;
}

}  // namespace

NoiseEstimate estimate_process_noise(const std::vector<SequenceFrame>& frames,
                                     const StereoCalib& calib, const CalibOptions& opts) {
    opts.validate();
    if (frames.size() < 2)
        throw std::invalid_argument("estimate_process_noise: need at least 2 frames");
    ErrorHistogram hist(-opts.outlier_gate_px, opts.outlier_gate_px, opts.bin_width);
    for (std::size_t k = 1; k < frames.size(); ++k) {
        const SequenceFrame& prev = frames[k - 1];
        const SequenceFrame& cur = frames[k];
        require_gt(prev, "estimate_process_noise");
        require_gt(cur, "estimate_process_noise");
        require_pose(prev, "estimate_process_noise");
        require_pose(cur, "estimate_process_noise");
        const RigidMotion motion = relative_motion(*prev.pose, *cur.pose);
        const DispHomography h = disparity_homography(motion, calib);
        const DisparityState warped =
            warp_state(state_from_gt(*prev.gt_disp), h, calib.d_max);
        const Image<double>& gt = *cur.gt_disp;
        for (int y = 0; y < warped.height(); ++y)
            for (int x = 0; x < warped.width(); ++x)
                if (warped.is_valid(x, y) && gt(x, y) > 0.0)
                    hist.add(warped.d(x, y) - gt(x, y));
    }
    return finish(std::move(hist), "estimate_process_noise");
}

NoiseEstimate estimate_measurement_noise(const std::vector<SequenceFrame>& frames,
                                         const SgmParams& params, int threads,
                                         const CalibOptions& opts) {
    opts.validate();
    if (frames.empty())
        throw std::invalid_argument("estimate_measurement_noise: need at least 1 frame");
    params.validate();
    ErrorHistogram hist(-opts.outlier_gate_px, opts.outlier_gate_px, opts.bin_width);
    for (const SequenceFrame& f : frames) {
        require_gt(f, "estimate_measurement_noise");
        const SearchRangeMap ranges =
            SearchRangeMap::full(f.left.width(), f.left.height(), params.d_max);
        const DisparityMap dm = sgm_match(f.left, f.right, ranges, params, threads);
        const Image<double>& gt = *f.gt_disp;
        for (int y = 0; y < dm.height(); ++y)
            for (int x = 0; x < dm.width(); ++x)
                if (dm.is_valid(x, y) && gt(x, y) > 0.0)
                    hist.add(dm.d(x, y) - gt(x, y));
    }
    return finish(std::move(hist), "estimate_measurement_noise");
}

Image<double> accumulate_error_map(const std::vector<SequenceFrame>& frames,
                                   const StereoCalib& calib) {
    if (frames.size() < 2)
        throw std::invalid_argument("accumulate_error_map: need at least 2 frames");
    Image<double> acc;
    long long overlap = 0;
    for (std::size_t k = 1; k < frames.size(); ++k) {
        const SequenceFrame& prev = frames[k - 1];
        const SequenceFrame& cur = frames[k];
        require_gt(prev, "accumulate_error_map");
        require_gt(cur, "accumulate_error_map");
        require_pose(prev, "accumulate_error_map");
        require_pose(cur, "accumulate_error_map");
        if (acc.empty())
            acc = Image<double>(cur.gt_disp->width(), cur.gt_disp->height(), 0.0);
        const RigidMotion motion = relative_motion(*prev.pose, *cur.pose);
        const DispHomography h = disparity_homography(motion, calib);
        const DisparityState warped =
            warp_state(state_from_gt(*prev.gt_disp), h, calib.d_max);
        const Image<double>& gt = *cur.gt_disp;
        for (int y = 0; y < warped.height(); ++y) {
            for (int x = 0; x < warped.width(); ++x) {
                if (warped.is_valid(x, y) && gt(x, y) > 0.0) {
                    acc(x, y) += std::abs(warped.d(x, y) - gt(x, y));
                    ++overlap;
                }
            }
        }
    }
    if (overlap == 0)
        throw std::runtime_error("accumulate_error_map: no overlapping valid pixels");
    return acc;
}

void write_calib_report(const std::string& path, const NoiseEstimate& process,
                        const NoiseEstimate& measurement, const CalibOptions& opts) {
    opts.validate();
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_calib_report: cannot open " + path);
    out.precision(6);
    const double q = std::max(process.variance, opts.q_floor);
    out << "# noise calibration report\n";
    out << "# process:     raw variance " << process.variance << " px^2 over "
        << process.samples_used << " samples, " << 100.0 * process.hist.fraction_within_1px()
        << "% within +/-1 px\n";
    out << "# measurement: raw variance " << measurement.variance << " px^2 over "
        << measurement.samples_used << " samples, "
        << 100.0 * measurement.hist.fraction_within_1px() << "% within +/-1 px\n";
    if (q != process.variance)
        out << "# q floor " << opts.q_floor << " applied\n";
    out << "q=" << q << "\n";
    out << "r=" << measurement.variance << "\n";
    out << "#\n# error histogram (gate +/-" << opts.outlier_gate_px << " px)\n";
    out << "# bin_lo bin_hi process_count measurement_count\n";
    const ErrorHistogram& ph = process.hist;
    const ErrorHistogram& mh = measurement.hist;
    const bool same_layout = ph.lo == mh.lo && ph.bin_width == mh.bin_width &&
                             ph.counts.size() == mh.counts.size();
    out << "# -inf " << ph.lo << " " << ph.underflow << " " << mh.underflow << "\n";
    for (std::size_t i = 0; i < ph.counts.size(); ++i) {
        const double b0 = ph.lo + static_cast<double>(i) * ph.bin_width;
        out << "# " << b0 << " " << b0 + ph.bin_width << " " << ph.counts[i] << " "
            << (same_layout ? mh.counts[i] : -1) << "\n";
    }
    out << "# " << ph.hi << " +inf " << ph.overflow << " " << mh.overflow << "\n";
    if (!out)
        throw std::runtime_error("write_calib_report: write failed for " + path);
}

}  // namespace tsgm

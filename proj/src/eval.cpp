#include "tsgm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace tsgm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

long long count_valid(const DisparityMap& dm) {
    long long n = 0;
    for (int y = 0; y < dm.height(); ++y)
        for (int x = 0; x < dm.width(); ++x)
            if (dm.is_valid(x, y))
                ++n;
    return n;
}

DisparityMap round_gt(const Image<double>& gt) {
    DisparityMap dm(gt.width(), gt.height());
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (gt(x, y) > 0.0) {
                dm.d(x, y) = static_cast<std::int32_t>(std::lround(gt(x, y)));
                dm.valid(x, y) = 1;
            }
        }
    }
    return dm;
}

double mean_of(const std::vector<double>& v, std::size_t from = 0) {
    if (v.size() <= from)
        return 0.0;
    double s = 0.0;
    for (std::size_t i = from; i < v.size(); ++i)
        s += v[i];
    return s / static_cast<double>(v.size() - from);
}

double median_of(std::vector<double> v) {
    if (v.empty())
        return 0.0;
    const std::size_t mid = (v.size() - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

}  // namespace

OutlierStats count_outliers(const DisparityMap& est, const Image<double>& gt,
                            const OutlierOptions& opts) {
    if (!est.valid.same_size(gt))
        throw std::invalid_argument("count_outliers: est/gt dimension mismatch");
    OutlierStats stats;
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            const double g = gt(x, y);
            if (!(g > 0.0))
                continue;
            if (!est.is_valid(x, y)) {
                if (opts.strict_density) {
                    ++stats.evaluated;
                    ++stats.outliers;
                }
                continue;
            }
            ++stats.evaluated;
            const double e = std::abs(est.d(x, y) - g);
            if (e > opts.abs_thresh_px && e / g > opts.rel_thresh)
                ++stats.outliers;
        }
    }
    return stats;
}

double outlier_rate(const DisparityMap& est, const Image<double>& gt,
                    const OutlierOptions& opts) {
    const OutlierStats stats = count_outliers(est, gt, opts);
    if (stats.evaluated == 0)
        throw std::runtime_error("outlier_rate: no mutually valid pixels");
    return stats.pct();
}

std::vector<ConfigReport> run_benchmark(const std::vector<SequenceFrame>& frames,
                                        const StereoCalib& calib,
                                        const std::vector<BenchConfig>& configs,
                                        const OutlierOptions& opts) {
    if (frames.empty())
        throw std::invalid_argument("run_benchmark: empty sequence");
    for (const SequenceFrame& f : frames)
        if (!f.gt_disp)
            throw std::invalid_argument("run_benchmark: frame " + std::to_string(f.index) +
                                        " has no GT disparity");

    std::vector<ConfigReport> reports;
    for (const BenchConfig& bc : configs) {
        bc.sgm.validate();
        if (bc.mode == BenchMode::reduced)
            bc.filter.validate(bc.sgm.d_max);

        ConfigReport rep;
        rep.name = bc.name;
        rep.frames = static_cast<int>(frames.size());

        DisparityState state;  // reduced-mode recursion
        long long pooled_eval = 0, pooled_out = 0, pooled_valid = 0, pooled_px = 0;
        std::vector<double> times;
        for (std::size_t k = 0; k < frames.size(); ++k) {
            const SequenceFrame& f = frames[k];
            FrameReport fr;
            fr.index = f.index;
            DisparityMap est;

            const auto t0 = std::chrono::steady_clock::now();
            switch (bc.mode) {
                case BenchMode::full_space: {
                    SgmStageTimings st;
                    const SearchRangeMap ranges =
                        SearchRangeMap::full(f.left.width(), f.left.height(), bc.sgm.d_max);
                    est = median_refine(
                        sgm_match(f.left, f.right, ranges, bc.sgm, bc.threads, &st),
                        bc.threads);
                    fr.census_s = st.census_s;
                    fr.cost_s = st.cost_s;
                    fr.aggregate_s = st.aggregate_s;
                    fr.wta_s = st.wta_s;
                    break;
                }
                case BenchMode::reduced: {
                    RigidMotion motion;
                    if (k > 0 && frames[k - 1].pose && f.pose)
                        motion = relative_motion(*frames[k - 1].pose, *f.pose);
                    StepResult res = step(state, f.left, f.right, motion, calib, bc.sgm,
                                          bc.filter, bc.threads);
                    state = std::move(res.state);
                    est = std::move(res.export_map);
                    fr.census_s = res.timings.sgm.census_s;
                    fr.cost_s = res.timings.sgm.cost_s;
                    fr.aggregate_s = res.timings.sgm.aggregate_s;
                    fr.wta_s = res.timings.sgm.wta_s;
                    fr.predict_s = res.timings.predict_s + res.timings.ranges_s;
                    fr.correct_s = res.timings.correct_s;
                    break;
                }
                case BenchMode::gt_self:
                    est = round_gt(*f.gt_disp);
                    break;
            }
            fr.total_s = seconds_since(t0);
            times.push_back(fr.total_s);

            const OutlierStats stats = count_outliers(est, *f.gt_disp, opts);
            fr.evaluated = stats.evaluated;
            fr.outliers = stats.outliers;
            fr.outlier_pct = stats.pct();
            const long long valid = count_valid(est);
            const long long px = static_cast<long long>(est.width()) * est.height();
            fr.density_pct =
                px > 0 ? 100.0 * static_cast<double>(valid) / static_cast<double>(px) : 0.0;

            pooled_eval += stats.evaluated;
            pooled_out += stats.outliers;
            pooled_valid += valid;
            pooled_px += px;
            rep.per_frame.push_back(fr);
        }

        rep.mean_time_s = mean_of(times);
        rep.median_time_s = median_of(times);
        rep.mean_time_after_first_s = times.size() > 1 ? mean_of(times, 1) : rep.mean_time_s;
        rep.pooled_outlier_pct =
            pooled_eval > 0
                ? 100.0 * static_cast<double>(pooled_out) / static_cast<double>(pooled_eval)
                : 0.0;
        double fo = 0.0;
        for (const FrameReport& fr : rep.per_frame)
            fo += fr.outlier_pct;
        rep.mean_frame_outlier_pct = fo / static_cast<double>(rep.per_frame.size());
        rep.density_pct =
            pooled_px > 0
                ? 100.0 * static_cast<double>(pooled_valid) / static_cast<double>(pooled_px)
                : 0.0;
        reports.push_back(std::move(rep));
    }
    return reports;
}

void write_report_table(std::ostream& out, const std::vector<ConfigReport>& reports) {
    std::size_t name_w = 6;
    for (const ConfigReport& r : reports)
        name_w = std::max(name_w, r.name.size());
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << "config" << std::right
        << std::setw(7) << "frames" << std::setw(12) << "mean[s]" << std::setw(12)
        << "median[s]" << std::setw(12) << "warm[s]" << std::setw(12) << "outlier%"
        << std::setw(12) << "frame-out%" << std::setw(11) << "density%" << "\n";
    out << std::fixed;
    for (const ConfigReport& r : reports) {
        out << std::left << std::setw(static_cast<int>(name_w) + 2) << r.name << std::right
            << std::setw(7) << r.frames << std::setprecision(4) << std::setw(12)
            << r.mean_time_s << std::setw(12) << r.median_time_s << std::setw(12)
            << r.mean_time_after_first_s << std::setprecision(2) << std::setw(12)
            << r.pooled_outlier_pct << std::setw(12) << r.mean_frame_outlier_pct
            << std::setw(11) << r.density_pct << "\n";
    }
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
}

void write_report_csv(std::ostream& out, const std::vector<ConfigReport>& reports) {
    out << "config,frames,mean_time_s,median_time_s,outlier_pct,density_pct\n";
    for (const ConfigReport& r : reports) {
        out << r.name << ',' << r.frames << ',' << r.mean_time_s << ',' << r.median_time_s
            << ',' << r.pooled_outlier_pct << ',' << r.density_pct << "\n";
    }
}

}  // namespace tsgm

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsgm/config.hpp"
#include "tsgm/dataset.hpp"
#include "tsgm/eval.hpp"
#include "tsgm/image_io.hpp"
#include "tsgm/motion_detect.hpp"
#include "tsgm/noise_calib.hpp"
#include "tsgm/sgm.hpp"
#include "tsgm/temporal_filter.hpp"

namespace fs = std::filesystem;
using namespace tsgm;

namespace {

// Common config plumbing: defaults, then --config file, then explicit flags.
struct ConfigFlags {
    std::string config_path;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_paths = nullptr;
    CLI::Option* o_path_set = nullptr;
    CLI::Option* o_q = nullptr;
    CLI::Option* o_r = nullptr;
    CLI::Option* o_d_max = nullptr;
    CLI::Option* o_p1 = nullptr;
    CLI::Option* o_p2 = nullptr;
    int threads = 1;
    int paths = 8;
    std::string path_set = "nondiag";
    double q = 0.5;
    double r = 1.0;
    int d_max = 128;
    int p1 = 6;
    int p2 = 65;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file")
            ->check(CLI::ExistingFile);
        o_threads = cmd->add_option("--threads", threads, "worker thread count");
        o_paths = cmd->add_option("--paths", paths, "aggregation path count (4 or 8)");
        o_path_set =
            cmd->add_option("--path-set", path_set, "4-path direction set: nondiag or diag");
        o_q = cmd->add_option("--q", q, "process noise variance, px^2");
        o_r = cmd->add_option("--r", r, "measurement noise variance, px^2");
        o_d_max = cmd->add_option("--d-max", d_max, "disparity levels");
        o_p1 = cmd->add_option("--p1", p1, "small-jump penalty");
        o_p2 = cmd->add_option("--p2", p2, "large-jump penalty");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty())
            cfg = load_run_config(config_path, cfg);
        if (o_threads->count())
            cfg.threads = threads;
        if (o_paths->count())
            cfg.sgm.paths = paths;
        if (o_path_set->count())
            apply_config_entry(cfg, "path_set", path_set);
        if (o_q->count())
            cfg.filter.noise.q = q;
        if (o_r->count())
            cfg.filter.noise.r = r;
        if (o_d_max->count())
            cfg.sgm.d_max = d_max;
        if (o_p1->count())
            cfg.sgm.p1 = p1;
        if (o_p2->count())
            cfg.sgm.p2 = p2;
        cfg.validate();
        return cfg;
    }
};

std::string frame_name(int index, const char* ext = ".png") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%010d%s", index, ext);
    return buf;
}

void draw_box(GrayImage& img, const DetectionBox& b, std::uint8_t v) {
    const int x0 = std::max(b.x0, 0), y0 = std::max(b.y0, 0);
    const int x1 = std::min(b.x1, img.width()), y1 = std::min(b.y1, img.height());
    for (int x = x0; x < x1; ++x) {
        for (int t = 0; t < 2; ++t) {
            if (y0 + t < y1)
                img(x, y0 + t) = v;
            if (y1 - 1 - t >= y0)
                img(x, y1 - 1 - t) = v;
        }
    }
    for (int y = y0; y < y1; ++y) {
        for (int t = 0; t < 2; ++t) {
            if (x0 + t < x1)
                img(x0 + t, y) = v;
            if (x1 - 1 - t >= x0)
                img(x1 - 1 - t, y) = v;
        }
    }
}

DisparityMap match_pair(const GrayImage& left, const GrayImage& right, const RunConfig& cfg) {
    const SearchRangeMap ranges =
        SearchRangeMap::full(left.width(), left.height(), cfg.sgm.d_max);
    return median_refine(sgm_match(left, right, ranges, cfg.sgm, cfg.threads), cfg.threads);
}

int cmd_match(const ConfigFlags& cf, const std::string& left_path,
              const std::string& right_path, const std::string& out_path) {
    const RunConfig cfg = cf.resolve();
    const GrayImage left = io::read_gray(left_path);
    const GrayImage right = io::read_gray(right_path);
    write_disparity_png(out_path, match_pair(left, right, cfg));
    return 0;
}

int cmd_run(const ConfigFlags& cf, const std::string& seq_dir, const std::string& out_dir,
            const std::string& poses, const std::string& gt_dir, const std::string& calib_path,
            bool overlay, int max_frames) {
    const RunConfig cfg = cf.resolve();
    LoadOptions lo;
    lo.poses_path = poses;
    lo.gt_dir = gt_dir;
    lo.max_frames = max_frames;
    const auto frames = load_kitti_sequence(seq_dir, lo);
    const StereoCalib calib = load_calib(
        calib_path.empty() ? (fs::path(seq_dir) / "calib.txt").string() : calib_path);
    if (calib.d_max != cfg.sgm.d_max)
        throw std::runtime_error("run: calib d_max " + std::to_string(calib.d_max) +
                                 " differs from configured " + std::to_string(cfg.sgm.d_max) +
                                 " (set --d-max to match)");

    fs::create_directories(fs::path(out_dir) / "disp");
    if (overlay)
        fs::create_directories(fs::path(out_dir) / "overlay");

    DisparityState state;
    std::vector<std::vector<DetectionBox>> boxes_per_frame;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const SequenceFrame& f = frames[k];
        RigidMotion motion;
        if (k > 0 && frames[k - 1].pose && f.pose)
            motion = relative_motion(*frames[k - 1].pose, *f.pose);
        StepResult res =
            step(state, f.left, f.right, motion, calib, cfg.sgm, cfg.filter, cfg.threads);
        state = std::move(res.state);

        write_disparity_png((fs::path(out_dir) / "disp" / frame_name(f.index)).string(),
                            res.export_map);
        std::vector<DetectionBox> boxes =
            detect_moving_objects(res.diff, cfg.detect, cfg.threads);
        if (overlay) {
            GrayImage canvas = f.left;
            for (const DetectionBox& b : boxes)
                draw_box(canvas, b, 255);
            io::write_gray_png((fs::path(out_dir) / "overlay" / frame_name(f.index)).string(),
                               canvas);
        }
        boxes_per_frame.push_back(std::move(boxes));
        std::cerr << "frame " << f.index << ": " << boxes_per_frame.back().size()
                  << " detections\n";
    }
    write_boxes((fs::path(out_dir) / "boxes.txt").string(), boxes_per_frame);
    return 0;
}

int cmd_calib_noise(const ConfigFlags& cf, const std::string& seq_dir,
                    const std::string& poses, const std::string& out_path,
                    const std::string& error_map_path, int max_frames) {
    const RunConfig cfg = cf.resolve();
    LoadOptions lo;
    lo.poses_path = poses;
    lo.max_frames = max_frames;
    const auto frames = load_kitti_sequence(seq_dir, lo);
    const StereoCalib calib = load_calib((fs::path(seq_dir) / "calib.txt").string());

    const NoiseEstimate process = estimate_process_noise(frames, calib);
    const NoiseEstimate meas = estimate_measurement_noise(frames, cfg.sgm, cfg.threads);
    write_calib_report(out_path, process, meas);
    std::cerr << "q raw " << process.variance << " px^2, r raw " << meas.variance
              << " px^2 -> " << out_path << "\n";

    if (!error_map_path.empty()) {
        const Image<double> acc = accumulate_error_map(frames, calib);
        double peak = 0.0;
        for (int y = 0; y < acc.height(); ++y)
            for (int x = 0; x < acc.width(); ++x)
                peak = std::max(peak, acc(x, y));
        GrayImage img(acc.width(), acc.height());
        for (int y = 0; y < acc.height(); ++y)
            for (int x = 0; x < acc.width(); ++x)
                img(x, y) = static_cast<std::uint8_t>(
                    peak > 0.0 ? std::lround(255.0 * acc(x, y) / peak) : 0);
        io::write_gray_png(error_map_path, img);
    }
    return 0;
}

int cmd_detect(const ConfigFlags& cf, const std::string& left0, const std::string& right0,
               const std::string& left1, const std::string& right1,
               const std::string& calib_path, const std::string& poses,
               const std::string& out_path) {
    const RunConfig cfg = cf.resolve();
    const StereoCalib calib = load_calib(calib_path);
    if (calib.d_max != cfg.sgm.d_max)
        throw std::runtime_error("detect: calib d_max differs from configured d_max");

    RigidMotion motion;
    if (!poses.empty()) {
        const auto pose_list = load_poses(poses);
        if (pose_list.size() < 2)
            throw std::runtime_error("detect: pose file needs 2 rows");
        motion = relative_motion(pose_list[0], pose_list[1]);
    }

    DisparityState state;
    StepResult first = step(state, io::read_gray(left0), io::read_gray(right0), RigidMotion{},
                            calib, cfg.sgm, cfg.filter, cfg.threads);
    StepResult second = step(first.state, io::read_gray(left1), io::read_gray(right1), motion,
                             calib, cfg.sgm, cfg.filter, cfg.threads);
    const auto boxes = detect_moving_objects(second.diff, cfg.detect, cfg.threads);

    std::ostringstream lines;
    for (const DetectionBox& b : boxes)
        lines << "1 " << b.x0 << ' ' << b.y0 << ' ' << b.x1 << ' ' << b.y1 << ' ' << b.score
              << "\n";
    if (out_path.empty()) {
        std::cout << lines.str();
    } else {
        std::ofstream out(out_path);
        if (!out)
            throw std::runtime_error("detect: cannot open " + out_path);
        out << "# frame x0 y0 x1 y1 score\n" << lines.str();
    }
    return 0;
}

int cmd_synth(const std::string& out_dir, int frames, int width, int height,
              unsigned long long seed, double noise_sigma, double plane_disparity, int d_max,
              double focal, const std::vector<std::string>& object_specs,
              const std::string& camera_step) {
    if (frames < 1)
        throw std::runtime_error("synth: --frames must be positive");
    SynthConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.frames = frames;
    cfg.seed = static_cast<std::uint32_t>(seed);
    cfg.noise_sigma = noise_sigma;
    cfg.plane_depth_m = 10.0;
    cfg.calib.focal_px = focal;
    cfg.calib.cx = (width - 1) / 2.0;
    cfg.calib.cy = (height - 1) / 2.0;
    cfg.calib.baseline_m = plane_disparity * cfg.plane_depth_m / focal;
    cfg.calib.width = width;
    cfg.calib.height = height;
    cfg.calib.d_max = d_max;

    for (const std::string& spec : object_specs) {
        SynthObject o;
        char comma = 0;
        std::istringstream ss(spec);
        ss >> o.x >> comma >> o.y >> comma >> o.w >> comma >> o.h >> comma >>
            o.disparity_offset >> comma >> o.vx >> comma >> o.vy;
        if (!ss)
            throw std::runtime_error("synth: bad --object spec '" + spec +
                                     "', want x,y,w,h,doff,vx,vy");
        cfg.objects.push_back(o);
    }
    if (!camera_step.empty()) {
        RigidMotion m;
        char comma = 0;
        std::istringstream ss(camera_step);
        ss >> m.translation.x() >> comma >> m.translation.y() >> comma >> m.translation.z();
        if (!ss)
            throw std::runtime_error("synth: bad --camera-step, want tx,ty,tz");
        cfg.motions.assign(static_cast<std::size_t>(frames - 1), m);
    }

    write_sequence(out_dir, synth_sequence(cfg), cfg.calib);
    std::cerr << "wrote " << frames << " frames to " << out_dir << "\n";
    return 0;
}

int cmd_eval(const ConfigFlags& cf, const std::string& seq_dir, const std::string& poses,
             const std::string& gt_dir, const std::string& modes_csv,
             const std::string& csv_path, int max_frames) {
    const RunConfig cfg = cf.resolve();
    LoadOptions lo;
    lo.poses_path = poses;
    lo.gt_dir = gt_dir;
    lo.max_frames = max_frames;
    const auto frames = load_kitti_sequence(seq_dir, lo);
    const StereoCalib calib = load_calib((fs::path(seq_dir) / "calib.txt").string());

    std::vector<BenchConfig> configs;
    std::istringstream ss(modes_csv);
    std::string mode;
    while (std::getline(ss, mode, ',')) {
        BenchConfig bc;
        bc.sgm = cfg.sgm;
        bc.filter = cfg.filter;
        bc.threads = cfg.threads;
        bc.name = mode;
        if (mode == "full")
            bc.mode = BenchMode::full_space;
        else if (mode == "reduced")
            bc.mode = BenchMode::reduced;
        else if (mode == "gt")
            bc.mode = BenchMode::gt_self;
        else
            throw std::runtime_error("eval: unknown mode '" + mode +
                                     "' (want full, reduced, or gt)");
        configs.push_back(std::move(bc));
    }
    if (configs.empty())
        throw std::runtime_error("eval: no modes requested");

    const auto reports = run_benchmark(frames, calib, configs);
    write_report_table(std::cout, reports);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out)
            throw std::runtime_error("eval: cannot open " + csv_path);
        write_report_csv(out, reports);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal semi-global stereo matching"};
    app.require_subcommand(1);

    ConfigFlags cf;

    auto* match = app.add_subcommand("match", "full-range SGM on one stereo pair");
    std::string m_left, m_right, m_out;
    match->add_option("--left", m_left, "left image")->required()->check(CLI::ExistingFile);
    match->add_option("--right", m_right, "right image")->required()->check(CLI::ExistingFile);
    match->add_option("--out", m_out, "output disparity PNG")->required();
    ConfigFlags m_cf = cf;
    m_cf.attach(match);

    auto* run = app.add_subcommand("run", "temporal pipeline over a sequence");
    std::string r_seq, r_out, r_poses, r_gt, r_calib;
    bool r_overlay = false;
    int r_max_frames = -1;
    run->add_option("sequence", r_seq, "sequence directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    run->add_option("--out", r_out, "output directory")->required();
    run->add_option("--poses", r_poses, "pose file override")->check(CLI::ExistingFile);
    run->add_option("--gt", r_gt, "GT disparity directory override")
        ->check(CLI::ExistingDirectory);
    run->add_option("--calib", r_calib, "calib file override")->check(CLI::ExistingFile);
    run->add_option("--max-frames", r_max_frames, "process only the first N frames");
    run->add_flag("--overlay", r_overlay, "write detection overlays");
    ConfigFlags r_cf = cf;
    r_cf.attach(run);

    auto* calib_noise = app.add_subcommand("calib-noise", "estimate q and r from GT");
    std::string c_seq, c_poses, c_out = "noise_report.txt", c_map;
    int c_max_frames = -1;
    calib_noise->add_option("sequence", c_seq, "sequence directory with disp_gt and poses")
        ->required()
        ->check(CLI::ExistingDirectory);
    calib_noise->add_option("--poses", c_poses, "pose file override")->check(CLI::ExistingFile);
    calib_noise->add_option("--out", c_out, "report path");
    calib_noise->add_option("--error-map", c_map, "write accumulated |error| PNG here");
    calib_noise->add_option("--max-frames", c_max_frames, "use only the first N frames");
    ConfigFlags c_cf = cf;
    c_cf.attach(calib_noise);

    auto* detect = app.add_subcommand("detect", "moving objects from two stereo frames");
    std::string d_l0, d_r0, d_l1, d_r1, d_calib, d_poses, d_out;
    detect->add_option("--left-prev", d_l0, "previous left image")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--right-prev", d_r0, "previous right image")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--left", d_l1, "current left image")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--right", d_r1, "current right image")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--calib", d_calib, "calib file")->required()->check(CLI::ExistingFile);
    detect->add_option("--poses", d_poses, "2-row pose file (identity motion when absent)")
        ->check(CLI::ExistingFile);
    detect->add_option("--out", d_out, "box list path (stdout when absent)");
    ConfigFlags d_cf = cf;
    d_cf.attach(detect);

    auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
    std::string s_out, s_camera_step;
    std::vector<std::string> s_objects;
    int s_frames = 5, s_width = 320, s_height = 240, s_d_max = 128;
    unsigned long long s_seed = 1;
    double s_noise = 0.0, s_plane_disp = 20.0, s_focal = 256.0;
    synth->add_option("--out", s_out, "output directory")->required();
    synth->add_option("--frames", s_frames, "frame count");
    synth->add_option("--width", s_width, "image width");
    synth->add_option("--height", s_height, "image height");
    synth->add_option("--seed", s_seed, "texture seed");
    synth->add_option("--noise-sigma", s_noise, "additive intensity noise stddev");
    synth->add_option("--plane-disparity", s_plane_disp, "background disparity at frame 0");
    synth->add_option("--d-max", s_d_max, "disparity levels recorded in calib");
    synth->add_option("--focal", s_focal, "focal length, px");
    synth->add_option("--object", s_objects, "moving box: x,y,w,h,doff,vx,vy (repeatable)");
    synth->add_option("--camera-step", s_camera_step, "per-frame camera translation tx,ty,tz");

    auto* eval = app.add_subcommand("eval", "benchmark configurations over a sequence");
    std::string e_seq, e_poses, e_gt, e_modes = "full,reduced", e_csv;
    int e_max_frames = -1;
    eval->add_option("sequence", e_seq, "sequence directory with disp_gt")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval->add_option("--poses", e_poses, "pose file override")->check(CLI::ExistingFile);
    eval->add_option("--gt", e_gt, "GT disparity directory override")
        ->check(CLI::ExistingDirectory);
    eval->add_option("--modes", e_modes, "comma list of full,reduced,gt");
    eval->add_option("--csv", e_csv, "also write CSV here");
    eval->add_option("--max-frames", e_max_frames, "use only the first N frames");
    ConfigFlags e_cf = cf;
    e_cf.attach(eval);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the error
        return code == 0 ? 0 : 2;
    }

    try {
        if (match->parsed())
            return cmd_match(m_cf, m_left, m_right, m_out);
        if (run->parsed())
            return cmd_run(r_cf, r_seq, r_out, r_poses, r_gt, r_calib, r_overlay, r_max_frames);
        if (calib_noise->parsed())
            return cmd_calib_noise(c_cf, c_seq, c_poses, c_out, c_map, c_max_frames);
        if (detect->parsed())
            return cmd_detect(d_cf, d_l0, d_r0, d_l1, d_r1, d_calib, d_poses, d_out);
        if (synth->parsed())
            return cmd_synth(s_out, s_frames, s_width, s_height, s_seed, s_noise, s_plane_disp,
                             s_d_max, s_focal, s_objects, s_camera_step);
        if (eval->parsed())
            return cmd_eval(e_cf, e_seq, e_poses, e_gt, e_modes, e_csv, e_max_frames);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

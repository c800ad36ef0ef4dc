#include "tsgm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tsgm/image_io.hpp"

namespace fs = std::filesystem;

namespace tsgm {

namespace {

std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%010d.png", index);
    return buf;
}

bool numeric_stem(const std::string& stem, int& out) {
    if (stem.empty() || stem.size() > 18)
        return false;
    for (char c : stem)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    const long long v = std::stoll(stem);
    if (v > std::numeric_limits<int>::max())
        return false;
    out = static_cast<int>(v);
    return true;
}

// left/right camera folder pairs in preference order
constexpr const char* kLeftDirs[] = {"image_00", "image_02"};
constexpr const char* kRightDirs[] = {"image_01", "image_03"};

}  // namespace

std::vector<SequenceFrame> load_kitti_sequence(const std::string& dir, const LoadOptions& opts) {
    fs::path root(dir);
    if (!fs::is_directory(root))
        throw std::runtime_error("load_kitti_sequence: not a directory: " + dir);

    fs::path left_dir, right_dir;
    for (int i = 0; i < 2; ++i) {
        fs::path cand = root / kLeftDirs[i] / "data";
        if (fs::is_directory(cand)) {
            left_dir = cand;
            right_dir = root / kRightDirs[i] / "data";
            break;
        }
    }
    if (left_dir.empty())
        throw std::runtime_error("load_kitti_sequence: no image_00/data or image_02/data under " +
                                 dir);
    if (!fs::is_directory(right_dir))
        throw std::runtime_error("load_kitti_sequence: left folder " + left_dir.string() +
                                 " has no right counterpart " + right_dir.string());

    // filename -> frame index, sorted by name so loading is deterministic
    std::map<std::string, int> names;
    for (const auto& entry : fs::directory_iterator(left_dir)) {
        if (!entry.is_regular_file())
            continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".png")
            continue;
        int index = 0;
        if (!numeric_stem(p.stem().string(), index))
            throw std::runtime_error("load_kitti_sequence: non-numeric image name " + p.string());
        names.emplace(p.filename().string(), index);
    }
    if (names.empty())
        throw std::runtime_error("load_kitti_sequence: no PNG images in " + left_dir.string());

    std::vector<SequenceFrame> frames;
    for (const auto& [name, index] : names) {
        if (opts.max_frames >= 0 && static_cast<int>(frames.size()) >= opts.max_frames)
            break;
        SequenceFrame f;
        f.index = index;
        f.left = io::read_gray((left_dir / name).string());
        const fs::path right_path = right_dir / name;
        if (!fs::exists(right_path))
            throw std::runtime_error("load_kitti_sequence: missing right image for frame " +
                                     std::to_string(index));
        f.right = io::read_gray(right_path.string());
        if (!f.left.same_size(f.right))
            throw std::runtime_error("load_kitti_sequence: left/right size mismatch at frame " +
                                     std::to_string(index));
        if (opts.load_gt) {
            const fs::path gt_root = opts.gt_dir.empty() ? root / "disp_gt" : fs::path(opts.gt_dir);
            const fs::path gt_path = gt_root / name;
            if (fs::exists(gt_path))
                f.gt_disp = read_disparity_png(gt_path.string());
        }
        frames.push_back(std::move(f));
    }

    fs::path poses_path =
        opts.poses_path.empty() ? root / "poses.txt" : fs::path(opts.poses_path);
    if (!opts.poses_path.empty() || fs::exists(poses_path)) {
        const std::vector<Pose> poses = load_poses(poses_path.string());
        if (poses.size() < frames.size())
            throw std::runtime_error("load_kitti_sequence: " + poses_path.string() + " has " +
                                     std::to_string(poses.size()) + " poses for " +
                                     std::to_string(frames.size()) + " frames");
        for (std::size_t i = 0; i < frames.size(); ++i)
            frames[i].pose = poses[i];
    }

    const fs::path boxes_path = root / "boxes_gt.txt";
    if (opts.load_gt && fs::exists(boxes_path)) {
        int max_index = 0;
        for (const auto& [name, index] : names)
            max_index = std::max(max_index, index);
        auto per_frame = read_boxes(boxes_path.string(), max_index + 1);
        for (SequenceFrame& f : frames)
            f.gt_boxes = std::move(per_frame[static_cast<std::size_t>(f.index)]);
    }
    return frames;
}

StereoCalib load_calib(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_calib: cannot open " + path);
    StereoCalib c;
    bool have[7] = {};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::string key, value;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw std::invalid_argument("load_calib: " + path + ":" + std::to_string(line_no) +
                                        ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        key = trim(line.substr(0, eq));
        value = trim(line.substr(eq + 1));
        try {
            if (key == "focal_px") {
                c.focal_px = std::stod(value);
                have[0] = true;
            } else if (key == "cx") {
                c.cx = std::stod(value);
                have[1] = true;
            } else if (key == "cy") {
                c.cy = std::stod(value);
                have[2] = true;
            } else if (key == "baseline_m") {
                c.baseline_m = std::stod(value);
                have[3] = true;
            } else if (key == "width") {
                c.width = std::stoi(value);
                have[4] = true;
            } else if (key == "height") {
                c.height = std::stoi(value);
                have[5] = true;
            } else if (key == "d_max") {
                c.d_max = std::stoi(value);
                have[6] = true;
            } else {
                throw std::invalid_argument("load_calib: unknown key '" + key + "' in " + path);
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("load_calib: bad value for '" + key + "' in " + path);
        }
    }
    static const char* kNames[] = {"focal_px", "cx", "cy", "baseline_m", "width", "height",
                                   "d_max"};
    for (int i = 0; i < 7; ++i)
        if (!have[i])
            throw std::invalid_argument(std::string("load_calib: missing key '") + kNames[i] +
                                        "' in " + path);
    c.validate();
    return c;
}

void write_calib(const std::string& path, const StereoCalib& calib) {
    calib.validate();
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_calib: cannot open " + path);
    out.precision(17);
    out << "# rectified stereo rig\n";
    out << "focal_px=" << calib.focal_px << "\n";
    out << "cx=" << calib.cx << "\n";
    out << "cy=" << calib.cy << "\n";
    out << "baseline_m=" << calib.baseline_m << "\n";
    out << "width=" << calib.width << "\n";
    out << "height=" << calib.height << "\n";
    out << "d_max=" << calib.d_max << "\n";
    if (!out)
        throw std::runtime_error("write_calib: write failed for " + path);
}

Image<double> read_disparity_png(const std::string& path) {
    const Image<std::uint16_t> raw = io::read_gray16_png(path);
    Image<double> disp(raw.width(), raw.height(), 0.0);
    for (int y = 0; y < raw.height(); ++y)
        for (int x = 0; x < raw.width(); ++x)
            disp(x, y) = raw(x, y) / 256.0;
    return disp;
}

void write_disparity_png(const std::string& path, const Image<double>& disp) {
    Image<std::uint16_t> raw(disp.width(), disp.height(), 0);
    for (int y = 0; y < disp.height(); ++y) {
        for (int x = 0; x < disp.width(); ++x) {
            const double d = disp(x, y);
            if (d == 0.0)
                continue;  // invalid
            const long v = std::lround(d * 256.0);
            if (v <= 0 || v > 65535)
                throw std::invalid_argument("write_disparity_png: disparity " +
                                            std::to_string(d) + " not encodable at (" +
                                            std::to_string(x) + ", " + std::to_string(y) + ")");
            raw(x, y) = static_cast<std::uint16_t>(v);
        }
    }
    io::write_gray16_png(path, raw);
}

void write_disparity_png(const std::string& path, const DisparityMap& dm) {
    Image<double> disp(dm.width(), dm.height(), 0.0);
    for (int y = 0; y < dm.height(); ++y)
        for (int x = 0; x < dm.width(); ++x)
            if (dm.is_valid(x, y))
                disp(x, y) = static_cast<double>(dm.d(x, y));
    write_disparity_png(path, disp);
}

void write_boxes(const std::string& path,
                 const std::vector<std::vector<DetectionBox>>& per_frame) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_boxes: cannot open " + path);
    out << "# frame x0 y0 x1 y1 score\n";
    out.precision(17);
    for (std::size_t f = 0; f < per_frame.size(); ++f)
        for (const DetectionBox& b : per_frame[f])
            out << f << ' ' << b.x0 << ' ' << b.y0 << ' ' << b.x1 << ' ' << b.y1 << ' '
                << b.score << "\n";
    if (!out)
        throw std::runtime_error("write_boxes: write failed for " + path);
}

std::vector<std::vector<DetectionBox>> read_boxes(const std::string& path, int frame_count) {
    if (frame_count < 0)
        throw std::invalid_argument("read_boxes: negative frame count");
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_boxes: cannot open " + path);
    std::vector<std::vector<DetectionBox>> per_frame(frame_count);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        int frame = 0;
        DetectionBox b;
        if (!(ss >> frame))
            continue;  // blank line
        if (!(ss >> b.x0 >> b.y0 >> b.x1 >> b.y1))
            throw std::runtime_error("read_boxes: " + path + ":" + std::to_string(line_no) +
                                     ": expected frame x0 y0 x1 y1 [score]");
        ss >> b.score;  // optional
        if (frame < 0 || frame >= frame_count)
            throw std::runtime_error("read_boxes: " + path + ":" + std::to_string(line_no) +
                                     ": frame " + std::to_string(frame) + " out of range");
        per_frame[frame].push_back(b);
    }
    return per_frame;
}

namespace {

// Deterministic lattice hash in [0, 1).
double lattice_noise(std::uint64_t seed, std::int64_t xi, std::int64_t yi) {
    std::uint64_t h = seed + 0x9e3779b97f4a7c15ull;
    h ^= static_cast<std::uint64_t>(xi) * 0xff51afd7ed558ccdull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h ^= static_cast<std::uint64_t>(yi) * 0x94d049bb133111ebull;
    h = (h ^ (h >> 27)) * 0x2545f4914f6cdd1dull;
    h ^= h >> 31;
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Bilinear value noise; at integer coordinates this is pure per-texel hash
// noise, which gives the census transform maximal texture.
double value_noise(std::uint64_t seed, double u, double v) {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const auto xi = static_cast<std::int64_t>(fu);
    const auto yi = static_cast<std::int64_t>(fv);
    const double tx = u - fu;
    const double ty = v - fv;
    const double n00 = lattice_noise(seed, xi, yi);
    const double n10 = lattice_noise(seed, xi + 1, yi);
    const double n01 = lattice_noise(seed, xi, yi + 1);
    const double n11 = lattice_noise(seed, xi + 1, yi + 1);
    const double top = n00 + (n10 - n00) * tx;
    const double bot = n01 + (n11 - n01) * tx;
    return top + (bot - top) * ty;
}

double texture_value(std::uint64_t seed, double u, double v) {
    return 20.0 + 216.0 * value_noise(seed, u, v);
}

struct ObjectFrame {
    int x0, y0, x1, y1;  // clipped left-image footprint
    int ux0, uy0;        // unclipped top-left, texture anchor
    double d;
    std::uint64_t seed;
};

struct IntBox {
    int x0, y0, x1, y1;
};

IntBox footprint(const SynthObject& obj, int frame) {
    const int px = static_cast<int>(std::lround(obj.x + frame * obj.vx));
    const int py = static_cast<int>(std::lround(obj.y + frame * obj.vy));
    return {px, py, px + obj.w, py + obj.h};
}

std::vector<Eigen::Vector3d> cumulative_translations(const SynthConfig& cfg) {
    std::vector<Eigen::Vector3d> t(cfg.frames, Eigen::Vector3d::Zero());
    for (int k = 1; k < cfg.frames; ++k) {
        Eigen::Vector3d step = Eigen::Vector3d::Zero();
        if (!cfg.motions.empty())
            step = cfg.motions[static_cast<std::size_t>(k - 1)].translation;
        t[k] = t[k - 1] + step;
    }
    return t;
}

}  // namespace

void SynthConfig::validate() const {
    if (width < 8 || height < 8)
        throw std::invalid_argument("SynthConfig: image too small");
    if (frames < 1)
        throw std::invalid_argument("SynthConfig: frames must be positive");
    if (!(plane_depth_m > 0.0))
        throw std::invalid_argument("SynthConfig: plane_depth_m must be positive");
    calib.validate();
    if (calib.width != width || calib.height != height)
        throw std::invalid_argument("SynthConfig: calib size disagrees with image size");
    if (!motions.empty() && static_cast<int>(motions.size()) != frames - 1)
        throw std::invalid_argument("SynthConfig: motions must be empty or frames-1 long");
    for (const RigidMotion& m : motions) {
        m.validate();
        if (!m.rotation.isIdentity(1e-12))
            throw std::invalid_argument("SynthConfig: only translational camera motion supported");
    }
    for (const SynthObject& o : objects)
        if (o.w < 1 || o.h < 1)
            throw std::invalid_argument("SynthConfig: object with non-positive size");
    if (!(noise_sigma >= 0.0))
        throw std::invalid_argument("SynthConfig: negative noise_sigma");

    const auto trans = cumulative_translations(*this);
    for (int k = 0; k < frames; ++k) {
        const double z = plane_depth_m + trans[k].z();
        if (!(z > 0.0))
            throw std::invalid_argument("SynthConfig: camera crosses the plane at frame " +
                                        std::to_string(k));
        const double d_plane = calib.focal_px * calib.baseline_m / z;
        auto check = [&](double d) {
            if (!(d > 0.0) || !(d < calib.d_max))
                throw std::invalid_argument("SynthConfig: disparity " + std::to_string(d) +
                                            " outside (0, d_max) at frame " + std::to_string(k));
        };
        check(d_plane);
        for (const SynthObject& o : objects)
            check(d_plane + o.disparity_offset);
    }
}

std::vector<SequenceFrame> synth_sequence(const SynthConfig& cfg) {
    cfg.validate();
    const StereoCalib& c = cfg.calib;
    const auto trans = cumulative_translations(cfg);
    const std::uint64_t plane_seed = static_cast<std::uint64_t>(cfg.seed) << 1;

    std::vector<SequenceFrame> frames;
    frames.reserve(cfg.frames);
    for (int k = 0; k < cfg.frames; ++k) {
        const Eigen::Vector3d& t = trans[k];
        const double z = cfg.plane_depth_m + t.z();
        const double d_plane = c.focal_px * c.baseline_m / z;

        // per-frame object layers, nearest (largest disparity) first
        std::vector<ObjectFrame> layers;
        for (std::size_t j = 0; j < cfg.objects.size(); ++j) {
            const SynthObject& o = cfg.objects[j];
            const IntBox fp = footprint(o, k);
            ObjectFrame l;
            l.ux0 = fp.x0;
            l.uy0 = fp.y0;
            l.x0 = std::max(fp.x0, 0);
            l.y0 = std::max(fp.y0, 0);
            l.x1 = std::min(fp.x1, cfg.width);
            l.y1 = std::min(fp.y1, cfg.height);
            l.d = d_plane + o.disparity_offset;
            l.seed = (static_cast<std::uint64_t>(cfg.seed) << 1) + 1 + 2 * j;
            layers.push_back(l);
        }
        std::stable_sort(layers.begin(), layers.end(),
                         [](const ObjectFrame& a, const ObjectFrame& b) { return a.d > b.d; });

        // plane texture coordinates: world point hit by the pixel ray, scaled
        // so frame 0 samples the lattice exactly at integer pixels
        auto plane_uv = [&](double px, double py, double cam_x_off, double& u, double& v) {
            const double wx = (px - c.cx) * z / c.focal_px + cam_x_off - t.x();
            const double wy = (py - c.cy) * z / c.focal_px - t.y();
            u = wx * c.focal_px / cfg.plane_depth_m + c.cx;
            v = wy * c.focal_px / cfg.plane_depth_m + c.cy;
        };

        SequenceFrame f;
        f.index = k;
        f.left = GrayImage(cfg.width, cfg.height);
        f.right = GrayImage(cfg.width, cfg.height);
        Image<double> gt(cfg.width, cfg.height, 0.0);

        for (int y = 0; y < cfg.height; ++y) {
            for (int x = 0; x < cfg.width; ++x) {
                // left view: nearest layer containing the pixel, else plane
                double val = 0.0;
                double d = d_plane;
                bool hit = false;
                for (const ObjectFrame& l : layers) {
                    if (x >= l.x0 && x < l.x1 && y >= l.y0 && y < l.y1) {
                        val = texture_value(l.seed, x - l.ux0, y - l.uy0);
                        d = l.d;
                        hit = true;
                        break;
                    }
                }
                if (!hit) {
                    double u, v;
                    plane_uv(x, y, 0.0, u, v);
                    val = texture_value(plane_seed, u, v);
                }
                f.left(x, y) = static_cast<std::uint8_t>(
                    std::clamp(std::lround(val), 0l, 255l));
                gt(x, y) = d;

                // right view: a layer occludes when its left-image footprint
                // contains the correspondent x + d
                double rval = 0.0;
                bool rhit = false;
                for (const ObjectFrame& l : layers) {
                    const double sx = x + l.d;
                    if (sx >= l.x0 && sx < l.x1 && y >= l.y0 && y < l.y1) {
                        rval = texture_value(l.seed, sx - l.ux0, y - l.uy0);
                        rhit = true;
                        break;
                    }
                }
                if (!rhit) {
                    double u, v;
                    plane_uv(x, y, c.baseline_m, u, v);
                    rval = texture_value(plane_seed, u, v);
                }
                f.right(x, y) = static_cast<std::uint8_t>(
                    std::clamp(std::lround(rval), 0l, 255l));
            }
        }

        if (cfg.noise_sigma > 0.0) {
            for (int cam = 0; cam < 2; ++cam) {
                GrayImage& img = cam == 0 ? f.left : f.right;
                std::mt19937 rng(cfg.seed * 2654435761u + 97u * k + cam);
                std::normal_distribution<double> gauss(0.0, cfg.noise_sigma);
                for (int y = 0; y < cfg.height; ++y)
                    for (int x = 0; x < cfg.width; ++x)
                        img(x, y) = static_cast<std::uint8_t>(
                            std::clamp(std::lround(img(x, y) + gauss(rng)), 0l, 255l));
            }
        }

        f.gt_disp = std::move(gt);
        Pose pose;
        pose.setZero();
        pose.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity();
        pose.col(3) = -t;
        f.pose = pose;

        std::vector<DetectionBox> boxes;
        if (k > 0) {
            for (const SynthObject& o : cfg.objects) {
                const IntBox prev = footprint(o, k - 1);
                const IntBox cur = footprint(o, k);
                if (prev.x0 == cur.x0 && prev.y0 == cur.y0)
                    continue;  // did not move
                DetectionBox b;
                b.x0 = std::max(std::min(prev.x0, cur.x0), 0);
                b.y0 = std::max(std::min(prev.y0, cur.y0), 0);
                b.x1 = std::min(std::max(prev.x1, cur.x1), cfg.width);
                b.y1 = std::min(std::max(prev.y1, cur.y1), cfg.height);
                if (b.x0 < b.x1 && b.y0 < b.y1)
                    boxes.push_back(b);
            }
        }
        f.gt_boxes = std::move(boxes);
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_sequence(const std::string& dir, const std::vector<SequenceFrame>& frames,
                    const StereoCalib& calib) {
    if (frames.empty())
        throw std::invalid_argument("write_sequence: no frames");
    fs::path root(dir);
    fs::create_directories(root / "image_00" / "data");
    fs::create_directories(root / "image_01" / "data");

    bool all_poses = true, all_gt = true, all_boxes = true;
    for (const SequenceFrame& f : frames) {
        all_poses = all_poses && f.pose.has_value();
        all_gt = all_gt && f.gt_disp.has_value();
        all_boxes = all_boxes && f.gt_boxes.has_value();
    }
    if (all_gt)
        fs::create_directories(root / "disp_gt");

    for (const SequenceFrame& f : frames) {
        const std::string name = frame_name(f.index);
        io::write_gray_png((root / "image_00" / "data" / name).string(), f.left);
        io::write_gray_png((root / "image_01" / "data" / name).string(), f.right);
        if (all_gt)
            write_disparity_png((root / "disp_gt" / name).string(), *f.gt_disp);
    }

    write_calib((root / "calib.txt").string(), calib);

    if (all_poses) {
        std::ofstream out(root / "poses.txt");
        if (!out)
            throw std::runtime_error("write_sequence: cannot open poses.txt");
        out.precision(17);
        for (const SequenceFrame& f : frames) {
            const Pose& p = *f.pose;
            for (int r = 0; r < 3; ++r)
                for (int col = 0; col < 4; ++col)
                    out << p(r, col) << (r == 2 && col == 3 ? '\n' : ' ');
        }
        if (!out)
            throw std::runtime_error("write_sequence: write failed for poses.txt");
    }

    if (all_boxes) {
        std::vector<std::vector<DetectionBox>> per_frame;
        per_frame.reserve(frames.size());
        for (const SequenceFrame& f : frames)
            per_frame.push_back(*f.gt_boxes);
        write_boxes((root / "boxes_gt.txt").string(), per_frame);
    }
}

}  // namespace tsgm

#include "tsgm/config.hpp"

#include <fstream>
#include <stdexcept>

namespace tsgm {

void RunConfig::validate() const {
    sgm.validate();
    filter.validate(sgm.d_max);
    detect.validate();
    if (threads < 1)
        throw std::invalid_argument("RunConfig: threads must be >= 1");
}

namespace {

int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for '" + key + "': " + value);
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for '" + key + "': " + value);
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on")
        return true;
    if (value == "0" || value == "false" || value == "off")
        return false;
    throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "q")
        cfg.filter.noise.q = to_double(key, value);
    else if (key == "r")
        cfg.filter.noise.r = to_double(key, value);
    else if (key == "p_init")
        cfg.filter.p_init = to_double(key, value);
    else if (key == "disc_thresh")
        cfg.filter.disc_thresh = to_double(key, value);
    else if (key == "min_range_halfwidth")
        cfg.filter.min_range_halfwidth = to_int(key, value);
    else if (key == "range_use_stddev")
        cfg.filter.range_use_stddev = to_bool(key, value);
    else if (key == "range_stddev_gain")
        cfg.filter.range_stddev_gain = to_double(key, value);
    else if (key == "p1")
        cfg.sgm.p1 = to_int(key, value);
    else if (key == "p2")
        cfg.sgm.p2 = to_int(key, value);
    else if (key == "paths")
        cfg.sgm.paths = to_int(key, value);
    else if (key == "path_set") {
        if (value == "nondiag")
            cfg.sgm.path_set = PathSet::nondiagonal;
        else if (value == "diag")
            cfg.sgm.path_set = PathSet::diagonal;
        else
            throw std::invalid_argument("config: path_set must be nondiag or diag, got " +
                                        value);
    } else if (key == "d_max")
        cfg.sgm.d_max = to_int(key, value);
    else if (key == "threads")
        cfg.threads = to_int(key, value);
    else if (key == "score_thresh")
        cfg.detect.score_thresh = to_double(key, value);
    else if (key == "merge_stop_iou")
        cfg.detect.merge_stop_iou = to_double(key, value);
    else if (key == "min_box_area")
        cfg.detect.min_box_area = to_int(key, value);
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: " + path + ":" + std::to_string(line_no) +
                                        ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        try {
            apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& ex) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return base;
}

}  // namespace tsgm

// SPDX-License-Identifier: Apache-2.0

#include "radtrack/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace radtrack {

namespace {

[[noreturn]] void bad_entry(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) bad_entry(key, "trailing characters in '" + value + "'");
        return v;
    } catch (const std::invalid_argument&) {
        bad_entry(key, "not a number: '" + value + "'");
    } catch (const std::out_of_range&) {
        bad_entry(key, "out of range: '" + value + "'");
    }
}

int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const int64_t v = std::stoll(value, &used);
        if (used != value.size()) bad_entry(key, "trailing characters in '" + value + "'");
        return v;
    } catch (const std::invalid_argument&) {
        bad_entry(key, "not an integer: '" + value + "'");
    } catch (const std::out_of_range&) {
        bad_entry(key, "out of range: '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_entry(key, "expected true/false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(key, item)));
    if (out.empty()) bad_entry(key, "empty list");
    return out;
}

} // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    auto d = [&]() { return parse_double(key, value); };
    auto i = [&]() { return static_cast<int>(parse_int(key, value)); };
    auto b = [&]() { return parse_bool(key, value); };

    if (key == "seed") c.seed = static_cast<uint64_t>(parse_int(key, value));
    else if (key == "sequences") c.sequences = i();

    else if (key == "sim.height") c.sim.height = i();
    else if (key == "sim.width") c.sim.width = i();
    else if (key == "sim.min_objects") c.sim.min_objects = i();
    else if (key == "sim.max_objects") c.sim.max_objects = i();
    else if (key == "sim.min_speed") c.sim.min_speed = d();
    else if (key == "sim.max_speed") c.sim.max_speed = d();
    else if (key == "sim.max_turn_rate") c.sim.max_turn_rate = d();
    else if (key == "sim.min_width") c.sim.min_width = d();
    else if (key == "sim.max_width") c.sim.max_width = d();
    else if (key == "sim.min_length") c.sim.min_length = d();
    else if (key == "sim.max_length") c.sim.max_length = d();
    else if (key == "sim.min_reflectivity") c.sim.min_reflectivity = d();
    else if (key == "sim.max_reflectivity") c.sim.max_reflectivity = d();
    else if (key == "sim.sigma_blur") c.sim.sigma_blur = d();
    else if (key == "sim.range_blur_gain") c.sim.range_blur_gain = d();
    else if (key == "sim.speckle") c.sim.speckle = d();
    else if (key == "sim.frames") c.sim.frames = i();

    else if (key == "model.stage_widths") c.model.backbone.stage_widths = parse_int_list(key, value);
    else if (key == "model.stride") c.model.backbone.stride = i();
    else if (key == "model.channels") c.model.backbone.out_channels = i();
    else if (key == "model.k") c.model.relational.k = i();
    else if (key == "model.d_pos") c.model.relational.d_pos = i();
    else if (key == "model.layers") c.model.relational.layers = i();
    else if (key == "model.heads") c.model.relational.heads = i();
    else if (key == "model.mask_value") c.model.relational.mask_value = d();
    else if (key == "model.ff_hidden") c.model.relational.ff_hidden = i();
    else if (key == "model.head_width") c.model.head_width = i();
    else if (key == "model.heatmap_bias_init") c.model.heatmap_bias_init = d();
    else if (key == "model.size_prior_w") c.model.size_prior_w = d();
    else if (key == "model.size_prior_l") c.model.size_prior_l = d();
    else if (key == "model.use_trl") c.model.use_trl = b();

    else if (key == "loss.heatmap") c.loss.heatmap = d();
    else if (key == "loss.pre_heatmap") c.loss.pre_heatmap = d();
    else if (key == "loss.box") c.loss.box = d();
    else if (key == "loss.orientation") c.loss.orientation = d();
    else if (key == "loss.offset") c.loss.offset = d();
    else if (key == "loss.tracking") c.loss.tracking = d();

    else if (key == "train.epochs") c.train.epochs = i();
    else if (key == "train.batch_size") c.train.batch_size = i();
    else if (key == "train.gap") c.train.gap = i();
    else if (key == "train.lr") c.train.lr = d();
    else if (key == "train.weight_decay") c.train.weight_decay = d();
    else if (key == "train.max_steps") c.train.max_steps = i();
    else if (key == "train.tracking") c.train.tracking = b();

    else if (key == "decode.threshold") c.det_threshold = d();
    else if (key == "decode.nms_iou") c.nms_iou = d();
    else if (key == "track.gap") c.track_gap = i();
    else if (key == "track.dist_k") c.track_dist = d();
    else if (key == "track.birth_b") c.track_birth = d();
    else if (key == "track.mot_iou") c.mot_iou = d();

    else bad_entry(key, "unknown key");
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": expected key=value, got '" + line + "'");
        apply_config_entry(config, line.substr(0, eq), line.substr(eq + 1));
    }
    return config;
}

void validate_run_config(const RunConfig& c) {
    validate_scene_config(c.sim);
    validate_model_config(c.model);
    validate_loss_weights(c.loss);
    auto bad = [](const std::string& what) {
        throw std::invalid_argument("run config: " + what);
    };
    if (c.sequences < 0) bad("sequence count must be non-negative");
    if (c.train.epochs < 1) bad("epochs must be positive");
    if (c.train.batch_size < 1) bad("batch size must be positive");
    if (c.train.gap < 1 || c.train.gap >= c.sim.frames) bad("train gap must be in [1, frames)");
    if (c.train.lr <= 0.0) bad("learning rate must be positive");
    if (c.train.weight_decay < 0.0) bad("weight decay must be non-negative");
    if (c.train.max_steps < 0) bad("max_steps must be non-negative");
    if (!(c.det_threshold >= 0.0 && c.det_threshold <= 1.0)) bad("decode threshold must be in [0,1]");
    if (!(c.nms_iou >= 0.0 && c.nms_iou <= 1.0)) bad("nms iou must be in [0,1]");
    if (c.track_gap < 1) bad("track gap must be positive");
    if (c.track_dist < 0.0) bad("track distance gate must be non-negative");
    if (!(c.track_birth >= 0.0 && c.track_birth <= 1.0)) bad("birth threshold must be in [0,1]");
    if (!(c.mot_iou > 0.0 && c.mot_iou <= 1.0)) bad("mot matching iou must be in (0,1]");
    const int deepest = c.model.backbone.stride * 8;
    if (c.sim.height % deepest != 0 || c.sim.width % deepest != 0)
        bad("image extents must be divisible by " + std::to_string(deepest));
    if (c.model.relational.k > (c.sim.height / c.model.backbone.stride) *
                                   (c.sim.width / c.model.backbone.stride))
        bad("relational k exceeds the number of grid cells");
}

} // namespace radtrack

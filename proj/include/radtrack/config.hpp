// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/losses.hpp"
#include "radtrack/model.hpp"
#include "radtrack/scene_sim.hpp"

#include <cstdint>
#include <string>

namespace radtrack {

struct TrainConfig {
    int epochs = 5;
    int batch_size = 8;
    int gap = 3;            // frame gap between paired frames
    double lr = 5e-4;
    double weight_decay = 1e-2;
    int max_steps = 0;      // 0 = run all pairs every epoch
    bool tracking = false;  // also train the tracking-offset head
};

struct RunConfig {
    uint64_t seed = 7;
    int sequences = 30;
    SceneConfig sim;
    ModelConfig model;
    LossWeights loss;
    TrainConfig train;
    double det_threshold = 0.3;
    double nms_iou = 0.1;
    int track_gap = 1;
    double track_dist = 8.0;
    double track_birth = 0.3;
    double mot_iou = 0.5;
};

/// Applies one flat "section.key=value" assignment. Unknown keys and
/// malformed values are rejected.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// Parses a flat key=value file ('#' comments and blank lines allowed) on
/// top of the defaults.
RunConfig load_run_config(const std::string& path);

/// Full validation across every module's constraints. Called by every
/// command before any side effect.
void validate_run_config(const RunConfig& config);

} // namespace radtrack

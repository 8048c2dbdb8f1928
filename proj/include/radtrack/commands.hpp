// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/config.hpp"
#include "radtrack/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace radtrack {

/// Generates `config.sequences` sequences with per-sequence seeds derived
/// from the run seed and writes the dataset directory.
void cmd_simulate(const RunConfig& config, const std::string& out_dir);

struct TrainResult {
    std::string checkpoint_path;  // final checkpoint
    int64_t steps = 0;
    double final_loss = 0.0;
};

/// Bidirectional training over all pairs at the configured gap. Writes one
/// checkpoint per epoch plus model.ckpt, and appends per-step loss records
/// to train_log.txt. Resuming restores parameters, optimizer moments and the
/// global step count.
TrainResult cmd_train(const RunConfig& config, const std::string& data_dir,
                      const std::string& out_dir, const std::string& resume_checkpoint = "");

struct EvalResult {
    std::optional<double> map30;
    std::optional<double> map50;
    std::optional<double> map70;
    std::string report_path;
};

/// Detection evaluation at rotated-IoU 0.3/0.5/0.7 over every frame with a
/// full temporal partner (frame index >= gap). Writes report.txt,
/// report.csv and detections.txt.
EvalResult cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                        const std::string& data_dir, const std::string& out_dir);

struct TrackResult {
    MotMetrics metrics;
    std::string report_path;
};

/// Runs the greedy tracker over every sequence, writes one track file per
/// sequence plus mot_report.txt / mot_report.csv.
TrackResult cmd_track(const RunConfig& config, const std::string& checkpoint_path,
                      const std::string& data_dir, const std::string& out_dir);

/// Renders every frame to a portable pixmap: intensity as grayscale, ground
/// truth in green, detections in red, track boxes in per-id colors.
void cmd_render(const RunConfig& config, const std::string& data_dir,
                const std::string& tracks_dir, const std::string& detections_file,
                const std::string& out_dir);

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/geometry.hpp"
#include "radtrack/rng.hpp"
#include "radtrack/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace radtrack {

/// One simulated mover. Width/length/reflectivity stay constant for the
/// lifetime of a track; only pose evolves.
struct ObjectState {
    int track_id = 0;
    OrientedBox box;
    double vx = 0.0;           // pixels / frame
    double vy = 0.0;
    double turn_rate = 0.0;    // degrees / frame
    double reflectivity = 1.0; // peak intensity in (0, 1]
};

struct SceneConfig {
    int height = 64;
    int width = 64;
    int min_objects = 3;
    int max_objects = 6;
    double min_speed = 0.2;
    double max_speed = 1.2;
    double max_turn_rate = 3.0;     // per frame, symmetric around 0
    double min_width = 5.0;
    double max_width = 9.0;
    double min_length = 8.0;
    double max_length = 14.0;
    double min_reflectivity = 0.45;
    double max_reflectivity = 1.0;
    double sigma_blur = 0.6;        // base gaussian blur
    double range_blur_gain = 0.03;  // extra sigma per pixel of distance from image center
    double speckle = 0.15;          // multiplicative noise level
    int frames = 20;
    uint64_t seed = 0;
};

void validate_scene_config(const SceneConfig& config);

struct Annotation {
    int track_id = 0;
    OrientedBox box;
};

struct RadarFrame {
    Tensor intensity;  // H x W in [0, 1]
    std::vector<Annotation> annotations;
    int frame_index = 0;
    int sequence_id = 0;
};

using Sequence = std::vector<RadarFrame>;

struct Dataset {
    std::vector<Sequence> sequences;
    int height = 0;
    int width = 0;
    uint64_t seed = 0;
};

/// Random initial population for a sequence: count in the configured range,
/// interior spawn positions, constant per-track attributes.
std::vector<ObjectState> spawn_objects(const SceneConfig& config, Rng& rng);

/// Advances every object by one frame (constant velocity plus turn rate) and
/// drops objects whose center left the image.
void propagate_objects(std::vector<ObjectState>& objects, const SceneConfig& config);

/// Draws each object as a filled oriented rectangle at its reflectivity,
/// blurs it with sigma = sigma_blur + range_blur_gain * dist(object center,
/// image center), composites by max, applies multiplicative speckle and
/// clamps to [0, 1].
Tensor render_frame(const std::vector<ObjectState>& objects, const SceneConfig& config, Rng& rng);

/// Frame loop from a given initial population; consumes rng for rendering.
Sequence simulate_from(std::vector<ObjectState> objects, const SceneConfig& config, Rng& rng,
                       int sequence_id);

/// Deterministic per (config, seed): spawn + simulate.
Sequence simulate_sequence(const SceneConfig& config, uint64_t seed, int sequence_id = 0);

/// On-disk layout: <dir>/manifest.txt plus one subdirectory per sequence
/// holding a per-sequence manifest, one raw little-endian float64 grid per
/// frame and one plain-text annotation file per frame with lines
/// "track_id cx cy w l theta". Round trip is bit-exact.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

} // namespace radtrack

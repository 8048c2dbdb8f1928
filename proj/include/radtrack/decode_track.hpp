// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/geometry.hpp"
#include "radtrack/model.hpp"
#include "radtrack/scene_sim.hpp"

#include <vector>

namespace radtrack {

struct Detection {
    OrientedBox box;
    double confidence = 0.0;
    Vec2 tracking_offset;  // pixels, displacement since the partner frame
};

/// Dense head maps over the stride-s grid, as decoded at inference time.
struct HeadMaps {
    Tensor heatmap;   // 1 x h x w in (0,1)
    Tensor size;      // 2 x h x w: (w, l)
    Tensor angle;     // 2 x h x w: (sin, cos)
    Tensor offset;    // 2 x h x w
    Tensor tracking;  // 2 x h x w; undefined outside tracking mode
};

/// Evaluates the model on a frame pair (no gradients, frozen batch-norm
/// statistics) and assembles dense head maps for the current frame.
HeadMaps model_head_maps(DetectorModel& model, const Tensor& cur, const Tensor& prev,
                         bool with_tracking);

/// Peaks are cells that are 3x3-neighborhood maxima with heatmap value at or
/// above the threshold. Centers recover sub-cell precision from the offset
/// head; extents are clamped to stay positive for barely-trained models.
/// Oriented NMS runs last; the result is sorted by descending confidence.
std::vector<Detection> decode_detections(const HeadMaps& maps, double threshold, double nms_iou,
                                         int stride);

struct TrackedBox {
    int id = 0;
    OrientedBox box;
    double confidence = 0.0;
};

/// Live tracklet set carried across frames.
struct TrackState {
    struct Track {
        Vec2 center;
        int id = 0;
    };
    std::vector<Track> live;
    int next_id = 0;
    double dist_threshold = 8.0;   // association gate k, pixels
    double birth_threshold = 0.3;  // birth confidence b
};

struct AssociationResult {
    TrackState state;                 // T^t
    std::vector<TrackedBox> outputs;  // one entry per surviving detection
};

/// Greedy id propagation: detections in descending-confidence order each take
/// the nearest unmatched prior track under the gate, measured between the
/// offset-compensated center and the track center; otherwise they start a
/// fresh track when confident enough, or are discarded. Unmatched prior
/// tracks are dropped. Tracks born in this frame are not matchable within it.
AssociationResult greedy_associate(const TrackState& state,
                                   const std::vector<Detection>& detections);

struct TrackerConfig {
    double det_threshold = 0.3;
    double nms_iou = 0.1;
    int gap = 1;
    double dist_k = 8.0;
    double birth_b = 0.3;
};

/// Online tracking over a sequence: frame t decodes against frame t - gap
/// (frame 0 pairs with itself) and ids propagate greedily.
std::vector<std::vector<TrackedBox>> run_tracker(DetectorModel& model, const Sequence& sequence,
                                                 const TrackerConfig& config);

/// Same decoding loop used standalone: per-frame detections for evaluation,
/// frame t paired with frame max(0, t - gap).
std::vector<std::vector<Detection>> decode_sequence(DetectorModel& model,
                                                    const Sequence& sequence, double threshold,
                                                    double nms_iou, int gap, bool with_tracking);

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/geometry.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace radtrack {

struct DetectionRecord {
    int sequence = 0;
    int frame = 0;
    OrientedBox box;
    double confidence = 0.0;
};

struct GtRecord {
    int sequence = 0;
    int frame = 0;
    int track_id = 0;
    OrientedBox box;
};

/// Average precision at one rotated-IoU threshold: global
/// confidence-descending sweep, greedy best-IoU matching with each ground
/// truth usable once, area under the precision-recall curve with all-point
/// interpolation. Returns nothing when there are no ground truths.
std::optional<double> average_precision(const std::vector<DetectionRecord>& detections,
                                        const std::vector<GtRecord>& ground_truth,
                                        double iou_thresh);

struct TrackRecord {
    int sequence = 0;
    int frame = 0;
    int id = 0;
    OrientedBox box;
    double confidence = 0.0;
};

struct MotMetrics {
    double mota = 0.0;  // 1 - (FN + FP + IDSW) / GT, as a fraction
    double motp = 0.0;  // mean IoU over matched pairs
    int64_t idsw = 0;
    int64_t frag = 0;
    int64_t fn = 0;
    int64_t fp = 0;
    int64_t gt_total = 0;
    int64_t matched_total = 0;
    int mostly_tracked = 0;   // coverage >= 80% of the track's span
    int partially_tracked = 0;  // coverage in [20%, 80%)
};

/// CLEAR-MOT accumulation: per-frame greedy IoU matching above the gate with
/// match-continuity preference (a ground truth keeps its previous id when
/// still above the threshold), identity switches counted against the last
/// matched id, fragmentations on tracked-to-untracked transitions.
MotMetrics mot_evaluate(const std::vector<TrackRecord>& predictions,
                        const std::vector<GtRecord>& ground_truth, double iou_match_thresh);

} // namespace radtrack

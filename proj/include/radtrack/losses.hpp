// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/model.hpp"
#include "radtrack/optim.hpp"
#include "radtrack/scene_sim.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace radtrack {

struct LossWeights {
    double heatmap = 1.0;
    double pre_heatmap = 1.0;
    double box = 0.1;
    double orientation = 1.0;
    double offset = 1.0;
    double tracking = 1.0;
};

void validate_loss_weights(const LossWeights& weights);

/// Ground-truth encodings for one frame at stride s.
struct TargetBundle {
    Tensor heatmap;                       // 1 x h x w, exactly 1 at every center cell
    std::vector<GridCoord> center_cells;  // rounded (clamped) center cells, one per object
    Tensor box_targets;                   // K x 2: (w, l) in pixels
    Tensor angle_targets;                 // K x 2: (sin theta, cos theta)
    Tensor offset_targets;                // K x 2: sub-cell center remainder
    int object_count = 0;
};

/// RBF kernel per object centered on its rounded center cell with
/// sigma = max(1, min(w,l) / (6 s)); overlapping kernels combine by max.
Tensor make_gt_heatmap(const std::vector<Annotation>& annotations, int grid_h, int grid_w, int s);

TargetBundle make_targets(const std::vector<Annotation>& annotations, int image_h, int image_w,
                          int s);

/// Sub-cell offset left by stride-s rounding: (c/s - [c/s]) with [.] rounding
/// half away from zero. Both components lie in [-0.5, 0.5].
std::array<double, 2> offset_target(double cx, double cy, int s);

/// Orientation from regressed (sin, cos) via the two-argument arctangent,
/// mapped into [0, 360) degrees. Rejects the undefined (0, 0) input.
double decode_angle(double sin_v, double cos_v);

// Per-frame losses on a refined feature map. Frames without objects
// contribute zero.
Tensor box_loss(const Tensor& z, const TargetBundle& targets, const VectorHead& head);
Tensor orientation_loss(const Tensor& z, const TargetBundle& targets, const VectorHead& head);
Tensor offset_loss(const Tensor& z, const TargetBundle& targets, const VectorHead& head);

/// Regresses, at this frame's center cells, the stride-scaled displacement
/// from the partner frame's center for every shared track id.
Tensor tracking_offset_loss(const Tensor& z, const std::vector<Annotation>& own,
                            const std::vector<Annotation>& partner, int s,
                            const VectorHead& head);

struct LossTerms {
    Tensor heatmap;
    Tensor pre;
    Tensor box;
    Tensor orientation;
    Tensor offset;
    Tensor tracking;
};

/// Linear combination of the term scalars under the given weights.
Tensor total_loss(const LossTerms& terms, const LossWeights& weights, bool tracking_mode);

struct PairSample {
    const RadarFrame* cur = nullptr;
    const RadarFrame* prev = nullptr;
};

/// All (t, t-gap) pairs of every sequence, current frame first.
std::vector<PairSample> collect_pairs(const Dataset& dataset, int gap);

struct StepRecord {
    double heatmap = 0.0;
    double pre = 0.0;
    double box = 0.0;
    double orientation = 0.0;
    double offset = 0.0;
    double tracking = 0.0;
    double total = 0.0;
};

/// One optimizer step over a batch of frame pairs: forward over both
/// concatenation orders, losses for the current and the previous frame
/// summed, one backward, one Adam update. Aborts on non-finite loss with a
/// report of the offending component.
StepRecord bidirectional_train_step(DetectorModel& model, Adam& optimizer,
                                    const std::vector<PairSample>& batch,
                                    const LossWeights& weights, bool tracking_mode);

} // namespace radtrack

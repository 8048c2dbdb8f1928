// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

namespace radtrack {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Oriented rectangle: center, width, length and orientation in degrees.
/// theta = 0 puts the length axis along image +x; theta lives in [0, 360).
struct OrientedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double l = 1.0;
    double theta = 0.0;
};

/// Normalizes an angle in degrees into [0, 360).
double normalize_angle_deg(double deg);

/// Validated, angle-normalized box. Rejects non-positive extents.
OrientedBox make_oriented_box(double cx, double cy, double w, double l, double theta);

/// Counter-clockwise corners. theta = 0 aligns the length axis with +x.
std::array<Vec2, 4> box_corners(const OrientedBox& box);

double box_area(const OrientedBox& box);

/// Intersection area of two oriented boxes via Sutherland-Hodgman clipping
/// and the shoelace formula. Degenerate (edge-touching) contact counts as 0.
double box_intersection_area(const OrientedBox& a, const OrientedBox& b);

/// |A n B| / (|A| + |B| - |A n B|), symmetric, in [0, 1].
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

/// Greedy non-maximum suppression over (box, confidence) pairs. Returns the
/// indices of survivors in keep order (descending confidence, ties by input
/// index). A detection is suppressed iff its IoU with an already-kept one
/// exceeds iou_thresh.
std::vector<size_t> oriented_nms(const std::vector<OrientedBox>& boxes,
                                 const std::vector<double>& confidences, double iou_thresh);

} // namespace radtrack

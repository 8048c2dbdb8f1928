// SPDX-License-Identifier: Apache-2.0

#include "radtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kClipEps = 1e-12;

double shoelace_area(const std::vector<Vec2>& poly) {
    const size_t n = poly.size();
    if (n < 3) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        s += p.x * q.y - p.y * q.x;
    }
    return std::abs(s) * 0.5;
}

// Clips a polygon against the half-plane to the left of the directed edge
// a -> b. Points within kClipEps of the line count as inside.
std::vector<Vec2> clip_by_edge(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
    std::vector<Vec2> out;
    const size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    const double ex = b.x - a.x;
    const double ey = b.y - a.y;
    auto side = [&](const Vec2& p) { return ex * (p.y - a.y) - ey * (p.x - a.x); };
    for (size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        const double sc = side(cur);
        const double sn = side(nxt);
        const bool cur_in = sc >= -kClipEps;
        const bool nxt_in = sn >= -kClipEps;
        if (cur_in) out.push_back(cur);
        if (cur_in != nxt_in) {
            double t = sc / (sc - sn);
            t = std::clamp(t, 0.0, 1.0);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

} // namespace

double normalize_angle_deg(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a = 0.0;  // fmod can land exactly on 360 after the add
    return a;
}

OrientedBox make_oriented_box(double cx, double cy, double w, double l, double theta) {
    if (!(w > 0.0) || !(l > 0.0)) {
        throw std::invalid_argument("oriented box extents must be positive, got w=" +
                                    std::to_string(w) + " l=" + std::to_string(l));
    }
    return OrientedBox{cx, cy, w, l, normalize_angle_deg(theta)};
}

std::array<Vec2, 4> box_corners(const OrientedBox& box) {
    const double rad = box.theta * kPi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double hl = 0.5 * box.l;
    const double hw = 0.5 * box.w;
    // length axis (c, s), width axis (-s, c); counter-clockwise order
    const std::array<std::pair<double, double>, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
    std::array<Vec2, 4> out;
    for (size_t i = 0; i < 4; ++i) {
        const double u = local[i].first;
        const double v = local[i].second;
        out[i] = {box.cx + u * c - v * s, box.cy + u * s + v * c};
    }
    return out;
}

double box_area(const OrientedBox& box) { return box.w * box.l; }

double box_intersection_area(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = box_corners(a);
    const auto cb = box_corners(b);
    std::vector<Vec2> poly(ca.begin(), ca.end());
    for (size_t i = 0; i < 4 && !poly.empty(); ++i) {
        poly = clip_by_edge(poly, cb[i], cb[(i + 1) % 4]);
    }
    const double inter = shoelace_area(poly);
    return std::min(inter, std::min(box_area(a), box_area(b)));
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
    const double inter = box_intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = box_area(a) + box_area(b) - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<size_t> oriented_nms(const std::vector<OrientedBox>& boxes,
                                 const std::vector<double>& confidences, double iou_thresh) {
    if (boxes.size() != confidences.size()) {
        throw std::invalid_argument("oriented_nms: " + std::to_string(boxes.size()) +
                                    " boxes vs " + std::to_string(confidences.size()) +
                                    " confidences");
    }
    for (double v : confidences) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("oriented_nms: confidence " + std::to_string(v) +
                                        " outside [0, 1]");
        }
    }
    std::vector<size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
        if (confidences[i] != confidences[j]) return confidences[i] > confidences[j];
        return i < j;
    });
    std::vector<size_t> kept;
    for (size_t idx : order) {
        bool suppressed = false;
        for (size_t k : kept) {
            if (rotated_iou(boxes[idx], boxes[k]) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#include "radtrack/decode_track.hpp"

#include "radtrack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace radtrack {

HeadMaps model_head_maps(DetectorModel& model, const Tensor& cur, const Tensor& prev,
                         bool with_tracking) {
    NoGradGuard guard;
    auto fwd = model.forward_pair(cur, prev, false);
    HeadMaps maps;
    maps.heatmap = fwd.hm_c;
    maps.size = model.box_head().forward_map(fwd.zc);
    maps.angle = model.angle_head().forward_map(fwd.zc);
    maps.offset = model.offset_head().forward_map(fwd.zc);
    if (with_tracking) maps.tracking = model.tracking_head().forward_map(fwd.zc);
    return maps;
}

std::vector<Detection> decode_detections(const HeadMaps& maps, double threshold, double nms_iou,
                                         int stride) {
    const int h = maps.heatmap.dim(1);
    const int w = maps.heatmap.dim(2);
    const double* hm = maps.heatmap.data();
    auto at = [&](const Tensor& t, int c, int y, int x) {
        return t.data()[(static_cast<int64_t>(c) * h + y) * w + x];
    };

    std::vector<Detection> candidates;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = hm[y * w + x];
            if (v < threshold) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    if (hm[ny * w + nx] > v) {
                        peak = false;
                        break;
                    }
                }
            }
            if (!peak) continue;
            const double sin_v = at(maps.angle, 0, y, x);
            const double cos_v = at(maps.angle, 1, y, x);
            if (sin_v == 0.0 && cos_v == 0.0) continue;  // no recoverable direction
            Detection det;
            det.confidence = v;
            const double cx = stride * (x + at(maps.offset, 0, y, x));
            const double cy = stride * (y + at(maps.offset, 1, y, x));
            const double bw = std::max(0.1, at(maps.size, 0, y, x));
            const double bl = std::max(0.1, at(maps.size, 1, y, x));
            det.box = make_oriented_box(cx, cy, bw, bl, decode_angle(sin_v, cos_v));
            if (maps.tracking.defined()) {
                det.tracking_offset = {stride * at(maps.tracking, 0, y, x),
                                       stride * at(maps.tracking, 1, y, x)};
            }
            candidates.push_back(det);
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Detection& a, const Detection& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.box.cy != b.box.cy) return a.box.cy < b.box.cy;
        return a.box.cx < b.box.cx;
    });
    std::vector<OrientedBox> boxes;
    std::vector<double> confs;
    boxes.reserve(candidates.size());
    for (const Detection& d : candidates) {
        boxes.push_back(d.box);
        confs.push_back(d.confidence);
    }
    std::vector<Detection> out;
    for (size_t idx : oriented_nms(boxes, confs, nms_iou)) out.push_back(candidates[idx]);
    return out;
}

AssociationResult greedy_associate(const TrackState& state,
                                   const std::vector<Detection>& detections) {
    std::vector<Detection> order = detections;
    std::stable_sort(order.begin(), order.end(), [](const Detection& a, const Detection& b) {
        return a.confidence > b.confidence;
    });

    AssociationResult result;
    result.state.next_id = state.next_id;
    result.state.dist_threshold = state.dist_threshold;
    result.state.birth_threshold = state.birth_threshold;

    std::vector<char> taken(state.live.size(), 0);
    for (const Detection& det : order) {
        const double px = det.box.cx - det.tracking_offset.x;
        const double py = det.box.cy - det.tracking_offset.y;
        int best = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < state.live.size(); ++j) {
            if (taken[j]) continue;
            const double cost = std::hypot(px - state.live[j].center.x, py - state.live[j].center.y);
            if (cost < best_cost ||
                (cost == best_cost && best >= 0 && state.live[j].id < state.live[static_cast<size_t>(best)].id)) {
                best_cost = cost;
                best = static_cast<int>(j);
            }
        }
        int id;
        if (best >= 0 && best_cost <= state.dist_threshold) {
            id = state.live[static_cast<size_t>(best)].id;
            taken[static_cast<size_t>(best)] = 1;
        } else if (det.confidence >= state.birth_threshold) {
            id = result.state.next_id++;
        } else {
            continue;
        }
        result.state.live.push_back({{det.box.cx, det.box.cy}, id});
        result.outputs.push_back({id, det.box, det.confidence});
    }
    return result;
}

std::vector<std::vector<Detection>> decode_sequence(DetectorModel& model,
                                                    const Sequence& sequence, double threshold,
                                                    double nms_iou, int gap, bool with_tracking) {
    std::vector<std::vector<Detection>> out;
    out.reserve(sequence.size());
    const int s = model.config().backbone.stride;
    for (size_t t = 0; t < sequence.size(); ++t) {
        const size_t prev = t >= static_cast<size_t>(gap) ? t - static_cast<size_t>(gap) : 0;
        HeadMaps maps = model_head_maps(model, sequence[t].intensity, sequence[prev].intensity,
                                        with_tracking);
        out.push_back(decode_detections(maps, threshold, nms_iou, s));
    }
    return out;
}

std::vector<std::vector<TrackedBox>> run_tracker(DetectorModel& model, const Sequence& sequence,
                                                 const TrackerConfig& config) {
    std::vector<std::vector<TrackedBox>> out;
    if (sequence.empty()) return out;
    auto detections =
        decode_sequence(model, sequence, config.det_threshold, config.nms_iou, config.gap, true);
    TrackState state;
    state.dist_threshold = config.dist_k;
    state.birth_threshold = config.birth_b;
    for (const auto& frame_dets : detections) {
        AssociationResult assoc = greedy_associate(state, frame_dets);
        state = std::move(assoc.state);
        out.push_back(std::move(assoc.outputs));
    }
    return out;
}

} // namespace radtrack

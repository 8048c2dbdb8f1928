// SPDX-License-Identifier: Apache-2.0

#include "radtrack/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace radtrack {

std::optional<double> average_precision(const std::vector<DetectionRecord>& detections,
                                        const std::vector<GtRecord>& ground_truth,
                                        double iou_thresh) {
    if (ground_truth.empty()) return std::nullopt;

    std::map<std::pair<int, int>, std::vector<size_t>> gt_by_frame;
    for (size_t i = 0; i < ground_truth.size(); ++i)
        gt_by_frame[{ground_truth[i].sequence, ground_truth[i].frame}].push_back(i);

    std::vector<size_t> order(detections.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (detections[a].confidence != detections[b].confidence)
            return detections[a].confidence > detections[b].confidence;
        return a < b;
    });

    std::vector<char> gt_used(ground_truth.size(), 0);
    std::vector<char> is_tp;
    is_tp.reserve(order.size());
    for (size_t idx : order) {
        const DetectionRecord& det = detections[idx];
        double best_iou = 0.0;
        size_t best_gt = ground_truth.size();
        auto it = gt_by_frame.find({det.sequence, det.frame});
        if (it != gt_by_frame.end()) {
            for (size_t g : it->second) {
                if (gt_used[g]) continue;
                const double iou = rotated_iou(det.box, ground_truth[g].box);
                if (iou > best_iou) {
                    best_iou = iou;
                    best_gt = g;
                }
            }
        }
        if (best_gt < ground_truth.size() && best_iou >= iou_thresh) {
            gt_used[best_gt] = 1;
            is_tp.push_back(1);
        } else {
            is_tp.push_back(0);
        }
    }

    const double n_gt = static_cast<double>(ground_truth.size());
    std::vector<double> precision, recall;
    int64_t tp = 0, fp = 0;
    for (char flag : is_tp) {
        if (flag) ++tp; else ++fp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / n_gt);
    }
    // all-point interpolation: running max of precision from the right
    double ap = 0.0;
    double running_max = 0.0;
    for (size_t i = precision.size(); i-- > 0;) {
        running_max = std::max(running_max, precision[i]);
        const double r_lo = i == 0 ? 0.0 : recall[i - 1];
        ap += running_max * (recall[i] - r_lo);
    }
    return ap;
}

namespace {

struct GtTrackStats {
    int last_matched_id = -1;       // last predicted id matched to this track
    bool has_match_history = false;
    bool prev_appearance_matched = false;
    bool seen = false;
    int64_t frames_total = 0;
    int64_t frames_matched = 0;
};

} // namespace

MotMetrics mot_evaluate(const std::vector<TrackRecord>& predictions,
                        const std::vector<GtRecord>& ground_truth, double iou_match_thresh) {
    MotMetrics m;

    std::map<std::pair<int, int>, std::vector<size_t>> gt_by_frame;
    for (size_t i = 0; i < ground_truth.size(); ++i)
        gt_by_frame[{ground_truth[i].sequence, ground_truth[i].frame}].push_back(i);
    std::map<std::pair<int, int>, std::vector<size_t>> pred_by_frame;
    for (size_t i = 0; i < predictions.size(); ++i)
        pred_by_frame[{predictions[i].sequence, predictions[i].frame}].push_back(i);

    // union of frames that carry ground truth or predictions, in order
    std::map<std::pair<int, int>, char> frames;
    for (const auto& kv : gt_by_frame) frames[kv.first] = 1;
    for (const auto& kv : pred_by_frame) frames[kv.first] = 1;

    std::map<std::pair<int, int>, GtTrackStats> tracks;  // (sequence, gt track id)
    double iou_sum = 0.0;

    for (const auto& frame_kv : frames) {
        const auto key = frame_kv.first;
        const auto git = gt_by_frame.find(key);
        const auto pit = pred_by_frame.find(key);
        const std::vector<size_t> empty;
        const std::vector<size_t>& gts = git == gt_by_frame.end() ? empty : git->second;
        const std::vector<size_t>& preds = pit == pred_by_frame.end() ? empty : pit->second;
        m.gt_total += static_cast<int64_t>(gts.size());

        std::vector<int> gt_match(gts.size(), -1);    // index into preds
        std::vector<char> pred_used(preds.size(), 0);

        // continuity pass: a ground truth keeps its previous frame's id when
        // that id is present and still above the threshold
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            const GtRecord& gt = ground_truth[gts[gi]];
            auto tit = tracks.find({key.first, gt.track_id});
            if (tit == tracks.end() || tit->second.last_matched_id < 0) continue;
            for (size_t pi = 0; pi < preds.size(); ++pi) {
                if (pred_used[pi]) continue;
                const TrackRecord& pr = predictions[preds[pi]];
                if (pr.id != tit->second.last_matched_id) continue;
                const double iou = rotated_iou(gt.box, pr.box);
                if (iou >= iou_match_thresh) {
                    gt_match[gi] = static_cast<int>(pi);
                    pred_used[pi] = 1;
                }
                break;
            }
        }
        // greedy pass over the remaining pairs, descending IoU
        struct PairCand {
            double iou;
            size_t gi, pi;
        };
        std::vector<PairCand> cands;
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_match[gi] >= 0) continue;
            for (size_t pi = 0; pi < preds.size(); ++pi) {
                if (pred_used[pi]) continue;
                const double iou = rotated_iou(ground_truth[gts[gi]].box, predictions[preds[pi]].box);
                if (iou >= iou_match_thresh) cands.push_back({iou, gi, pi});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const PairCand& a, const PairCand& b) {
            if (a.iou != b.iou) return a.iou > b.iou;
            if (a.gi != b.gi) return a.gi < b.gi;
            return a.pi < b.pi;
        });
        for (const PairCand& c : cands) {
            if (gt_match[c.gi] >= 0 || pred_used[c.pi]) continue;
            gt_match[c.gi] = static_cast<int>(c.pi);
            pred_used[c.pi] = 1;
        }

        // accumulate
        for (size_t pi = 0; pi < preds.size(); ++pi)
            if (!pred_used[pi]) ++m.fp;
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            const GtRecord& gt = ground_truth[gts[gi]];
            GtTrackStats& stats = tracks[{key.first, gt.track_id}];
            ++stats.frames_total;
            const bool matched = gt_match[gi] >= 0;
            if (matched) {
                const TrackRecord& pr = predictions[preds[static_cast<size_t>(gt_match[gi])]];
                const double iou = rotated_iou(gt.box, pr.box);
                iou_sum += iou;
                ++m.matched_total;
                ++stats.frames_matched;
                if (stats.has_match_history && stats.last_matched_id != pr.id) ++m.idsw;
                stats.last_matched_id = pr.id;
                stats.has_match_history = true;
            } else {
                ++m.fn;
            }
            if (stats.seen && stats.prev_appearance_matched && !matched) ++m.frag;
            stats.prev_appearance_matched = matched;
            stats.seen = true;
        }
    }

    for (const auto& kv : tracks) {
        const GtTrackStats& s = kv.second;
        if (s.frames_total == 0) continue;
        const double coverage =
            static_cast<double>(s.frames_matched) / static_cast<double>(s.frames_total);
        if (coverage >= 0.8) ++m.mostly_tracked;
        else if (coverage >= 0.2) ++m.partially_tracked;
    }
    m.motp = m.matched_total > 0 ? iou_sum / static_cast<double>(m.matched_total) : 0.0;
    m.mota = m.gt_total > 0
                 ? 1.0 - static_cast<double>(m.fn + m.fp + m.idsw) / static_cast<double>(m.gt_total)
                 : 1.0;
    return m;
}

} // namespace radtrack

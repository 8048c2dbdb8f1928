// SPDX-License-Identifier: Apache-2.0

#include "radtrack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace radtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

int clamp_cell(double v, int extent) {
    const int cell = static_cast<int>(std::round(v));
    return std::clamp(cell, 0, extent - 1);
}

} // namespace

void validate_loss_weights(const LossWeights& weights) {
    for (double w : {weights.heatmap, weights.pre_heatmap, weights.box, weights.orientation,
                     weights.offset, weights.tracking}) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("loss weights must be finite and non-negative");
    }
}

Tensor make_gt_heatmap(const std::vector<Annotation>& annotations, int grid_h, int grid_w, int s) {
    Tensor hm = Tensor::zeros({1, grid_h, grid_w});
    double* p = hm.data();
    for (const Annotation& a : annotations) {
        const int cx = clamp_cell(a.box.cx / s, grid_w);
        const int cy = clamp_cell(a.box.cy / s, grid_h);
        const double sigma = std::max(1.0, std::min(a.box.w, a.box.l) / (6.0 * s));
        const double inv = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < grid_h; ++y) {
            for (int x = 0; x < grid_w; ++x) {
                const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
                const double v = std::exp(-d2 * inv);
                double& cell = p[y * grid_w + x];
                cell = std::max(cell, v);
            }
        }
    }
    return hm;
}

std::array<double, 2> offset_target(double cx, double cy, int s) {
    const double fx = cx / s;
    const double fy = cy / s;
    return {fx - std::round(fx), fy - std::round(fy)};
}

TargetBundle make_targets(const std::vector<Annotation>& annotations, int image_h, int image_w,
                          int s) {
    const int grid_h = image_h / s;
    const int grid_w = image_w / s;
    TargetBundle t;
    t.object_count = static_cast<int>(annotations.size());
    t.heatmap = make_gt_heatmap(annotations, grid_h, grid_w, s);
    if (annotations.empty()) return t;
    const int k = t.object_count;
    t.box_targets = Tensor::zeros({k, 2});
    t.angle_targets = Tensor::zeros({k, 2});
    t.offset_targets = Tensor::zeros({k, 2});
    for (int i = 0; i < k; ++i) {
        const Annotation& a = annotations[static_cast<size_t>(i)];
        const int cellx = clamp_cell(a.box.cx / s, grid_w);
        const int celly = clamp_cell(a.box.cy / s, grid_h);
        t.center_cells.push_back({cellx, celly});
        t.box_targets.data()[i * 2 + 0] = a.box.w;
        t.box_targets.data()[i * 2 + 1] = a.box.l;
        const double rad = a.box.theta * kPi / 180.0;
        t.angle_targets.data()[i * 2 + 0] = std::sin(rad);
        t.angle_targets.data()[i * 2 + 1] = std::cos(rad);
        // offset relative to the cell actually used, so decode reproduces
        // the continuous center even when the rounded cell had to be clamped
        t.offset_targets.data()[i * 2 + 0] = a.box.cx / s - cellx;
        t.offset_targets.data()[i * 2 + 1] = a.box.cy / s - celly;
    }
    return t;
}

double decode_angle(double sin_v, double cos_v) {
    if (sin_v == 0.0 && cos_v == 0.0)
        throw std::invalid_argument("decode_angle: (0, 0) has no direction");
    return normalize_angle_deg(std::atan2(sin_v, cos_v) * 180.0 / kPi);
}

namespace {

Tensor head_regression_loss(const Tensor& z, const std::vector<GridCoord>& cells,
                            const Tensor& targets, const VectorHead& head) {
    if (cells.empty()) return Tensor::scalar(0.0);
    Tensor pred = head.forward_rows(gather_at(z, cells));
    return smooth_l1_norm_loss(pred, targets);
}

} // namespace

Tensor box_loss(const Tensor& z, const TargetBundle& targets, const VectorHead& head) {
    return head_regression_loss(z, targets.center_cells, targets.box_targets, head);
}

Tensor orientation_loss(const Tensor& z, const TargetBundle& targets, const VectorHead& head) {
    return head_regression_loss(z, targets.center_cells, targets.angle_targets, head);
}

Tensor offset_loss(const Tensor& z, const TargetBundle& targets, const VectorHead& head) {
    return head_regression_loss(z, targets.center_cells, targets.offset_targets, head);
}

Tensor tracking_offset_loss(const Tensor& z, const std::vector<Annotation>& own,
                            const std::vector<Annotation>& partner, int s,
                            const VectorHead& head) {
    const int grid_h = z.dim(1);
    const int grid_w = z.dim(2);
    std::vector<GridCoord> cells;
    std::vector<double> targets;
    for (const Annotation& a : own) {
        for (const Annotation& b : partner) {
            if (a.track_id != b.track_id) continue;
            cells.push_back({clamp_cell(a.box.cx / s, grid_w), clamp_cell(a.box.cy / s, grid_h)});
            targets.push_back((a.box.cx - b.box.cx) / s);
            targets.push_back((a.box.cy - b.box.cy) / s);
            break;
        }
    }
    if (cells.empty()) return Tensor::scalar(0.0);
    Tensor target =
        Tensor::from_vector({static_cast<int>(cells.size()), 2}, std::move(targets));
    Tensor pred = head.forward_rows(gather_at(z, cells));
    return smooth_l1_norm_loss(pred, target);
}

Tensor total_loss(const LossTerms& terms, const LossWeights& weights, bool tracking_mode) {
    Tensor total = scale(terms.heatmap, weights.heatmap);
    if (terms.pre.defined()) total = add(total, scale(terms.pre, weights.pre_heatmap));
    total = add(total, scale(terms.box, weights.box));
    total = add(total, scale(terms.orientation, weights.orientation));
    total = add(total, scale(terms.offset, weights.offset));
    if (tracking_mode && terms.tracking.defined())
        total = add(total, scale(terms.tracking, weights.tracking));
    return total;
}

std::vector<PairSample> collect_pairs(const Dataset& dataset, int gap) {
    if (gap < 1) throw std::invalid_argument("frame gap must be at least 1");
    std::vector<PairSample> pairs;
    for (const Sequence& seq : dataset.sequences) {
        for (size_t t = static_cast<size_t>(gap); t < seq.size(); ++t) {
            pairs.push_back({&seq[t], &seq[t - static_cast<size_t>(gap)]});
        }
    }
    return pairs;
}

namespace {

struct DirectionLosses {
    LossTerms terms;
    void accumulate(StepRecord& rec, bool tracking_mode) const {
        rec.heatmap += terms.heatmap.item();
        if (terms.pre.defined()) rec.pre += terms.pre.item();
        rec.box += terms.box.item();
        rec.orientation += terms.orientation.item();
        rec.offset += terms.offset.item();
        if (tracking_mode && terms.tracking.defined()) rec.tracking += terms.tracking.item();
    }
};

DirectionLosses frame_losses(DetectorModel& model, const Tensor& z, const Tensor& hm,
                             const Tensor& pre_hm, const RadarFrame& own,
                             const RadarFrame& partner, int s, bool tracking_mode) {
    DirectionLosses out;
    const TargetBundle targets =
        make_targets(own.annotations, own.intensity.dim(0), own.intensity.dim(1), s);
    out.terms.heatmap = focal_loss(hm, targets.heatmap);
    if (pre_hm.defined()) out.terms.pre = focal_loss(pre_hm, targets.heatmap);
    out.terms.box = box_loss(z, targets, model.box_head());
    out.terms.orientation = orientation_loss(z, targets, model.angle_head());
    out.terms.offset = offset_loss(z, targets, model.offset_head());
    if (tracking_mode) {
        out.terms.tracking = tracking_offset_loss(z, own.annotations, partner.annotations, s,
                                                  model.tracking_head());
    }
    return out;
}

[[noreturn]] void report_non_finite(const StepRecord& rec) {
    std::ostringstream os;
    os << "train step aborted on non-finite loss:";
    os << " heatmap=" << rec.heatmap << " pre=" << rec.pre << " box=" << rec.box
       << " orientation=" << rec.orientation << " offset=" << rec.offset
       << " tracking=" << rec.tracking;
    throw std::runtime_error(os.str());
}

} // namespace

StepRecord bidirectional_train_step(DetectorModel& model, Adam& optimizer,
                                    const std::vector<PairSample>& batch,
                                    const LossWeights& weights, bool tracking_mode) {
    if (batch.empty()) throw std::invalid_argument("train step needs a non-empty batch");
    validate_loss_weights(weights);
    const int s = model.config().backbone.stride;
    optimizer.zero_grad();
    StepRecord rec;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const PairSample& pair : batch) {
        Graph::current().clear();
        auto fwd = model.forward_pair(pair.cur->intensity, pair.prev->intensity, true);
        DirectionLosses cur =
            frame_losses(model, fwd.zc, fwd.hm_c, fwd.pre_hm_c, *pair.cur, *pair.prev, s,
                         tracking_mode);
        DirectionLosses prev =
            frame_losses(model, fwd.zp, fwd.hm_p, fwd.pre_hm_p, *pair.prev, *pair.cur, s,
                         tracking_mode);
        Tensor pair_total = add(total_loss(cur.terms, weights, tracking_mode),
                                total_loss(prev.terms, weights, tracking_mode));
        cur.accumulate(rec, tracking_mode);
        prev.accumulate(rec, tracking_mode);
        rec.total += pair_total.item();
        if (!std::isfinite(pair_total.item())) report_non_finite(rec);
        backprop(Graph::current(), scale(pair_total, inv_batch));
    }
    optimizer.step();
    rec.heatmap *= inv_batch;
    rec.pre *= inv_batch;
    rec.box *= inv_batch;
    rec.orientation *= inv_batch;
    rec.offset *= inv_batch;
    rec.tracking *= inv_batch;
    rec.total *= inv_batch;
    return rec;
}

} // namespace radtrack

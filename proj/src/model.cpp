// SPDX-License-Identifier: Apache-2.0

#include "radtrack/model.hpp"

#include <map>
#include <stdexcept>

namespace radtrack {

void validate_model_config(const ModelConfig& config) {
    validate_backbone_config(config.backbone);
    if (config.use_trl)
        validate_relational_config(config.relational, config.backbone.out_channels);
    if (config.head_width < 1)
        throw std::invalid_argument("model config: head width must be positive");
    if (config.size_prior_w <= 0.0 || config.size_prior_l <= 0.0)
        throw std::invalid_argument("model config: size priors must be positive");
}

VectorHead VectorHead::make(int channels, int width, int out_dim, Rng& rng,
                            const std::vector<double>& bias_init) {
    VectorHead head;
    head.l1 = LinearLayer::make_he(channels, width, rng);
    head.l2 = LinearLayer::make(width, out_dim, rng, 0.01);
    if (!bias_init.empty()) {
        if (static_cast<int>(bias_init.size()) != out_dim)
            throw std::invalid_argument("vector head bias init width mismatch");
        for (int i = 0; i < out_dim; ++i) head.l2.bias.data()[i] = bias_init[static_cast<size_t>(i)];
    }
    return head;
}

Tensor VectorHead::forward_map(const Tensor& z) const {
    const int h = z.dim(1), w = z.dim(2);
    std::vector<GridCoord> all;
    all.reserve(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) all.push_back({x, y});
    Tensor rows = forward_rows(gather_at(z, all));
    Tensor blank = Tensor::zeros({rows.dim(1), h, w});
    return scatter_at(blank, all, rows);
}

void VectorHead::params(std::vector<Tensor>& out) const {
    l1.params(out);
    l2.params(out);
}

void VectorHead::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    l1.named(prefix + ".l1", out);
    l2.named(prefix + ".l2", out);
}

HeatmapHead HeatmapHead::make(int channels, int width, double bias_init, Rng& rng) {
    HeatmapHead head;
    head.c1 = Conv2dLayer::make(channels, width, 3, 1, 1, rng);
    head.c2 = Conv2dLayer::make(width, 1, 1, 1, 0, rng);
    head.c2.bias.data()[0] = bias_init;
    return head;
}

void HeatmapHead::params(std::vector<Tensor>& out) const {
    c1.params(out);
    c2.params(out);
}

void HeatmapHead::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    c1.named(prefix + ".c1", out);
    c2.named(prefix + ".c2", out);
}

DetectorModel::DetectorModel(const ModelConfig& config, uint64_t init_seed) : config_(config) {
    validate_model_config(config);
    Rng rng(init_seed);
    const int channels = config.backbone.out_channels;
    backbone_ = Backbone(config.backbone, rng);
    if (config.use_trl) {
        relational_ = RelationalBlock(config.relational, channels, config.head_width,
                                      config.heatmap_bias_init, rng);
    }
    hm_head_ = HeatmapHead::make(channels, config.head_width, config.heatmap_bias_init, rng);
    box_head_ = VectorHead::make(channels, config.head_width, 2, rng,
                                 {config.size_prior_w, config.size_prior_l});
    angle_head_ = VectorHead::make(channels, config.head_width, 2, rng, {0.0, 1.0});
    offset_head_ = VectorHead::make(channels, config.head_width, 2, rng);
    tracking_head_ = VectorHead::make(channels, config.head_width, 2, rng);
}

Tensor frame_as_channel(const Tensor& frame) {
    if (frame.rank() != 2)
        throw std::invalid_argument("frame must be H x W, got " + shape_to_string(frame.shape()));
    return reshape(frame, {1, frame.dim(0), frame.dim(1)});
}

DetectorModel::PairForward DetectorModel::forward_pair(const Tensor& cur, const Tensor& prev,
                                                       bool training) {
    Tensor cur_c = frame_as_channel(cur);
    Tensor prev_c = frame_as_channel(prev);
    Tensor zc = backbone_.forward(concat({cur_c, prev_c}, 0), training);
    Tensor zp = backbone_.forward(concat({prev_c, cur_c}, 0), training);

    PairForward out;
    if (config_.use_trl) {
        RelationalBlock::Output rel = relational_.forward(zc, zp);
        out.zc = rel.zc;
        out.zp = rel.zp;
        out.pre_hm_c = rel.pre_hm_c;
        out.pre_hm_p = rel.pre_hm_p;
        out.coords_c = std::move(rel.coords_c);
        out.coords_p = std::move(rel.coords_p);
    } else {
        out.zc = zc;
        out.zp = zp;
    }
    out.hm_c = hm_head_.forward(out.zc);
    out.hm_p = hm_head_.forward(out.zp);
    return out;
}

std::vector<Tensor> DetectorModel::parameters() const {
    std::vector<Tensor> out;
    backbone_.params(out);
    if (config_.use_trl) relational_.params(out);
    hm_head_.params(out);
    box_head_.params(out);
    angle_head_.params(out);
    offset_head_.params(out);
    tracking_head_.params(out);
    return out;
}

std::vector<NamedTensor> DetectorModel::named_entries() const {
    std::vector<NamedTensor> out;
    backbone_.named("backbone", out);
    if (config_.use_trl) relational_.named("relational", out);
    hm_head_.named("heads.hm", out);
    box_head_.named("heads.box", out);
    angle_head_.named("heads.angle", out);
    offset_head_.named("heads.offset", out);
    tracking_head_.named("heads.tracking", out);
    return out;
}

void DetectorModel::load_entries(const std::vector<NamedTensor>& entries) {
    std::vector<NamedTensor> own = named_entries();
    std::map<std::string, const NamedTensor*> incoming;
    for (const NamedTensor& e : entries) incoming[e.name] = &e;
    for (NamedTensor& target : own) {
        auto it = incoming.find(target.name);
        if (it == incoming.end())
            throw std::runtime_error("checkpoint is missing parameter '" + target.name + "'");
        const Tensor& src = it->second->tensor;
        if (src.shape() != target.tensor.shape())
            throw std::runtime_error("checkpoint parameter '" + target.name + "' has shape " +
                                     shape_to_string(src.shape()) + ", model expects " +
                                     shape_to_string(target.tensor.shape()));
        std::copy(src.data(), src.data() + src.numel(), target.tensor.data());
    }
}

} // namespace radtrack

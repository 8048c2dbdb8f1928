// SPDX-License-Identifier: Apache-2.0

#include "radtrack/relational.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radtrack {

void validate_relational_config(const RelationalConfig& config, int feature_channels) {
    auto bad = [](const std::string& what) {
        throw std::invalid_argument("relational config: " + what);
    };
    if (config.k < 1) bad("k must be at least 1");
    if (config.layers < 0) bad("layer count must be non-negative");
    if (config.heads < 1) bad("head count must be positive");
    if (config.d_pos < 1) bad("d_pos must be positive");
    if (config.ff_hidden < 1) bad("feed-forward width must be positive");
    if ((feature_channels + config.d_pos) % config.heads != 0)
        bad("C + d_pos = " + std::to_string(feature_channels + config.d_pos) +
            " must be divisible by " + std::to_string(config.heads) + " heads");
    if (feature_channels % config.heads != 0)
        bad("C = " + std::to_string(feature_channels) + " must be divisible by " +
            std::to_string(config.heads) + " heads");
}

Tensor build_mask(int k, double mask_value) {
    if (k < 1) throw std::invalid_argument("build_mask: k must be at least 1");
    const int n = 2 * k;
    Tensor m = Tensor::zeros({n, n});
    double* p = m.data();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const bool same_frame = (i < k) == (j < k);
            if (same_frame && i != j) p[i * n + j] = mask_value;
        }
    }
    return m;
}

std::vector<GridCoord> select_topk(const Tensor& scores, int k) {
    if (scores.rank() != 3 || scores.dim(0) != 1)
        throw std::invalid_argument("select_topk: scores must be 1 x h x w, got " +
                                    shape_to_string(scores.shape()));
    const int h = scores.dim(1), w = scores.dim(2);
    const int cells = h * w;
    if (k > cells)
        throw std::invalid_argument("select_topk: k = " + std::to_string(k) + " exceeds " +
                                    std::to_string(cells) + " grid cells");
    std::vector<int> order(static_cast<size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    const double* p = scores.data();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;  // row-major tie break
    });
    std::vector<GridCoord> coords;
    coords.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) coords.push_back({order[static_cast<size_t>(i)] % w,
                                                  order[static_cast<size_t>(i)] / w});
    return coords;
}

PositionalEncoder PositionalEncoder::make(int d_pos, Rng& rng) {
    PositionalEncoder enc;
    enc.proj = LinearLayer::make(2, d_pos, rng, 1.0);
    return enc;
}

Tensor PositionalEncoder::forward(const std::vector<GridCoord>& coords, int grid_h,
                                  int grid_w) const {
    const int n = static_cast<int>(coords.size());
    Tensor norm = Tensor::zeros({n, 2});
    double* p = norm.data();
    const double sx = grid_w > 1 ? 1.0 / (grid_w - 1) : 0.0;
    const double sy = grid_h > 1 ? 1.0 / (grid_h - 1) : 0.0;
    for (int i = 0; i < n; ++i) {
        p[i * 2 + 0] = coords[static_cast<size_t>(i)].x * sx;
        p[i * 2 + 1] = coords[static_cast<size_t>(i)].y * sy;
    }
    return proj.forward(norm);
}

void PositionalEncoder::params(std::vector<Tensor>& out) const { proj.params(out); }

void PositionalEncoder::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    proj.named(prefix + ".proj", out);
}

PreHeatmapHead PreHeatmapHead::make(int channels, int head_width, double bias_init, Rng& rng) {
    PreHeatmapHead head;
    head.c1 = Conv2dLayer::make(channels, head_width, 3, 1, 1, rng);
    head.c2 = Conv2dLayer::make(head_width, 1, 1, 1, 0, rng);
    head.c2.bias.data()[0] = bias_init;
    return head;
}

void PreHeatmapHead::params(std::vector<Tensor>& out) const {
    c1.params(out);
    c2.params(out);
}

void PreHeatmapHead::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    c1.named(prefix + ".c1", out);
    c2.named(prefix + ".c2", out);
}

TemporalAttentionLayer TemporalAttentionLayer::make(int channels, int d_pos, int heads,
                                                    int ff_hidden, Rng& rng) {
    TemporalAttentionLayer layer;
    const int qk_width = channels + d_pos;
    const double qk_std = std::sqrt(1.0 / qk_width);
    const double v_std = std::sqrt(1.0 / channels);
    layer.q = LinearLayer::make(qk_width, qk_width, rng, qk_std);
    layer.k = LinearLayer::make(qk_width, qk_width, rng, qk_std);
    layer.v = LinearLayer::make(channels, channels, rng, v_std);
    // near-zero output projections keep the refilled features close to the
    // originals until the attention has learned a useful mixture
    layer.out = LinearLayer::make(channels, channels, rng, 0.01);
    layer.ln1 = LayerNormLayer::make(channels);
    layer.ln2 = LayerNormLayer::make(channels);
    layer.ff1 = LinearLayer::make_he(channels, ff_hidden, rng);
    layer.ff2 = LinearLayer::make(ff_hidden, channels, rng, 0.01);
    layer.heads = heads;
    return layer;
}

TemporalAttentionLayer::Result TemporalAttentionLayer::forward(const Tensor& feats,
                                                               const Tensor& pos_enc,
                                                               const Tensor& mask) const {
    const int channels = feats.dim(1);
    const int qk_width = channels + pos_enc.dim(1);
    const int dq = qk_width / heads;
    const int dv = channels / heads;

    // pre-norm sublayers; positional encoding feeds queries and keys only,
    // never values
    Tensor normed = ln1.forward(feats);
    Tensor augmented = concat({normed, pos_enc}, 1);
    Tensor query = q.forward(augmented);
    Tensor key = k.forward(augmented);
    Tensor value = v.forward(normed);

    Result result;
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(static_cast<size_t>(heads));
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dq));
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice(query, 1, h * dq, dq);
        Tensor kh = slice(key, 1, h * dq, dq);
        Tensor vh = slice(value, 1, h * dv, dv);
        Tensor logits = scale(add(mask, matmul(qh, transpose(kh))), inv_scale);
        Tensor attn = softmax_rows(logits);
        result.attention.push_back(attn);
        head_outputs.push_back(matmul(attn, vh));
    }
    Tensor h1 = add(feats, out.forward(concat(head_outputs, 1)));
    Tensor ff = ff2.forward(relu(ff1.forward(ln2.forward(h1))));
    result.features = add(h1, ff);
    return result;
}

void TemporalAttentionLayer::params(std::vector<Tensor>& out_params) const {
    q.params(out_params);
    k.params(out_params);
    v.params(out_params);
    out.params(out_params);
    ln1.params(out_params);
    ln2.params(out_params);
    ff1.params(out_params);
    ff2.params(out_params);
}

void TemporalAttentionLayer::named(const std::string& prefix,
                                   std::vector<NamedTensor>& out_params) const {
    q.named(prefix + ".q", out_params);
    k.named(prefix + ".k", out_params);
    v.named(prefix + ".v", out_params);
    out.named(prefix + ".out", out_params);
    ln1.named(prefix + ".ln1", out_params);
    ln2.named(prefix + ".ln2", out_params);
    ff1.named(prefix + ".ff1", out_params);
    ff2.named(prefix + ".ff2", out_params);
}

RelationalBlock::RelationalBlock(const RelationalConfig& config, int channels, int head_width,
                                 double bias_init, Rng& rng)
    : config_(config) {
    validate_relational_config(config, channels);
    pre_head_ = PreHeatmapHead::make(channels, head_width, bias_init, rng);
    pos_enc_ = PositionalEncoder::make(config.d_pos, rng);
    layers_.reserve(static_cast<size_t>(config.layers));
    for (int l = 0; l < config.layers; ++l) {
        layers_.push_back(
            TemporalAttentionLayer::make(channels, config.d_pos, config.heads, config.ff_hidden, rng));
    }
}

RelationalBlock::Output RelationalBlock::forward(const Tensor& zc, const Tensor& zp) const {
    if (zc.shape() != zp.shape())
        throw std::invalid_argument("relational block: feature maps differ in shape, " +
                                    shape_to_string(zc.shape()) + " vs " +
                                    shape_to_string(zp.shape()));
    Output o;
    o.pre_hm_c = pre_head_.forward(zc);
    o.pre_hm_p = pre_head_.forward(zp);
    if (layers_.empty()) {
        o.zc = zc;
        o.zp = zp;
        return o;
    }
    const int h = zc.dim(1), w = zc.dim(2);
    o.coords_c = select_topk(o.pre_hm_c, config_.k);
    o.coords_p = select_topk(o.pre_hm_p, config_.k);

    Tensor feats = concat({gather_at(zc, o.coords_c), gather_at(zp, o.coords_p)}, 0);
    Tensor pos = concat({pos_enc_.forward(o.coords_c, h, w), pos_enc_.forward(o.coords_p, h, w)}, 0);
    Tensor mask = build_mask(config_.k, config_.mask_value);
    for (const TemporalAttentionLayer& layer : layers_) {
        feats = layer.forward(feats, pos, mask).features;
    }
    Tensor updated_c = slice(feats, 0, 0, config_.k);
    Tensor updated_p = slice(feats, 0, config_.k, config_.k);
    o.zc = scatter_at(zc, o.coords_c, updated_c);
    o.zp = scatter_at(zp, o.coords_p, updated_p);
    return o;
}

void RelationalBlock::params(std::vector<Tensor>& out) const {
    pre_head_.params(out);
    pos_enc_.params(out);
    for (const auto& layer : layers_) layer.params(out);
}

void RelationalBlock::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    pre_head_.named(prefix + ".pre", out);
    pos_enc_.named(prefix + ".pos", out);
    for (size_t l = 0; l < layers_.size(); ++l)
        layers_[l].named(prefix + ".layer" + std::to_string(l), out);
}

} // namespace radtrack

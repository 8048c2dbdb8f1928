// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/nn.hpp"

#include <vector>

namespace radtrack {

struct RelationalConfig {
    int k = 8;                  // candidates per frame
    int d_pos = 64;             // positional encoding width
    int layers = 2;
    int heads = 4;
    double mask_value = -1e10;
    int ff_hidden = 128;
};

/// Checks the relational dims against the feature width (backbone channels).
void validate_relational_config(const RelationalConfig& config, int feature_channels);

/// 2K x 2K attention mask: mask_value at distinct same-frame index pairs,
/// zero on the diagonal and for all cross-frame pairs.
Tensor build_mask(int k, double mask_value);

/// Coordinates of the K largest scores of a 1 x h x w map, ties broken by
/// row-major cell order. Deterministic.
std::vector<GridCoord> select_topk(const Tensor& scores, int k);

/// Learned affine embedding of grid coordinates normalized into [0,1]^2.
struct PositionalEncoder {
    LinearLayer proj;  // 2 -> d_pos

    static PositionalEncoder make(int d_pos, Rng& rng);
    Tensor forward(const std::vector<GridCoord>& coords, int grid_h, int grid_w) const;
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// Small conv head producing candidate-selection scores in (0,1).
struct PreHeatmapHead {
    Conv2dLayer c1;
    Conv2dLayer c2;

    static PreHeatmapHead make(int channels, int head_width, double bias_init, Rng& rng);
    Tensor forward(const Tensor& z) const { return sigmoid(c2.forward(relu(c1.forward(z)))); }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// One temporal relational layer: multi-head scaled dot-product attention
/// where query/key come from position-augmented features and values from the
/// raw features, the mask is added to the logits before scaling and softmax,
/// followed by the transformer feed-forward block with layer norms and
/// residual shortcuts.
struct TemporalAttentionLayer {
    LinearLayer q, k, v, out;
    LayerNormLayer ln1, ln2;
    LinearLayer ff1, ff2;
    int heads = 4;

    struct Result {
        Tensor features;                 // 2K x C
        std::vector<Tensor> attention;   // per head, 2K x 2K rows summing to 1
    };

    static TemporalAttentionLayer make(int channels, int d_pos, int heads, int ff_hidden,
                                       Rng& rng);
    Result forward(const Tensor& feats, const Tensor& pos_enc, const Tensor& mask) const;
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// The full block: pre-heatmap scoring, top-K selection per frame, gather,
/// positional encoding, L attention layers, split and refill. Cells outside
/// the selected coordinates come through bit-identical.
class RelationalBlock {
public:
    RelationalBlock() = default;
    RelationalBlock(const RelationalConfig& config, int channels, int head_width, double bias_init,
                    Rng& rng);

    struct Output {
        Tensor zc;
        Tensor zp;
        Tensor pre_hm_c;  // 1 x h x w in (0,1)
        Tensor pre_hm_p;
        std::vector<GridCoord> coords_c;
        std::vector<GridCoord> coords_p;
    };

    Output forward(const Tensor& zc, const Tensor& zp) const;

    const RelationalConfig& config() const { return config_; }
    const PreHeatmapHead& pre_head() const { return pre_head_; }
    const std::vector<TemporalAttentionLayer>& layers() const { return layers_; }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;

private:
    RelationalConfig config_;
    PreHeatmapHead pre_head_;
    PositionalEncoder pos_enc_;
    std::vector<TemporalAttentionLayer> layers_;
};

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#include "radtrack/backbone.hpp"

#include <stdexcept>
#include <string>

namespace radtrack {

void validate_backbone_config(const BackboneConfig& config) {
    if (config.stage_widths.size() != 4)
        throw std::invalid_argument("backbone config: exactly four stage widths expected");
    for (int w : config.stage_widths) {
        if (w < 1) throw std::invalid_argument("backbone config: stage widths must be positive");
    }
    if (config.stride != 4)
        throw std::invalid_argument(
            "backbone config: this four-stage topology provides stride 4, got " +
            std::to_string(config.stride));
    if (config.out_channels < 1)
        throw std::invalid_argument("backbone config: out_channels must be positive");
}

DownBlock DownBlock::make(int cin, int cout, Rng& rng) {
    DownBlock b;
    b.conv1 = Conv2dLayer::make(cin, cout, 3, 2, 1, rng);
    b.bn1 = BatchNormLayer::make(cout);
    b.conv2 = Conv2dLayer::make(cout, cout, 3, 1, 1, rng);
    b.bn2 = BatchNormLayer::make(cout);
    b.shortcut = Conv2dLayer::make(cin, cout, 1, 2, 0, rng);
    b.bn_sc = BatchNormLayer::make(cout);
    return b;
}

Tensor DownBlock::forward(const Tensor& x, bool training) {
    Tensor main = bn2.forward(conv2.forward(relu(bn1.forward(conv1.forward(x), training))), training);
    Tensor skip = bn_sc.forward(shortcut.forward(x), training);
    return relu(add(main, skip));
}

void DownBlock::params(std::vector<Tensor>& out) const {
    conv1.params(out);
    bn1.params(out);
    conv2.params(out);
    bn2.params(out);
    shortcut.params(out);
    bn_sc.params(out);
}

void DownBlock::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    conv1.named(prefix + ".conv1", out);
    bn1.named(prefix + ".bn1", out);
    conv2.named(prefix + ".conv2", out);
    bn2.named(prefix + ".bn2", out);
    shortcut.named(prefix + ".shortcut", out);
    bn_sc.named(prefix + ".bn_sc", out);
}

SkipMerge SkipMerge::make(int deep_channels, int out_channels, Rng& rng) {
    SkipMerge m;
    m.conv = Conv2dLayer::make(deep_channels, out_channels, 3, 1, 1, rng);
    m.bn = BatchNormLayer::make(out_channels);
    return m;
}

Tensor SkipMerge::forward(const Tensor& deep, const Tensor& shallow, bool training) {
    Tensor up = bilinear_upsample(deep, shallow.dim(1), shallow.dim(2));
    Tensor refined = relu(bn.forward(conv.forward(up), training));
    return concat({refined, shallow}, 0);
}

void SkipMerge::params(std::vector<Tensor>& out) const {
    conv.params(out);
    bn.params(out);
}

void SkipMerge::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    conv.named(prefix + ".conv", out);
    bn.named(prefix + ".bn", out);
}

Backbone::Backbone(const BackboneConfig& config, Rng& rng) : config_(config) {
    validate_backbone_config(config);
    const int w1 = config.stage_widths[0];
    const int w2 = config.stage_widths[1];
    const int w3 = config.stage_widths[2];
    const int w4 = config.stage_widths[3];
    stem_ = Conv2dLayer::make(2, w1, 3, 2, 1, rng);
    stem_bn_ = BatchNormLayer::make(w1);
    stage1_ = DownBlock::make(w1, w1, rng);
    stage2_ = DownBlock::make(w1, w2, rng);
    stage3_ = DownBlock::make(w2, w3, rng);
    stage4_ = DownBlock::make(w3, w4, rng);
    // skip path widths: conv output matches the shallow side, concat doubles it
    merge3_ = SkipMerge::make(w4, w3, rng);
    merge2_ = SkipMerge::make(2 * w3, w2, rng);
    merge1_ = SkipMerge::make(2 * w2, w1, rng);
    fuse_ = Conv2dLayer::make(2 * w1, config.out_channels, 3, 1, 1, rng);
    fuse_bn_ = BatchNormLayer::make(config.out_channels);
}

Tensor Backbone::forward(const Tensor& frame_pair, bool training) {
    if (frame_pair.rank() != 3 || frame_pair.dim(0) != 2)
        throw std::invalid_argument("backbone: input must be 2 x H x W, got " +
                                    shape_to_string(frame_pair.shape()));
    const int h = frame_pair.dim(1);
    const int w = frame_pair.dim(2);
    const int deepest = config_.stride * 8;
    if (h % deepest != 0 || w % deepest != 0)
        throw std::invalid_argument("backbone: spatial extents " + shape_to_string({h, w}) +
                                    " must be divisible by " + std::to_string(deepest));
    Tensor s0 = relu(stem_bn_.forward(stem_.forward(frame_pair), training));  // w1, /2
    Tensor s1 = stage1_.forward(s0, training);                                // w1, /4
    Tensor s2 = stage2_.forward(s1, training);                                // w2, /8
    Tensor s3 = stage3_.forward(s2, training);                                // w3, /16
    Tensor s4 = stage4_.forward(s3, training);                                // w4, /32
    Tensor u3 = merge3_.forward(s4, s3, training);                            // 2*w3, /16
    Tensor u2 = merge2_.forward(u3, s2, training);                            // 2*w2, /8
    Tensor u1 = merge1_.forward(u2, s1, training);                            // 2*w1, /4
    return relu(fuse_bn_.forward(fuse_.forward(u1), training));
}

void Backbone::params(std::vector<Tensor>& out) const {
    stem_.params(out);
    stem_bn_.params(out);
    stage1_.params(out);
    stage2_.params(out);
    stage3_.params(out);
    stage4_.params(out);
    merge3_.params(out);
    merge2_.params(out);
    merge1_.params(out);
    fuse_.params(out);
    fuse_bn_.params(out);
}

void Backbone::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    stem_.named(prefix + ".stem", out);
    stem_bn_.named(prefix + ".stem_bn", out);
    stage1_.named(prefix + ".stage1", out);
    stage2_.named(prefix + ".stage2", out);
    stage3_.named(prefix + ".stage3", out);
    stage4_.named(prefix + ".stage4", out);
    merge3_.named(prefix + ".merge3", out);
    merge2_.named(prefix + ".merge2", out);
    merge1_.named(prefix + ".merge1", out);
    fuse_.named(prefix + ".fuse", out);
    fuse_bn_.named(prefix + ".fuse_bn", out);
}

} // namespace radtrack

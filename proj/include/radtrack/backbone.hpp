// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/nn.hpp"

#include <vector>

namespace radtrack {

struct BackboneConfig {
    std::vector<int> stage_widths{16, 32, 64, 128};
    int stride = 4;        // output down-sampling ratio; this topology fixes 4
    int out_channels = 64;
};

void validate_backbone_config(const BackboneConfig& config);

/// Residual block that halves the spatial extent: 3x3 stride-2 conv, BN,
/// relu, 3x3 conv, BN, plus a 1x1 stride-2 projection shortcut.
struct DownBlock {
    Conv2dLayer conv1;
    BatchNormLayer bn1;
    Conv2dLayer conv2;
    BatchNormLayer bn2;
    Conv2dLayer shortcut;
    BatchNormLayer bn_sc;

    static DownBlock make(int cin, int cout, Rng& rng);
    Tensor forward(const Tensor& x, bool training);
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// One skip connection: bilinear-upsample the deep feature to the shallow
/// size, then conv, batch norm, relu, and concatenate with the shallow one.
struct SkipMerge {
    Conv2dLayer conv;
    BatchNormLayer bn;

    static SkipMerge make(int deep_channels, int out_channels, Rng& rng);
    Tensor forward(const Tensor& deep, const Tensor& shallow, bool training);
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// Convolutional encoder over a channel-concatenated frame pair. Four
/// stride-2 stages after a stride-2 stem (deepest stride 8x the output),
/// three skip connections back up to the output stride, final fuse conv.
/// The same parameters serve both concatenation orders.
class Backbone {
public:
    Backbone() = default;
    Backbone(const BackboneConfig& config, Rng& rng);

    /// input: 2 x H x W with H, W divisible by stride * 8.
    /// output: out_channels x H/stride x W/stride.
    Tensor forward(const Tensor& frame_pair, bool training);

    const BackboneConfig& config() const { return config_; }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;

private:
    BackboneConfig config_;
    Conv2dLayer stem_;
    BatchNormLayer stem_bn_;
    DownBlock stage1_, stage2_, stage3_, stage4_;
    SkipMerge merge3_, merge2_, merge1_;
    Conv2dLayer fuse_;
    BatchNormLayer fuse_bn_;
};

} // namespace radtrack

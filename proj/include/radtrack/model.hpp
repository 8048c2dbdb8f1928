// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/backbone.hpp"
#include "radtrack/relational.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace radtrack {

struct ModelConfig {
    BackboneConfig backbone;
    RelationalConfig relational;
    int head_width = 32;
    double heatmap_bias_init = -2.19;  // sigmoid prior around 0.1 for focal training
    double size_prior_w = 7.0;         // box head bias init, pixels
    double size_prior_l = 11.0;
    bool use_trl = true;
};

void validate_model_config(const ModelConfig& config);

/// Two-layer perceptron head over per-cell feature vectors: C -> width ->
/// out. Runs on gathered K x C rows during training and can be evaluated
/// densely over a feature map for decoding.
struct VectorHead {
    LinearLayer l1;
    LinearLayer l2;

    static VectorHead make(int channels, int width, int out_dim, Rng& rng,
                           const std::vector<double>& bias_init = {});
    Tensor forward_rows(const Tensor& rows) const { return l2.forward(relu(l1.forward(rows))); }
    Tensor forward_map(const Tensor& z) const;
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// Dense conv head producing a 1 x h x w sigmoid heatmap.
struct HeatmapHead {
    Conv2dLayer c1;
    Conv2dLayer c2;

    static HeatmapHead make(int channels, int width, double bias_init, Rng& rng);
    Tensor forward(const Tensor& z) const { return sigmoid(c2.forward(relu(c1.forward(z)))); }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// The full detector: shared-parameter backbone over both concatenation
/// orders, the temporal relational block, and the regression heads.
class DetectorModel {
public:
    DetectorModel(const ModelConfig& config, uint64_t init_seed);

    struct PairForward {
        Tensor zc;        // refined C x h x w for the first-listed frame
        Tensor zp;        // refined map for the partner frame
        Tensor pre_hm_c;  // selection scores (undefined when TRL is off)
        Tensor pre_hm_p;
        Tensor hm_c;      // main heatmaps in (0,1)
        Tensor hm_p;
        std::vector<GridCoord> coords_c;
        std::vector<GridCoord> coords_p;
    };

    /// cur/prev are H x W intensity grids; channel 0 of each backbone input
    /// is the frame whose objects that pass detects.
    PairForward forward_pair(const Tensor& cur, const Tensor& prev, bool training);

    const ModelConfig& config() const { return config_; }
    bool use_trl() const { return config_.use_trl; }

    Backbone& backbone() { return backbone_; }
    const RelationalBlock& relational() const { return relational_; }
    const HeatmapHead& heatmap_head() const { return hm_head_; }
    const VectorHead& box_head() const { return box_head_; }
    const VectorHead& angle_head() const { return angle_head_; }
    const VectorHead& offset_head() const { return offset_head_; }
    const VectorHead& tracking_head() const { return tracking_head_; }

    std::vector<Tensor> parameters() const;
    std::vector<NamedTensor> named_entries() const;
    /// Strict by-name load; rejects missing entries and shape mismatches with
    /// a message naming the parameter. Ignores entries outside "backbone.",
    /// "relational." and "heads." (optimizer state shares the container).
    void load_entries(const std::vector<NamedTensor>& entries);

private:
    ModelConfig config_;
    Backbone backbone_;
    RelationalBlock relational_;
    HeatmapHead hm_head_;
    VectorHead box_head_;
    VectorHead angle_head_;
    VectorHead offset_head_;
    VectorHead tracking_head_;
};

/// H x W frame as a 1 x H x W tensor view for channel concatenation.
Tensor frame_as_channel(const Tensor& frame);

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/checkpoint.hpp"
#include "radtrack/ops.hpp"
#include "radtrack/rng.hpp"
#include "radtrack/tensor.hpp"

#include <string>
#include <vector>

namespace radtrack {

/// 2-D convolution parameters with He-normal weight init.
struct Conv2dLayer {
    Tensor weight;  // Cout x Cin x K x K
    Tensor bias;    // Cout
    int stride = 1;
    int pad = 0;

    static Conv2dLayer make(int cin, int cout, int kernel, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x) const { return conv2d(x, weight, bias, stride, pad); }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// Per-channel batch normalization with running statistics for inference.
/// Training mode normalizes by the statistics of the tensor at hand and
/// folds them into the running buffers with the given momentum.
struct BatchNormLayer {
    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
    double momentum = 0.9;
    double eps = 1e-5;

    static BatchNormLayer make(int channels);

    Tensor forward(const Tensor& x, bool training);
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

struct LinearLayer {
    Tensor weight;  // in x out
    Tensor bias;    // out

    static LinearLayer make(int in, int out, Rng& rng, double weight_std);
    static LinearLayer make_he(int in, int out, Rng& rng);

    Tensor forward(const Tensor& x) const { return bias_add(matmul(x, weight), bias); }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

struct LayerNormLayer {
    Tensor gamma;
    Tensor beta;
    double eps = 1e-5;

    static LayerNormLayer make(int width);

    Tensor forward(const Tensor& x) const { return layer_norm(x, gamma, beta, eps); }
    void params(std::vector<Tensor>& out) const;
    void named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

} // namespace radtrack

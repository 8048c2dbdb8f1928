// SPDX-License-Identifier: Apache-2.0

#include "radtrack/nn.hpp"

#include <cmath>

namespace radtrack {

Conv2dLayer Conv2dLayer::make(int cin, int cout, int kernel, int stride, int pad, Rng& rng) {
    Conv2dLayer layer;
    const double std = std::sqrt(2.0 / (cin * kernel * kernel));
    layer.weight = Tensor::randn({cout, cin, kernel, kernel}, rng, std, true);
    layer.bias = Tensor::zeros({cout}, true);
    layer.stride = stride;
    layer.pad = pad;
    return layer;
}

void Conv2dLayer::params(std::vector<Tensor>& out) const {
    out.push_back(weight);
    out.push_back(bias);
}

void Conv2dLayer::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

BatchNormLayer BatchNormLayer::make(int channels) {
    BatchNormLayer layer;
    layer.gamma = Tensor::full({channels}, 1.0, true);
    layer.beta = Tensor::zeros({channels}, true);
    layer.running_mean = Tensor::zeros({channels});
    layer.running_var = Tensor::full({channels}, 1.0);
    return layer;
}

Tensor BatchNormLayer::forward(const Tensor& x, bool training) {
    if (!training) return batch_norm_eval(x, gamma, beta, running_mean, running_var, eps);
    std::vector<double> batch_mean, batch_var;
    Tensor y = batch_norm_train(x, gamma, beta, eps, &batch_mean, &batch_var);
    double* rm = running_mean.data();
    double* rv = running_var.data();
    for (int c = 0; c < running_mean.dim(0); ++c) {
        rm[c] = momentum * rm[c] + (1.0 - momentum) * batch_mean[static_cast<size_t>(c)];
        rv[c] = momentum * rv[c] + (1.0 - momentum) * batch_var[static_cast<size_t>(c)];
    }
    return y;
}

void BatchNormLayer::params(std::vector<Tensor>& out) const {
    out.push_back(gamma);
    out.push_back(beta);
}

void BatchNormLayer::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
    out.push_back({prefix + ".running_mean", running_mean});
    out.push_back({prefix + ".running_var", running_var});
}

LinearLayer LinearLayer::make(int in, int out, Rng& rng, double weight_std) {
    LinearLayer layer;
    layer.weight = Tensor::randn({in, out}, rng, weight_std, true);
    layer.bias = Tensor::zeros({out}, true);
    return layer;
}

LinearLayer LinearLayer::make_he(int in, int out, Rng& rng) {
    return make(in, out, rng, std::sqrt(2.0 / in));
}

void LinearLayer::params(std::vector<Tensor>& out) const {
    out.push_back(weight);
    out.push_back(bias);
}

void LinearLayer::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

LayerNormLayer LayerNormLayer::make(int width) {
    LayerNormLayer layer;
    layer.gamma = Tensor::full({width}, 1.0, true);
    layer.beta = Tensor::zeros({width}, true);
    return layer;
}

void LayerNormLayer::params(std::vector<Tensor>& out) const {
    out.push_back(gamma);
    out.push_back(beta);
}

void LayerNormLayer::named(const std::string& prefix, std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

} // namespace radtrack

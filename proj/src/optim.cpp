// SPDX-License-Identifier: Apache-2.0

#include "radtrack/optim.hpp"

#include <cmath>

namespace radtrack {

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.push_back(Tensor::zeros(p.shape()));
        v_.push_back(Tensor::zeros(p.shape()));
    }
}

void Adam::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        const int64_t n = p.numel();
        double* pd = p.data();
        const double* g = p.grad();
        double* md = m_[i].data();
        double* vd = v_[i].data();
        const double decay = config_.lr * config_.weight_decay;
        for (int64_t j = 0; j < n; ++j) {
            pd[j] -= decay * pd[j];
            md[j] = config_.beta1 * md[j] + (1.0 - config_.beta1) * g[j];
            vd[j] = config_.beta2 * vd[j] + (1.0 - config_.beta2) * g[j] * g[j];
            const double mhat = md[j] / bc1;
            const double vhat = vd[j] / bc2;
            pd[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/tensor.hpp"

#include <cstdint>
#include <vector>

namespace radtrack {

struct AdamConfig {
    double lr = 5e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with decoupled weight decay: each step first shrinks the parameter
/// by lr * wd * param, then applies the bias-corrected moment update.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig config = {});

    void step();
    void zero_grad();

    int64_t step_count() const { return step_count_; }
    void set_step_count(int64_t value) { step_count_ = value; }

    const AdamConfig& config() const { return config_; }
    std::vector<Tensor>& params() { return params_; }
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }

private:
    std::vector<Tensor> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    AdamConfig config_;
    int64_t step_count_ = 0;
};

} // namespace radtrack

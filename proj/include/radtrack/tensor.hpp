// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace radtrack {

class Rng;

/// Dense n-dimensional tensor of 64-bit floats with reverse-mode autodiff.
///
/// A Tensor is a cheap handle onto shared storage; copies alias the same
/// data and gradient buffers, which is what lets recorded backward closures
/// deposit gradients into the caller's parameter tensors.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_vector(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor randn(std::vector<int> shape, Rng& rng, double stddev = 1.0,
                        bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const;
    int rank() const;
    int dim(int axis) const;
    int64_t numel() const;

    double* data();
    const double* data() const;

    /// Gradient buffer with the same shape as data; allocated (zero-filled)
    /// on first access.
    double* grad();
    const double* grad() const;
    bool has_grad() const;
    void zero_grad();

    bool requires_grad() const;
    Tensor& set_requires_grad(bool value);

    /// Value of a rank-agnostic single-element tensor.
    double item() const;
    double at(std::initializer_list<int> index) const;

    /// Same data, detached from gradient tracking.
    Tensor detached_copy() const;

    bool all_finite() const;

private:
    struct Impl {
        std::vector<int> shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;

    void ensure_defined() const;
};

/// Tape of recorded primitive applications, rebuilt on every forward pass.
/// Nodes are appended in execution order, which is already a topological
/// order of the dataflow, so backprop is a single reverse sweep.
class Graph {
public:
    static Graph& current();

    bool recording() const { return enabled_; }
    void set_recording(bool enabled) { enabled_ = enabled; }

    void record(const char* kind, std::function<void()> backward_fn);
    size_t size() const { return nodes_.size(); }
    void clear();

    friend void backprop(Graph& graph, Tensor loss);

private:
    struct Node {
        const char* kind;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;
    bool enabled_ = true;
};

/// Seeds d(loss)/d(loss) = 1 and runs every recorded backward closure in
/// reverse order, accumulating into the grad buffers of requires_grad
/// leaves. The node list is released afterwards so the graph can serve a
/// fresh forward pass. Rejects non-scalar losses.
void backprop(Graph& graph, Tensor loss);

/// RAII guard that suspends graph recording (inference mode).
class NoGradGuard {
public:
    NoGradGuard() : graph_(Graph::current()), previous_(graph_.recording()) {
        graph_.set_recording(false);
    }
    ~NoGradGuard() { graph_.set_recording(previous_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    Graph& graph_;
    bool previous_;
};

std::string shape_to_string(const std::vector<int>& shape);

} // namespace radtrack

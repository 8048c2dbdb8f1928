// SPDX-License-Identifier: Apache-2.0

#include "radtrack/tensor.hpp"

#include "radtrack/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace radtrack {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor shape has non-positive extent");
        n *= d;
    }
    return n;
}

} // namespace

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    int64_t n = shape_numel(shape);
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(static_cast<size_t>(n), 0.0);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.impl_->data) v = value;
    return t;
}

Tensor Tensor::from_vector(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
    int64_t n = shape_numel(shape);
    if (static_cast<size_t>(n) != values.size()) {
        throw std::invalid_argument("from_vector: " + std::to_string(values.size()) +
                                    " values for shape " + shape_to_string(shape));
    }
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(values);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_vector({1}, {value}, requires_grad);
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.impl_->data) v = stddev * rng.normal();
    return t;
}

void Tensor::ensure_defined() const {
    if (!impl_) throw std::logic_error("operation on an undefined tensor");
}

const std::vector<int>& Tensor::shape() const {
    ensure_defined();
    return impl_->shape;
}

int Tensor::rank() const {
    ensure_defined();
    return static_cast<int>(impl_->shape.size());
}

int Tensor::dim(int axis) const {
    ensure_defined();
    return impl_->shape.at(static_cast<size_t>(axis));
}

int64_t Tensor::numel() const {
    ensure_defined();
    return static_cast<int64_t>(impl_->data.size());
}

double* Tensor::data() {
    ensure_defined();
    return impl_->data.data();
}

const double* Tensor::data() const {
    ensure_defined();
    return impl_->data.data();
}

double* Tensor::grad() {
    ensure_defined();
    if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad.data();
}

const double* Tensor::grad() const {
    ensure_defined();
    if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad.data();
}

bool Tensor::has_grad() const {
    ensure_defined();
    return impl_->grad.size() == impl_->data.size();
}

void Tensor::zero_grad() {
    ensure_defined();
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

bool Tensor::requires_grad() const {
    ensure_defined();
    return impl_->requires_grad;
}

Tensor& Tensor::set_requires_grad(bool value) {
    ensure_defined();
    impl_->requires_grad = value;
    return *this;
}

double Tensor::item() const {
    ensure_defined();
    if (impl_->data.size() != 1) {
        throw std::invalid_argument("item(): tensor has shape " + shape_to_string(impl_->shape));
    }
    return impl_->data[0];
}

double Tensor::at(std::initializer_list<int> index) const {
    ensure_defined();
    if (index.size() != impl_->shape.size()) {
        throw std::invalid_argument("at(): index rank mismatch for shape " +
                                    shape_to_string(impl_->shape));
    }
    int64_t flat = 0;
    size_t axis = 0;
    for (int i : index) {
        if (i < 0 || i >= impl_->shape[axis]) {
            throw std::out_of_range("at(): index out of range for shape " +
                                    shape_to_string(impl_->shape));
        }
        flat = flat * impl_->shape[axis] + i;
        ++axis;
    }
    return impl_->data[static_cast<size_t>(flat)];
}

Tensor Tensor::detached_copy() const {
    ensure_defined();
    return from_vector(impl_->shape, impl_->data, false);
}

bool Tensor::all_finite() const {
    ensure_defined();
    for (double v : impl_->data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Graph& Graph::current() {
    thread_local Graph graph;
    return graph;
}

void Graph::record(const char* kind, std::function<void()> backward_fn) {
    nodes_.push_back(Node{kind, std::move(backward_fn)});
}

void Graph::clear() { nodes_.clear(); }

void backprop(Graph& graph, Tensor loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backprop: loss must be scalar, got shape " +
                                    shape_to_string(loss.shape()));
    }
    loss.grad()[0] = 1.0;
    for (auto it = graph.nodes_.rbegin(); it != graph.nodes_.rend(); ++it) {
        it->backward_fn();
    }
    graph.clear();
}

} // namespace radtrack

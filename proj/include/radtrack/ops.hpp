// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radtrack/tensor.hpp"

#include <vector>

namespace radtrack {

/// Integer cell coordinate on a feature grid, x along width, y along height.
struct GridCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const GridCoord& a, const GridCoord& b) {
        return a.x == b.x && a.y == b.y;
    }
};

enum class OpKind {
    Matmul,
    Transpose,
    Conv2d,
    BilinearUpsample,
    Softmax,
    Sigmoid,
    Relu,
    LayerNorm,
    BatchNormTrain,
    BatchNormEval,
    Add,
    Sub,
    Mul,
    Scale,
    BiasAdd,
    Concat,
    Slice,
    Sum,
    Mean,
    Reshape,
    GatherAt,
    ScatterAt,
    FocalLoss,
    SmoothL1Norm,
};

const char* op_kind_name(OpKind kind);

struct OpAttrs {
    int stride = 1;
    int pad = 0;
    int axis = 0;
    int start = 0;
    int length = 0;
    int out_h = 0;
    int out_w = 0;
    double eps = 1e-5;
    double alpha = 2.0;  // focal loss exponents
    double beta = 4.0;
    double scalar = 1.0;
    std::vector<int> shape;            // Reshape target
    std::vector<GridCoord> coords;     // GatherAt / ScatterAt
};

/// Uniform dispatcher over every primitive kind. Validates input shapes for
/// the kind and rejects mismatches with a diagnostic naming the kind and the
/// offending extents. Used directly by the gradient-check harness; model
/// code calls the named wrappers below.
Tensor apply_primitive(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs = {});

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// ---- spatial ----
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride = 1,
              int pad = 0);
Tensor bilinear_upsample(const Tensor& x, int out_h, int out_w);

// ---- activations / normalization ----
Tensor softmax_rows(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
/// Per-channel statistics over H*W. When save_mean/save_var are given they
/// receive the batch statistics (one value per channel) for running-stat
/// updates outside the graph.
Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                        double eps = 1e-5, std::vector<double>* save_mean = nullptr,
                        std::vector<double>* save_var = nullptr);
Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       const Tensor& running_mean, const Tensor& running_var, double eps = 1e-5);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor bias_add(const Tensor& x, const Tensor& bias);  // rows (R,C) + vector (C)

// ---- shape ----
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int start, int length);
Tensor reshape(const Tensor& x, std::vector<int> new_shape);

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// ---- coordinate access ----
/// Rows of a C x h x w feature map at the given cells: row k = x[:, y_k, x_k].
/// Differentiable; the gradient scatters back additively.
Tensor gather_at(const Tensor& featmap, const std::vector<GridCoord>& coords);
/// Copy of the feature map with the given cells replaced by the given rows
/// (K x C). Coordinates must be distinct. Differentiable on both inputs.
Tensor scatter_at(const Tensor& featmap, const std::vector<GridCoord>& coords,
                  const Tensor& rows);

// ---- losses ----
/// Penalty-reduced pixelwise focal loss over a predicted heatmap in (0,1);
/// predictions are clamped to [1e-7, 1 - 1e-7] inside the logs. Normalized
/// by the total cell count.
Tensor focal_loss(const Tensor& pred, const Tensor& target, double alpha = 2.0,
                  double beta = 4.0);
/// Mean over rows of smooth-L1 applied to the Euclidean norm of the per-row
/// residual between pred and target (both K x D).
Tensor smooth_l1_norm_loss(const Tensor& pred, const Tensor& target);

/// Scalar smooth-L1: 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
double smooth_l1(double x);

} // namespace radtrack

// SPDX-License-Identifier: Apache-2.0

#include "radtrack/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace radtrack {

namespace {

constexpr double kFocalClamp = 1e-7;

[[noreturn]] void fail(const char* kind, const std::string& message) {
    throw std::invalid_argument(std::string(kind) + ": " + message);
}

void require(bool cond, const char* kind, const std::string& message) {
    if (!cond) fail(kind, message);
}

bool track_grad(std::initializer_list<Tensor> inputs) {
    if (!Graph::current().recording()) return false;
    for (const Tensor& t : inputs) {
        if (t.requires_grad()) return true;
    }
    return false;
}

int64_t prod_range(const std::vector<int>& dims, int from, int to) {
    int64_t p = 1;
    for (int i = from; i < to; ++i) p *= dims[static_cast<size_t>(i)];
    return p;
}

} // namespace

const char* op_kind_name(OpKind kind) {
    switch (kind) {
        case OpKind::Matmul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::Conv2d: return "conv2d";
        case OpKind::BilinearUpsample: return "bilinear_upsample";
        case OpKind::Softmax: return "softmax";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Relu: return "relu";
        case OpKind::LayerNorm: return "layer_norm";
        case OpKind::BatchNormTrain: return "batch_norm_train";
        case OpKind::BatchNormEval: return "batch_norm_eval";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Scale: return "scale";
        case OpKind::BiasAdd: return "bias_add";
        case OpKind::Concat: return "concat";
        case OpKind::Slice: return "slice";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::Reshape: return "reshape";
        case OpKind::GatherAt: return "gather_at";
        case OpKind::ScatterAt: return "scatter_at";
        case OpKind::FocalLoss: return "focal_loss";
        case OpKind::SmoothL1Norm: return "smooth_l1_norm";
    }
    return "unknown";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const char* kind = "matmul";
    require(a.rank() == 2 && b.rank() == 2, kind,
            "expects rank-2 operands, got " + shape_to_string(a.shape()) + " and " +
                shape_to_string(b.shape()));
    require(a.dim(1) == b.dim(0), kind,
            "inner extents differ: " + shape_to_string(a.shape()) + " x " +
                shape_to_string(b.shape()));
    const int M = a.dim(0), K = a.dim(1), N = b.dim(1);
    Tensor out = Tensor::zeros({M, N}, track_grad({a, b}));
    {
        const double* ap = a.data();
        const double* bp = b.data();
        double* op = out.data();
        for (int i = 0; i < M; ++i) {
            for (int k = 0; k < K; ++k) {
                const double av = ap[i * K + k];
                const double* brow = bp + static_cast<int64_t>(k) * N;
                double* orow = op + static_cast<int64_t>(i) * N;
                for (int j = 0; j < N; ++j) orow[j] += av * brow[j];
            }
        }
    }
    if (out.requires_grad()) {
        Tensor av = a, bv = b, ov = out;
        Graph::current().record(kind, [av, bv, ov, M, K, N]() mutable {
            const double* go = ov.grad();
            if (av.requires_grad()) {
                double* ga = av.grad();
                const double* bp = bv.data();
                for (int i = 0; i < M; ++i) {
                    for (int k = 0; k < K; ++k) {
                        const double* grow = go + static_cast<int64_t>(i) * N;
                        const double* brow = bp + static_cast<int64_t>(k) * N;
                        double s = 0.0;
                        for (int j = 0; j < N; ++j) s += grow[j] * brow[j];
                        ga[i * K + k] += s;
                    }
                }
            }
            if (bv.requires_grad()) {
                double* gb = bv.grad();
                const double* ap = av.data();
                for (int i = 0; i < M; ++i) {
                    const double* grow = go + static_cast<int64_t>(i) * N;
                    for (int k = 0; k < K; ++k) {
                        const double aik = ap[i * K + k];
                        double* gbrow = gb + static_cast<int64_t>(k) * N;
                        for (int j = 0; j < N; ++j) gbrow[j] += aik * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    const char* kind = "transpose";
    require(a.rank() == 2, kind, "expects rank-2, got " + shape_to_string(a.shape()));
    const int R = a.dim(0), C = a.dim(1);
    Tensor out = Tensor::zeros({C, R}, track_grad({a}));
    const double* ap = a.data();
    double* op = out.data();
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) op[c * R + r] = ap[r * C + c];
    if (out.requires_grad()) {
        Tensor av = a, ov = out;
        Graph::current().record(kind, [av, ov, R, C]() mutable {
            if (!av.requires_grad()) return;
            const double* go = ov.grad();
            double* ga = av.grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) ga[r * C + c] += go[c * R + r];
        });
    }
    return out;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    const char* kind = "conv2d";
    require(x.rank() == 3, kind, "input must be C x H x W, got " + shape_to_string(x.shape()));
    require(weight.rank() == 4, kind,
            "weight must be Cout x Cin x KH x KW, got " + shape_to_string(weight.shape()));
    require(bias.rank() == 1, kind, "bias must be rank-1, got " + shape_to_string(bias.shape()));
    const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Cout = weight.dim(0), KH = weight.dim(2), KW = weight.dim(3);
    require(weight.dim(1) == Cin, kind,
            "weight expects " + std::to_string(weight.dim(1)) + " input channels, input has " +
                std::to_string(Cin));
    require(bias.dim(0) == Cout, kind,
            "bias extent " + std::to_string(bias.dim(0)) + " != output channels " +
                std::to_string(Cout));
    require(stride >= 1 && pad >= 0, kind, "stride must be >= 1 and pad >= 0");
    const int OH = (H + 2 * pad - KH) / stride + 1;
    const int OW = (W + 2 * pad - KW) / stride + 1;
    require(H + 2 * pad >= KH && W + 2 * pad >= KW, kind,
            "kernel " + shape_to_string(weight.shape()) + " larger than padded input " +
                shape_to_string(x.shape()));

    Tensor out = Tensor::zeros({Cout, OH, OW}, track_grad({x, weight, bias}));
    const double* xp = x.data();
    const double* wp = weight.data();
    const double* bp = bias.data();
    double* op = out.data();
    for (int co = 0; co < Cout; ++co) {
        double* plane = op + static_cast<int64_t>(co) * OH * OW;
        const double bv = bp[co];
        for (int i = 0; i < OH * OW; ++i) plane[i] = bv;
    }
    auto ox_range = [&](int kx, int& ox0, int& ox1) {
        const int lo = pad - kx;
        ox0 = lo > 0 ? (lo + stride - 1) / stride : 0;
        const int hi = W + pad - kx;  // exclusive bound on ox*stride
        int upper = (hi + stride - 1) / stride;
        ox1 = std::min(OW, upper);
    };
    for (int co = 0; co < Cout; ++co) {
        for (int ci = 0; ci < Cin; ++ci) {
            for (int ky = 0; ky < KH; ++ky) {
                for (int kx = 0; kx < KW; ++kx) {
                    const double wv = wp[((static_cast<int64_t>(co) * Cin + ci) * KH + ky) * KW + kx];
                    int ox0, ox1;
                    ox_range(kx, ox0, ox1);
                    if (ox0 >= ox1) continue;
                    for (int oy = 0; oy < OH; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= H) continue;
                        const double* xrow =
                            xp + (static_cast<int64_t>(ci) * H + iy) * W + (ox0 * stride + kx - pad);
                        double* orow = op + (static_cast<int64_t>(co) * OH + oy) * OW + ox0;
                        if (stride == 1) {
                            const int n = ox1 - ox0;
                            for (int t = 0; t < n; ++t) orow[t] += wv * xrow[t];
                        } else {
                            for (int ox = ox0, t = 0; ox < ox1; ++ox, t += stride)
                                orow[ox - ox0] += wv * xrow[t];
                        }
                    }
                }
            }
        }
    }

    if (out.requires_grad()) {
        Tensor xv = x, wv_ = weight, bv_ = bias, ov = out;
        Graph::current().record(kind, [xv, wv_, bv_, ov, Cin, H, W, Cout, KH, KW, OH, OW, stride,
                                       pad]() mutable {
            const double* go = ov.grad();
            if (bv_.requires_grad()) {
                double* gb = bv_.grad();
                for (int co = 0; co < Cout; ++co) {
                    const double* plane = go + static_cast<int64_t>(co) * OH * OW;
                    double s = 0.0;
                    for (int i = 0; i < OH * OW; ++i) s += plane[i];
                    gb[co] += s;
                }
            }
            auto ox_range = [&](int kx, int& ox0, int& ox1) {
                const int lo = pad - kx;
                ox0 = lo > 0 ? (lo + stride - 1) / stride : 0;
                const int hi = W + pad - kx;
                ox1 = std::min(OW, (hi + stride - 1) / stride);
            };
            const double* xp = xv.data();
            if (wv_.requires_grad()) {
                double* gw = wv_.grad();
                for (int co = 0; co < Cout; ++co) {
                    for (int ci = 0; ci < Cin; ++ci) {
                        for (int ky = 0; ky < KH; ++ky) {
                            for (int kx = 0; kx < KW; ++kx) {
                                int ox0, ox1;
                                ox_range(kx, ox0, ox1);
                                if (ox0 >= ox1) continue;
                                double s = 0.0;
                                for (int oy = 0; oy < OH; ++oy) {
                                    const int iy = oy * stride + ky - pad;
                                    if (iy < 0 || iy >= H) continue;
                                    const double* xrow = xp + (static_cast<int64_t>(ci) * H + iy) * W +
                                                         (ox0 * stride + kx - pad);
                                    const double* grow =
                                        go + (static_cast<int64_t>(co) * OH + oy) * OW + ox0;
                                    if (stride == 1) {
                                        const int n = ox1 - ox0;
                                        for (int t = 0; t < n; ++t) s += grow[t] * xrow[t];
                                    } else {
                                        for (int ox = ox0, t = 0; ox < ox1; ++ox, t += stride)
                                            s += grow[ox - ox0] * xrow[t];
                                    }
                                }
                                gw[((static_cast<int64_t>(co) * Cin + ci) * KH + ky) * KW + kx] += s;
                            }
                        }
                    }
                }
            }
            if (xv.requires_grad()) {
                double* gx = xv.grad();
                const double* wp = wv_.data();
                for (int co = 0; co < Cout; ++co) {
                    for (int ci = 0; ci < Cin; ++ci) {
                        for (int ky = 0; ky < KH; ++ky) {
                            for (int kx = 0; kx < KW; ++kx) {
                                const double wval =
                                    wp[((static_cast<int64_t>(co) * Cin + ci) * KH + ky) * KW + kx];
                                int ox0, ox1;
                                ox_range(kx, ox0, ox1);
                                if (ox0 >= ox1) continue;
                                for (int oy = 0; oy < OH; ++oy) {
                                    const int iy = oy * stride + ky - pad;
                                    if (iy < 0 || iy >= H) continue;
                                    double* xrow = gx + (static_cast<int64_t>(ci) * H + iy) * W +
                                                   (ox0 * stride + kx - pad);
                                    const double* grow =
                                        go + (static_cast<int64_t>(co) * OH + oy) * OW + ox0;
                                    if (stride == 1) {
                                        const int n = ox1 - ox0;
                                        for (int t = 0; t < n; ++t) xrow[t] += wval * grow[t];
                                    } else {
                                        for (int ox = ox0, t = 0; ox < ox1; ++ox, t += stride)
                                            xrow[t] += wval * grow[ox - ox0];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor bilinear_upsample(const Tensor& x, int out_h, int out_w) {
    const char* kind = "bilinear_upsample";
    require(x.rank() == 3, kind, "input must be C x H x W, got " + shape_to_string(x.shape()));
    require(out_h >= 1 && out_w >= 1, kind, "output extents must be positive");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);

    struct Tap {
        int i0, i1;
        double f;
    };
    auto make_taps = [](int in, int out) {
        std::vector<Tap> taps(static_cast<size_t>(out));
        const double ratio = static_cast<double>(in) / out;
        for (int o = 0; o < out; ++o) {
            double s = (o + 0.5) * ratio - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(in - 1));
            int i0 = static_cast<int>(std::floor(s));
            int i1 = std::min(i0 + 1, in - 1);
            taps[static_cast<size_t>(o)] = Tap{i0, i1, s - i0};
        }
        return taps;
    };
    const auto ty = make_taps(H, out_h);
    const auto tx = make_taps(W, out_w);

    Tensor out = Tensor::zeros({C, out_h, out_w}, track_grad({x}));
    const double* xp = x.data();
    double* op = out.data();
    for (int c = 0; c < C; ++c) {
        const double* plane = xp + static_cast<int64_t>(c) * H * W;
        for (int oy = 0; oy < out_h; ++oy) {
            const Tap& a = ty[static_cast<size_t>(oy)];
            double* orow = op + (static_cast<int64_t>(c) * out_h + oy) * out_w;
            const double* r0 = plane + static_cast<int64_t>(a.i0) * W;
            const double* r1 = plane + static_cast<int64_t>(a.i1) * W;
            for (int ox = 0; ox < out_w; ++ox) {
                const Tap& b = tx[static_cast<size_t>(ox)];
                const double top = r0[b.i0] * (1.0 - b.f) + r0[b.i1] * b.f;
                const double bot = r1[b.i0] * (1.0 - b.f) + r1[b.i1] * b.f;
                orow[ox] = top * (1.0 - a.f) + bot * a.f;
            }
        }
    }
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        Graph::current().record(kind, [xv, ov, C, H, W, out_h, out_w, ty, tx]() mutable {
            if (!xv.requires_grad()) return;
            const double* go = ov.grad();
            double* gx = xv.grad();
            for (int c = 0; c < C; ++c) {
                double* plane = gx + static_cast<int64_t>(c) * H * W;
                for (int oy = 0; oy < out_h; ++oy) {
                    const Tap& a = ty[static_cast<size_t>(oy)];
                    const double* grow = go + (static_cast<int64_t>(c) * out_h + oy) * out_w;
                    double* r0 = plane + static_cast<int64_t>(a.i0) * W;
                    double* r1 = plane + static_cast<int64_t>(a.i1) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const Tap& b = tx[static_cast<size_t>(ox)];
                        const double g = grow[ox];
                        r0[b.i0] += g * (1.0 - a.f) * (1.0 - b.f);
                        r0[b.i1] += g * (1.0 - a.f) * b.f;
                        r1[b.i0] += g * a.f * (1.0 - b.f);
                        r1[b.i1] += g * a.f * b.f;
                    }
                }
            }
        });
    }
    return out;
}

namespace {

void softmax_shape(const Tensor& x, int& rows, int& cols) {
    const char* kind = "softmax";
    require(x.rank() == 1 || x.rank() == 2, kind,
            "expects rank 1 or 2, got " + shape_to_string(x.shape()));
    rows = x.rank() == 2 ? x.dim(0) : 1;
    cols = x.rank() == 2 ? x.dim(1) : x.dim(0);
}

} // namespace

Tensor softmax_rows(const Tensor& x) {
    int R, C;
    softmax_shape(x, R, C);
    Tensor out = Tensor::zeros(x.shape(), track_grad({x}));
    const double* xp = x.data();
    double* op = out.data();
    for (int r = 0; r < R; ++r) {
        const double* row = xp + static_cast<int64_t>(r) * C;
        double* orow = op + static_cast<int64_t>(r) * C;
        double m = row[0];
        for (int j = 1; j < C; ++j) m = std::max(m, row[j]);
        double s = 0.0;
        for (int j = 0; j < C; ++j) {
            orow[j] = std::exp(row[j] - m);
            s += orow[j];
        }
        const double inv = 1.0 / s;
        for (int j = 0; j < C; ++j) orow[j] *= inv;
    }
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        Graph::current().record("softmax", [xv, ov, R, C]() mutable {
            if (!xv.requires_grad()) return;
            const double* go = ov.grad();
            const double* op = ov.data();
            double* gx = xv.grad();
            for (int r = 0; r < R; ++r) {
                const double* grow = go + static_cast<int64_t>(r) * C;
                const double* yrow = op + static_cast<int64_t>(r) * C;
                double* xrow = gx + static_cast<int64_t>(r) * C;
                double dot = 0.0;
                for (int j = 0; j < C; ++j) dot += grow[j] * yrow[j];
                for (int j = 0; j < C; ++j) xrow[j] += yrow[j] * (grow[j] - dot);
            }
        });
    }
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), track_grad({x}));
    const double* xp = x.data();
    double* op = out.data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double v = xp[i];
        if (v >= 0.0) {
            op[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            op[i] = e / (1.0 + e);
        }
    }
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        Graph::current().record("sigmoid", [xv, ov, n]() mutable {
            if (!xv.requires_grad()) return;
            const double* go = ov.grad();
            const double* op = ov.data();
            double* gx = xv.grad();
            for (int64_t i = 0; i < n; ++i) gx[i] += op[i] * (1.0 - op[i]) * go[i];
        });
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), track_grad({x}));
    const double* xp = x.data();
    double* op = out.data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) op[i] = xp[i] > 0.0 ? xp[i] : 0.0;
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        Graph::current().record("relu", [xv, ov, n]() mutable {
            if (!xv.requires_grad()) return;
            const double* go = ov.grad();
            const double* xp = xv.data();
            double* gx = xv.grad();
            for (int64_t i = 0; i < n; ++i) {
                if (xp[i] > 0.0) gx[i] += go[i];
            }
        });
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const char* kind = "layer_norm";
    require(x.rank() == 2, kind, "expects rank-2 input, got " + shape_to_string(x.shape()));
    const int R = x.dim(0), C = x.dim(1);
    require(gamma.rank() == 1 && gamma.dim(0) == C, kind,
            "gamma shape " + shape_to_string(gamma.shape()) + " does not match feature width " +
                std::to_string(C));
    require(beta.rank() == 1 && beta.dim(0) == C, kind,
            "beta shape " + shape_to_string(beta.shape()) + " does not match feature width " +
                std::to_string(C));
    Tensor out = Tensor::zeros(x.shape(), track_grad({x, gamma, beta}));
    std::vector<double> mu(static_cast<size_t>(R)), inv(static_cast<size_t>(R));
    const double* xp = x.data();
    const double* gp = gamma.data();
    const double* bp = beta.data();
    double* op = out.data();
    for (int r = 0; r < R; ++r) {
        const double* row = xp + static_cast<int64_t>(r) * C;
        double m = 0.0;
        for (int j = 0; j < C; ++j) m += row[j];
        m /= C;
        double var = 0.0;
        for (int j = 0; j < C; ++j) {
            const double d = row[j] - m;
            var += d * d;
        }
        var /= C;
        const double is = 1.0 / std::sqrt(var + eps);
        mu[static_cast<size_t>(r)] = m;
        inv[static_cast<size_t>(r)] = is;
        double* orow = op + static_cast<int64_t>(r) * C;
        for (int j = 0; j < C; ++j) orow[j] = gp[j] * (row[j] - m) * is + bp[j];
    }
    if (out.requires_grad()) {
        Tensor xv = x, gv = gamma, bv = beta, ov = out;
        Graph::current().record(kind, [xv, gv, bv, ov, R, C, mu, inv]() mutable {
            const double* go = ov.grad();
            const double* xp = xv.data();
            const double* gp = gv.data();
            std::vector<double> dxhat(static_cast<size_t>(C));
            for (int r = 0; r < R; ++r) {
                const double* grow = go + static_cast<int64_t>(r) * C;
                const double* xrow = xp + static_cast<int64_t>(r) * C;
                const double m = mu[static_cast<size_t>(r)];
                const double is = inv[static_cast<size_t>(r)];
                double m1 = 0.0, m2 = 0.0;
                for (int j = 0; j < C; ++j) {
                    const double xh = (xrow[j] - m) * is;
                    dxhat[static_cast<size_t>(j)] = grow[j] * gp[j];
                    m1 += dxhat[static_cast<size_t>(j)];
                    m2 += dxhat[static_cast<size_t>(j)] * xh;
                }
                m1 /= C;
                m2 /= C;
                if (gv.requires_grad() || bv.requires_grad()) {
                    double* gg = gv.requires_grad() ? gv.grad() : nullptr;
                    double* gb = bv.requires_grad() ? bv.grad() : nullptr;
                    for (int j = 0; j < C; ++j) {
                        const double xh = (xrow[j] - m) * is;
                        if (gg) gg[j] += grow[j] * xh;
                        if (gb) gb[j] += grow[j];
                    }
                }
                if (xv.requires_grad()) {
                    double* gx = xv.grad() + static_cast<int64_t>(r) * C;
                    for (int j = 0; j < C; ++j) {
                        const double xh = (xrow[j] - m) * is;
                        gx[j] += is * (dxhat[static_cast<size_t>(j)] - m1 - xh * m2);
                    }
                }
            }
        });
    }
    return out;
}

namespace {

void check_bn_shapes(const char* kind, const Tensor& x, const Tensor& gamma, const Tensor& beta) {
    require(x.rank() == 3, kind, "input must be C x H x W, got " + shape_to_string(x.shape()));
    const int C = x.dim(0);
    require(gamma.rank() == 1 && gamma.dim(0) == C, kind,
            "gamma shape " + shape_to_string(gamma.shape()) + " does not match channels " +
                std::to_string(C));
    require(beta.rank() == 1 && beta.dim(0) == C, kind,
            "beta shape " + shape_to_string(beta.shape()) + " does not match channels " +
                std::to_string(C));
}

} // namespace

Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                        std::vector<double>* save_mean, std::vector<double>* save_var) {
    const char* kind = "batch_norm_train";
    check_bn_shapes(kind, x, gamma, beta);
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int N = H * W;
    Tensor out = Tensor::zeros(x.shape(), track_grad({x, gamma, beta}));
    std::vector<double> mu(static_cast<size_t>(C)), inv(static_cast<size_t>(C));
    const double* xp = x.data();
    const double* gp = gamma.data();
    const double* bp = beta.data();
    double* op = out.data();
    if (save_mean) save_mean->assign(static_cast<size_t>(C), 0.0);
    if (save_var) save_var->assign(static_cast<size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        const double* plane = xp + static_cast<int64_t>(c) * N;
        double m = 0.0;
        for (int i = 0; i < N; ++i) m += plane[i];
        m /= N;
        double var = 0.0;
        for (int i = 0; i < N; ++i) {
            const double d = plane[i] - m;
            var += d * d;
        }
        var /= N;
        const double is = 1.0 / std::sqrt(var + eps);
        mu[static_cast<size_t>(c)] = m;
        inv[static_cast<size_t>(c)] = is;
        if (save_mean) (*save_mean)[static_cast<size_t>(c)] = m;
        if (save_var) (*save_var)[static_cast<size_t>(c)] = var;
        double* oplane = op + static_cast<int64_t>(c) * N;
        const double g = gp[c], b = bp[c];
        for (int i = 0; i < N; ++i) oplane[i] = g * (plane[i] - m) * is + b;
    }
    if (out.requires_grad()) {
        Tensor xv = x, gv = gamma, bv = beta, ov = out;
        Graph::current().record(kind, [xv, gv, bv, ov, C, N, mu, inv]() mutable {
            const double* go = ov.grad();
            const double* xp = xv.data();
            const double* gp = gv.data();
            for (int c = 0; c < C; ++c) {
                const double* grow = go + static_cast<int64_t>(c) * N;
                const double* xrow = xp + static_cast<int64_t>(c) * N;
                const double m = mu[static_cast<size_t>(c)];
                const double is = inv[static_cast<size_t>(c)];
                double m1 = 0.0, m2 = 0.0, gsum = 0.0, gxh = 0.0;
                for (int i = 0; i < N; ++i) {
                    const double xh = (xrow[i] - m) * is;
                    gsum += grow[i];
                    gxh += grow[i] * xh;
                }
                m1 = gsum * gp[c] / N;
                m2 = gxh * gp[c] / N;
                if (gv.requires_grad()) gv.grad()[c] += gxh;
                if (bv.requires_grad()) bv.grad()[c] += gsum;
                if (xv.requires_grad()) {
                    double* gx = xv.grad() + static_cast<int64_t>(c) * N;
                    const double g = gp[c];
                    for (int i = 0; i < N; ++i) {
                        const double xh = (xrow[i] - m) * is;
                        gx[i] += is * (grow[i] * g - m1 - xh * m2);
                    }
                }
            }
        });
    }
    return out;
}

Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       const Tensor& running_mean, const Tensor& running_var, double eps) {
    const char* kind = "batch_norm_eval";
    check_bn_shapes(kind, x, gamma, beta);
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    require(running_mean.rank() == 1 && running_mean.dim(0) == C, kind,
            "running_mean shape " + shape_to_string(running_mean.shape()) +
                " does not match channels " + std::to_string(C));
    require(running_var.rank() == 1 && running_var.dim(0) == C, kind,
            "running_var shape " + shape_to_string(running_var.shape()) +
                " does not match channels " + std::to_string(C));
    const int N = H * W;
    Tensor out = Tensor::zeros(x.shape(), track_grad({x, gamma, beta}));
    const double* xp = x.data();
    const double* gp = gamma.data();
    const double* bp = beta.data();
    const double* mp = running_mean.data();
    const double* vp = running_var.data();
    double* op = out.data();
    std::vector<double> inv(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
        const double is = 1.0 / std::sqrt(vp[c] + eps);
        inv[static_cast<size_t>(c)] = is;
        const double* plane = xp + static_cast<int64_t>(c) * N;
        double* oplane = op + static_cast<int64_t>(c) * N;
        const double g = gp[c], b = bp[c], m = mp[c];
        for (int i = 0; i < N; ++i) oplane[i] = g * (plane[i] - m) * is + b;
    }
    if (out.requires_grad()) {
        Tensor xv = x, gv = gamma, bv = beta, mv = running_mean, ov = out;
        Graph::current().record(kind, [xv, gv, bv, mv, ov, C, N, inv]() mutable {
            const double* go = ov.grad();
            const double* xp = xv.data();
            const double* gp = gv.data();
            const double* mp = mv.data();
            for (int c = 0; c < C; ++c) {
                const double* grow = go + static_cast<int64_t>(c) * N;
                const double* xrow = xp + static_cast<int64_t>(c) * N;
                const double is = inv[static_cast<size_t>(c)];
                if (xv.requires_grad()) {
                    double* gx = xv.grad() + static_cast<int64_t>(c) * N;
                    const double k = gp[c] * is;
                    for (int i = 0; i < N; ++i) gx[i] += k * grow[i];
                }
                if (gv.requires_grad() || bv.requires_grad()) {
                    double gs = 0.0, gxh = 0.0;
                    for (int i = 0; i < N; ++i) {
                        gs += grow[i];
                        gxh += grow[i] * (xrow[i] - mp[c]) * is;
                    }
                    if (gv.requires_grad()) gv.grad()[c] += gxh;
                    if (bv.requires_grad()) bv.grad()[c] += gs;
                }
            }
        });
    }
    return out;
}

namespace {

Tensor elementwise_binary(const char* kind, const Tensor& a, const Tensor& b, int mode) {
    require(a.shape() == b.shape(), kind,
            "shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                shape_to_string(b.shape()));
    Tensor out = Tensor::zeros(a.shape(), track_grad({a, b}));
    const double* ap = a.data();
    const double* bp = b.data();
    double* op = out.data();
    const int64_t n = a.numel();
    switch (mode) {
        case 0:
            for (int64_t i = 0; i < n; ++i) op[i] = ap[i] + bp[i];
            break;
        case 1:
            for (int64_t i = 0; i < n; ++i) op[i] = ap[i] - bp[i];
            break;
        default:
            for (int64_t i = 0; i < n; ++i) op[i] = ap[i] * bp[i];
            break;
    }
    if (out.requires_grad()) {
        Tensor av = a, bv = b, ov = out;
        Graph::current().record(kind, [av, bv, ov, n, mode]() mutable {
            const double* go = ov.grad();
            if (av.requires_grad()) {
                double* ga = av.grad();
                if (mode == 2) {
                    const double* bp = bv.data();
                    for (int64_t i = 0; i < n; ++i) ga[i] += go[i] * bp[i];
                } else {
                    for (int64_t i = 0; i < n; ++i) ga[i] += go[i];
                }
            }
            if (bv.requires_grad()) {
                double* gb = bv.grad();
                if (mode == 0) {
                    for (int64_t i = 0; i < n; ++i) gb[i] += go[i];
                } else if (mode == 1) {
                    for (int64_t i = 0; i < n; ++i) gb[i] -= go[i];
                } else {
                    const double* ap = av.data();
                    for (int64_t i = 0; i < n; ++i) gb[i] += go[i] * ap[i];
                }
            }
        });
    }
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise_binary("add", a, b, 0); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise_binary("sub", a, b, 1); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise_binary("mul", a, b, 2); }

Tensor scale(const Tensor& a, double factor) {
    Tensor out = Tensor::zeros(a.shape(), track_grad({a}));
    const double* ap = a.data();
    double* op = out.data();
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) op[i] = factor * ap[i];
    if (out.requires_grad()) {
        Tensor av = a, ov = out;
        Graph::current().record("scale", [av, ov, n, factor]() mutable {
            if (!av.requires_grad()) return;
            const double* go = ov.grad();
            double* ga = av.grad();
            for (int64_t i = 0; i < n; ++i) ga[i] += factor * go[i];
        });
    }
    return out;
}

Tensor bias_add(const Tensor& x, const Tensor& bias) {
    const char* kind = "bias_add";
    require(x.rank() == 2, kind, "expects rank-2 input, got " + shape_to_string(x.shape()));
    require(bias.rank() == 1 && bias.dim(0) == x.dim(1), kind,
            "bias shape " + shape_to_string(bias.shape()) + " does not match row width " +
                std::to_string(x.dim(1)));
    const int R = x.dim(0), C = x.dim(1);
    Tensor out = Tensor::zeros(x.shape(), track_grad({x, bias}));
    const double* xp = x.data();
    const double* bp = bias.data();
    double* op = out.data();
    for (int r = 0; r < R; ++r)
        for (int j = 0; j < C; ++j) op[r * C + j] = xp[r * C + j] + bp[j];
    if (out.requires_grad()) {
        Tensor xv = x, bv = bias, ov = out;
        Graph::current().record(kind, [xv, bv, ov, R, C]() mutable {
            const double* go = ov.grad();
            if (xv.requires_grad()) {
                double* gx = xv.grad();
                for (int64_t i = 0; i < static_cast<int64_t>(R) * C; ++i) gx[i] += go[i];
            }
            if (bv.requires_grad()) {
                double* gb = bv.grad();
                for (int r = 0; r < R; ++r)
                    for (int j = 0; j < C; ++j) gb[j] += go[r * C + j];
            }
        });
    }
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    const char* kind = "concat";
    require(!parts.empty(), kind, "needs at least one input");
    const int rank = parts[0].rank();
    require(axis >= 0 && axis < rank, kind, "axis " + std::to_string(axis) + " out of range");
    std::vector<int> out_shape = parts[0].shape();
    int axis_total = 0;
    for (const Tensor& t : parts) {
        require(t.rank() == rank, kind,
                "rank mismatch: " + shape_to_string(parts[0].shape()) + " vs " +
                    shape_to_string(t.shape()));
        for (int d = 0; d < rank; ++d) {
            if (d == axis) continue;
            require(t.dim(d) == out_shape[static_cast<size_t>(d)], kind,
                    "extent mismatch off the concat axis: " + shape_to_string(parts[0].shape()) +
                        " vs " + shape_to_string(t.shape()));
        }
        axis_total += t.dim(axis);
    }
    out_shape[static_cast<size_t>(axis)] = axis_total;

    bool needs = false;
    for (const Tensor& t : parts) needs = needs || t.requires_grad();
    needs = needs && Graph::current().recording();
    Tensor out = Tensor::zeros(out_shape, needs);

    const int64_t outer = prod_range(out_shape, 0, axis);
    const int64_t inner = prod_range(out_shape, axis + 1, rank);
    const int64_t out_block = static_cast<int64_t>(axis_total) * inner;
    double* op = out.data();
    int64_t offset = 0;
    for (const Tensor& t : parts) {
        const int64_t block = static_cast<int64_t>(t.dim(axis)) * inner;
        const double* tp = t.data();
        for (int64_t o = 0; o < outer; ++o) {
            std::copy(tp + o * block, tp + (o + 1) * block, op + o * out_block + offset);
        }
        offset += block;
    }
    if (out.requires_grad()) {
        std::vector<Tensor> pv = parts;
        Tensor ov = out;
        Graph::current().record(kind, [pv, ov, outer, inner, out_block, axis]() mutable {
            const double* go = ov.grad();
            int64_t offset = 0;
            for (Tensor& t : pv) {
                const int64_t block = static_cast<int64_t>(t.dim(axis)) * inner;
                if (t.requires_grad()) {
                    double* gt = t.grad();
                    for (int64_t o = 0; o < outer; ++o) {
                        const double* src = go + o * out_block + offset;
                        double* dst = gt + o * block;
                        for (int64_t i = 0; i < block; ++i) dst[i] += src[i];
                    }
                }
                offset += block;
            }
        });
    }
    return out;
}

Tensor slice(const Tensor& x, int axis, int start, int length) {
    const char* kind = "slice";
    const int rank = x.rank();
    require(axis >= 0 && axis < rank, kind, "axis " + std::to_string(axis) + " out of range");
    require(length >= 1 && start >= 0 && start + length <= x.dim(axis), kind,
            "window [" + std::to_string(start) + ", " + std::to_string(start + length) +
                ") out of range for extent " + std::to_string(x.dim(axis)));
    std::vector<int> out_shape = x.shape();
    out_shape[static_cast<size_t>(axis)] = length;
    Tensor out = Tensor::zeros(out_shape, track_grad({x}));
    const int64_t outer = prod_range(x.shape(), 0, axis);
    const int64_t inner = prod_range(x.shape(), axis + 1, rank);
    const int64_t in_block = static_cast<int64_t>(x.dim(axis)) * inner;
    const int64_t out_block = static_cast<int64_t>(length) * inner;
    const double* xp = x.data();
    double* op = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        const double* src = xp + o * in_block + static_cast<int64_t>(start) * inner;
        std::copy(src, src + out_block, op + o * out_block);
    }
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        Graph::current().record(kind, [xv, ov, outer, inner, in_block, out_block, start]() mutable {
            if (!xv.requires_grad()) return;
            const double* go = ov.grad();
            double* gx = xv.grad();
            for (int64_t o = 0; o < outer; ++o) {
                double* dst = gx + o * in_block + static_cast<int64_t>(start) * inner;
                const double* src = go + o * out_block;
                for (int64_t i = 0; i < out_block; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
    const char* kind = "reshape";
    int64_t n = 1;
    for (int d : new_shape) n *= d;
    require(n == x.numel(), kind,
            "cannot reshape " + shape_to_string(x.shape()) + " to " + shape_to_string(new_shape));
    Tensor out = Tensor::zeros(new_shape, track_grad({x}));
    std::copy(x.data(), x.data() + x.numel(), out.data());
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        Graph::current().record(kind, [xv, ov]() mutable {
            if (!xv.requires_grad()) return;
            const double* go = ov.grad();
            double* gx = xv.grad();
            const int64_t n = xv.numel();
            for (int64_t i = 0; i < n; ++i) gx[i] += go[i];
        });
    }
    return out;
}

namespace {

Tensor reduce(const Tensor& x, bool take_mean) {
    const char* kind = take_mean ? "mean" : "sum";
    const int64_t n = x.numel();
    double s = 0.0;
    const double* xp = x.data();
    for (int64_t i = 0; i < n; ++i) s += xp[i];
    if (take_mean) s /= static_cast<double>(n);
    Tensor out = Tensor::from_vector({1}, {s}, track_grad({x}));
    if (out.requires_grad()) {
        Tensor xv = x, ov = out;
        const double w = take_mean ? 1.0 / static_cast<double>(n) : 1.0;
        Graph::current().record(kind, [xv, ov, n, w]() mutable {
            if (!xv.requires_grad()) return;
            const double g = ov.grad()[0] * w;
            double* gx = xv.grad();
            for (int64_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    return out;
}

} // namespace

Tensor sum(const Tensor& x) { return reduce(x, false); }
Tensor mean(const Tensor& x) { return reduce(x, true); }

Tensor gather_at(const Tensor& featmap, const std::vector<GridCoord>& coords) {
    const char* kind = "gather_at";
    require(featmap.rank() == 3, kind,
            "feature map must be C x h x w, got " + shape_to_string(featmap.shape()));
    const int C = featmap.dim(0), h = featmap.dim(1), w = featmap.dim(2);
    const int K = static_cast<int>(coords.size());
    require(K >= 1, kind, "needs at least one coordinate");
    for (const GridCoord& c : coords) {
        require(c.x >= 0 && c.x < w && c.y >= 0 && c.y < h, kind,
                "coordinate (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                    ") outside grid " + std::to_string(h) + " x " + std::to_string(w));
    }
    Tensor out = Tensor::zeros({K, C}, track_grad({featmap}));
    const double* fp = featmap.data();
    double* op = out.data();
    for (int k = 0; k < K; ++k) {
        const int64_t base = static_cast<int64_t>(coords[static_cast<size_t>(k)].y) * w +
                             coords[static_cast<size_t>(k)].x;
        for (int c = 0; c < C; ++c) op[k * C + c] = fp[static_cast<int64_t>(c) * h * w + base];
    }
    if (out.requires_grad()) {
        Tensor fv = featmap, ov = out;
        std::vector<GridCoord> cs = coords;
        Graph::current().record(kind, [fv, ov, cs, C, h, w, K]() mutable {
            if (!fv.requires_grad()) return;
            const double* go = ov.grad();
            double* gf = fv.grad();
            for (int k = 0; k < K; ++k) {
                const int64_t base =
                    static_cast<int64_t>(cs[static_cast<size_t>(k)].y) * w + cs[static_cast<size_t>(k)].x;
                for (int c = 0; c < C; ++c)
                    gf[static_cast<int64_t>(c) * h * w + base] += go[k * C + c];
            }
        });
    }
    return out;
}

Tensor scatter_at(const Tensor& featmap, const std::vector<GridCoord>& coords,
                  const Tensor& rows) {
    const char* kind = "scatter_at";
    require(featmap.rank() == 3, kind,
            "feature map must be C x h x w, got " + shape_to_string(featmap.shape()));
    const int C = featmap.dim(0), h = featmap.dim(1), w = featmap.dim(2);
    const int K = static_cast<int>(coords.size());
    require(rows.rank() == 2 && rows.dim(0) == K && rows.dim(1) == C, kind,
            "rows shape " + shape_to_string(rows.shape()) + " does not match " +
                std::to_string(K) + " coords x " + std::to_string(C) + " channels");
    std::vector<char> seen(static_cast<size_t>(h) * w, 0);
    for (const GridCoord& c : coords) {
        require(c.x >= 0 && c.x < w && c.y >= 0 && c.y < h, kind,
                "coordinate (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                    ") outside grid " + std::to_string(h) + " x " + std::to_string(w));
        char& flag = seen[static_cast<size_t>(c.y) * w + c.x];
        require(!flag, kind,
                "duplicate coordinate (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                    ") makes the write ambiguous");
        flag = 1;
    }
    Tensor out = Tensor::zeros(featmap.shape(), track_grad({featmap, rows}));
    std::copy(featmap.data(), featmap.data() + featmap.numel(), out.data());
    const double* rp = rows.data();
    double* op = out.data();
    for (int k = 0; k < K; ++k) {
        const int64_t base = static_cast<int64_t>(coords[static_cast<size_t>(k)].y) * w +
                             coords[static_cast<size_t>(k)].x;
        for (int c = 0; c < C; ++c) op[static_cast<int64_t>(c) * h * w + base] = rp[k * C + c];
    }
    if (out.requires_grad()) {
        Tensor fv = featmap, rv = rows, ov = out;
        std::vector<GridCoord> cs = coords;
        std::vector<char> mask = seen;
        Graph::current().record(kind, [fv, rv, ov, cs, mask, C, h, w, K]() mutable {
            const double* go = ov.grad();
            if (fv.requires_grad()) {
                double* gf = fv.grad();
                const int64_t hw = static_cast<int64_t>(h) * w;
                for (int c = 0; c < C; ++c) {
                    const double* gplane = go + c * hw;
                    double* fplane = gf + c * hw;
                    for (int64_t i = 0; i < hw; ++i) {
                        if (!mask[static_cast<size_t>(i)]) fplane[i] += gplane[i];
                    }
                }
            }
            if (rv.requires_grad()) {
                double* gr = rv.grad();
                for (int k = 0; k < K; ++k) {
                    const int64_t base = static_cast<int64_t>(cs[static_cast<size_t>(k)].y) * w +
                                         cs[static_cast<size_t>(k)].x;
                    for (int c = 0; c < C; ++c)
                        gr[k * C + c] += go[static_cast<int64_t>(c) * h * w + base];
                }
            }
        });
    }
    return out;
}

Tensor focal_loss(const Tensor& pred, const Tensor& target, double alpha, double beta) {
    const char* kind = "focal_loss";
    require(pred.shape() == target.shape(), kind,
            "shape mismatch: " + shape_to_string(pred.shape()) + " vs " +
                shape_to_string(target.shape()));
    const int64_t n = pred.numel();
    const double* pp = pred.data();
    const double* tp = target.data();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double p = std::clamp(pp[i], kFocalClamp, 1.0 - kFocalClamp);
        if (tp[i] == 1.0) {
            loss -= std::pow(1.0 - p, alpha) * std::log(p);
        } else {
            loss -= std::pow(1.0 - tp[i], beta) * std::pow(p, alpha) * std::log(1.0 - p);
        }
    }
    loss /= static_cast<double>(n);
    Tensor out = Tensor::from_vector({1}, {loss}, track_grad({pred}));
    if (out.requires_grad()) {
        Tensor pv = pred, tv = target, ov = out;
        Graph::current().record(kind, [pv, tv, ov, n, alpha, beta]() mutable {
            if (!pv.requires_grad()) return;
            const double g = ov.grad()[0] / static_cast<double>(n);
            const double* pp = pv.data();
            const double* tp = tv.data();
            double* gp = pv.grad();
            for (int64_t i = 0; i < n; ++i) {
                if (pp[i] <= kFocalClamp || pp[i] >= 1.0 - kFocalClamp) continue;  // clamped flat
                const double p = pp[i];
                double d;
                if (tp[i] == 1.0) {
                    d = alpha * std::pow(1.0 - p, alpha - 1.0) * std::log(p) -
                        std::pow(1.0 - p, alpha) / p;
                } else {
                    d = -std::pow(1.0 - tp[i], beta) *
                        (alpha * std::pow(p, alpha - 1.0) * std::log(1.0 - p) -
                         std::pow(p, alpha) / (1.0 - p));
                }
                gp[i] += g * d;
            }
        });
    }
    return out;
}

double smooth_l1(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

Tensor smooth_l1_norm_loss(const Tensor& pred, const Tensor& target) {
    const char* kind = "smooth_l1_norm";
    require(pred.rank() == 2, kind, "expects rank-2 input, got " + shape_to_string(pred.shape()));
    require(pred.shape() == target.shape(), kind,
            "shape mismatch: " + shape_to_string(pred.shape()) + " vs " +
                shape_to_string(target.shape()));
    const int K = pred.dim(0), D = pred.dim(1);
    const double* pp = pred.data();
    const double* tp = target.data();
    double loss = 0.0;
    for (int k = 0; k < K; ++k) {
        double r2 = 0.0;
        for (int d = 0; d < D; ++d) {
            const double v = pp[k * D + d] - tp[k * D + d];
            r2 += v * v;
        }
        loss += smooth_l1(std::sqrt(r2));
    }
    loss /= static_cast<double>(K);
    Tensor out = Tensor::from_vector({1}, {loss}, track_grad({pred}));
    if (out.requires_grad()) {
        Tensor pv = pred, tv = target, ov = out;
        Graph::current().record(kind, [pv, tv, ov, K, D]() mutable {
            if (!pv.requires_grad()) return;
            const double g = ov.grad()[0] / static_cast<double>(K);
            const double* pp = pv.data();
            const double* tp = tv.data();
            double* gp = pv.grad();
            for (int k = 0; k < K; ++k) {
                double r2 = 0.0;
                for (int d = 0; d < D; ++d) {
                    const double v = pp[k * D + d] - tp[k * D + d];
                    r2 += v * v;
                }
                const double r = std::sqrt(r2);
                // d/dv smooth_l1(|v|) is v for |v| < 1 and v/|v| otherwise
                const double coef = r < 1.0 ? 1.0 : 1.0 / r;
                for (int d = 0; d < D; ++d) {
                    const double v = pp[k * D + d] - tp[k * D + d];
                    gp[k * D + d] += g * coef * v;
                }
            }
        });
    }
    return out;
}

Tensor apply_primitive(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs) {
    const char* name = op_kind_name(kind);
    auto need = [&](size_t n) {
        require(inputs.size() == n, name,
                "expects " + std::to_string(n) + " inputs, got " + std::to_string(inputs.size()));
    };
    switch (kind) {
        case OpKind::Matmul: need(2); return matmul(inputs[0], inputs[1]);
        case OpKind::Transpose: need(1); return transpose(inputs[0]);
        case OpKind::Conv2d: need(3); return conv2d(inputs[0], inputs[1], inputs[2], attrs.stride, attrs.pad);
        case OpKind::BilinearUpsample: need(1); return bilinear_upsample(inputs[0], attrs.out_h, attrs.out_w);
        case OpKind::Softmax: need(1); return softmax_rows(inputs[0]);
        case OpKind::Sigmoid: need(1); return sigmoid(inputs[0]);
        case OpKind::Relu: need(1); return relu(inputs[0]);
        case OpKind::LayerNorm: need(3); return layer_norm(inputs[0], inputs[1], inputs[2], attrs.eps);
        case OpKind::BatchNormTrain: need(3); return batch_norm_train(inputs[0], inputs[1], inputs[2], attrs.eps);
        case OpKind::BatchNormEval:
            need(5);
            return batch_norm_eval(inputs[0], inputs[1], inputs[2], inputs[3], inputs[4], attrs.eps);
        case OpKind::Add: need(2); return add(inputs[0], inputs[1]);
        case OpKind::Sub: need(2); return sub(inputs[0], inputs[1]);
        case OpKind::Mul: need(2); return mul(inputs[0], inputs[1]);
        case OpKind::Scale: need(1); return scale(inputs[0], attrs.scalar);
        case OpKind::BiasAdd: need(2); return bias_add(inputs[0], inputs[1]);
        case OpKind::Concat: return concat(inputs, attrs.axis);
        case OpKind::Slice: need(1); return slice(inputs[0], attrs.axis, attrs.start, attrs.length);
        case OpKind::Sum: need(1); return sum(inputs[0]);
        case OpKind::Mean: need(1); return mean(inputs[0]);
        case OpKind::Reshape: need(1); return reshape(inputs[0], attrs.shape);
        case OpKind::GatherAt: need(1); return gather_at(inputs[0], attrs.coords);
        case OpKind::ScatterAt: need(2); return scatter_at(inputs[0], attrs.coords, inputs[1]);
        case OpKind::FocalLoss: need(2); return focal_loss(inputs[0], inputs[1], attrs.alpha, attrs.beta);
        case OpKind::SmoothL1Norm: need(2); return smooth_l1_norm_loss(inputs[0], inputs[1]);
    }
    fail(name, "unhandled kind");
}

} // namespace radtrack

#include "adaptcl/tensor.hpp"

#include <cmath>
#include <string>

#include "adaptcl/errors.hpp"

namespace adaptcl {

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (const auto d : shape) {
        if (d < 0) throw DimensionError("negative extent in shape");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<std::int64_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != numel()) {
        throw DimensionError("tensor data length does not match shape product");
    }
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<float>(static_cast<std::size_t>(n), 0.0f));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, float value) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<float>(static_cast<std::size_t>(n), value));
}

bool Tensor::all_finite() const {
    for (const float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(float v) {
    for (auto& x : data) x = v;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul expects rank-2 tensors");
    }
    const std::int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw DimensionError("matmul inner dimensions disagree: " + std::to_string(k) +
                             " vs " + std::to_string(k2));
    }
    Tensor out = Tensor::zeros({m, n});
    const float* pa = a.data.data();
    const float* pb = b.data.data();
    float* po = out.data.data();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const float av = pa[i * k + kk];
            if (av == 0.0f) continue;
            const float* brow = pb + kk * n;
            float* orow = po + i * n;
            for (std::int64_t j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("hadamard shape mismatch");
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

ConvGeometry conv_geometry(const std::vector<std::int64_t>& input_shape,
                           std::int64_t out_c, std::int64_t in_c,
                           std::int64_t kh, std::int64_t kw,
                           std::int64_t stride, std::int64_t pad) {
    if (stride <= 0 || pad < 0) throw ConfigError("conv stride must be positive, padding nonnegative");
    ConvGeometry g{};
    if (input_shape.size() == 4) {
        g.batch = input_shape[0];
        g.in_c = input_shape[1];
        g.in_h = input_shape[2];
        g.in_w = input_shape[3];
    } else if (input_shape.size() == 3) {
        g.batch = 1;
        g.in_c = input_shape[0];
        g.in_h = input_shape[1];
        g.in_w = input_shape[2];
    } else {
        throw DimensionError("conv input must be [B,C,H,W] or [C,H,W]");
    }
    if (g.in_c != in_c) {
        throw DimensionError("conv input channels " + std::to_string(g.in_c) +
                             " do not match kernel channels " + std::to_string(in_c));
    }
    g.out_c = out_c;
    g.kh = kh;
    g.kw = kw;
    g.stride = stride;
    g.pad = pad;
    const std::int64_t hn = g.in_h + 2 * pad - kh;
    const std::int64_t wn = g.in_w + 2 * pad - kw;
    if (hn < 0 || wn < 0 || hn % stride != 0 || wn % stride != 0) {
        throw ConfigError("conv output extent is not a positive integer for input " +
                          std::to_string(g.in_h) + "x" + std::to_string(g.in_w) +
                          ", kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                          ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));
    }
    g.out_h = hn / stride + 1;
    g.out_w = wn / stride + 1;
    return g;
}

Tensor im2col(const Tensor& input, const ConvGeometry& g) {
    const std::int64_t patch = g.in_c * g.kh * g.kw;
    const std::int64_t cols_n = g.out_h * g.out_w;
    Tensor cols = Tensor::zeros({g.batch, patch, cols_n});
    const float* in = input.data.data();
    float* out = cols.data.data();
    const std::int64_t in_img = g.in_c * g.in_h * g.in_w;
    for (std::int64_t b = 0; b < g.batch; ++b) {
        const float* img = in + b * in_img;
        float* dst = out + b * patch * cols_n;
        for (std::int64_t c = 0; c < g.in_c; ++c) {
            for (std::int64_t ky = 0; ky < g.kh; ++ky) {
                for (std::int64_t kx = 0; kx < g.kw; ++kx) {
                    const std::int64_t prow = (c * g.kh + ky) * g.kw + kx;
                    for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
                        const std::int64_t iy = oy * g.stride + ky - g.pad;
                        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
                            const std::int64_t ix = ox * g.stride + kx - g.pad;
                            float v = 0.0f;
                            if (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w) {
                                v = img[(c * g.in_h + iy) * g.in_w + ix];
                            }
                            dst[prow * cols_n + oy * g.out_w + ox] = v;
                        }
                    }
                }
            }
        }
    }
    return cols;
}

Tensor col2im(const Tensor& cols, const ConvGeometry& g) {
    const std::int64_t patch = g.in_c * g.kh * g.kw;
    const std::int64_t cols_n = g.out_h * g.out_w;
    Tensor img = Tensor::zeros({g.batch, g.in_c, g.in_h, g.in_w});
    const float* src = cols.data.data();
    float* out = img.data.data();
    const std::int64_t in_img = g.in_c * g.in_h * g.in_w;
    for (std::int64_t b = 0; b < g.batch; ++b) {
        float* dst = out + b * in_img;
        const float* c0 = src + b * patch * cols_n;
        for (std::int64_t c = 0; c < g.in_c; ++c) {
            for (std::int64_t ky = 0; ky < g.kh; ++ky) {
                for (std::int64_t kx = 0; kx < g.kw; ++kx) {
                    const std::int64_t prow = (c * g.kh + ky) * g.kw + kx;
                    for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
                        const std::int64_t iy = oy * g.stride + ky - g.pad;
                        if (iy < 0 || iy >= g.in_h) continue;
                        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
                            const std::int64_t ix = ox * g.stride + kx - g.pad;
                            if (ix < 0 || ix >= g.in_w) continue;
                            dst[(c * g.in_h + iy) * g.in_w + ix] +=
                                c0[prow * cols_n + oy * g.out_w + ox];
                        }
                    }
                }
            }
        }
    }
    return img;
}

namespace {

Tensor flatten_kernel(const Tensor& kernel, std::int64_t& out_c, std::int64_t& in_c,
                      std::int64_t& kh, std::int64_t& kw) {
    if (kernel.rank() == 4) {
        out_c = kernel.dim(0);
        in_c = kernel.dim(1);
        kh = kernel.dim(2);
        kw = kernel.dim(3);
        Tensor flat = kernel;
        flat.shape = {out_c, in_c * kh * kw};
        return flat;
    }
    throw DimensionError("conv kernel must be [Co,Ci,kh,kw]");
}

}  // namespace

Tensor conv2d_forward_flat(const Tensor& input, const Tensor& kernel_flat,
                           const ConvGeometry& g) {
    if (kernel_flat.rank() != 2 || kernel_flat.dim(0) != g.out_c ||
        kernel_flat.dim(1) != g.in_c * g.kh * g.kw) {
        throw DimensionError("flat conv kernel shape mismatch");
    }
    const Tensor cols = im2col(input, g);
    const std::int64_t cols_n = g.out_h * g.out_w;
    Tensor out = Tensor::zeros({g.batch, g.out_c, g.out_h, g.out_w});
    for (std::int64_t b = 0; b < g.batch; ++b) {
        Tensor colmat({g.in_c * g.kh * g.kw, cols_n},
                      std::vector<float>(cols.data.begin() + b * (g.in_c * g.kh * g.kw) * cols_n,
                                         cols.data.begin() + (b + 1) * (g.in_c * g.kh * g.kw) * cols_n));
        const Tensor res = matmul(kernel_flat, colmat);
        std::copy(res.data.begin(), res.data.end(),
                  out.data.begin() + b * g.out_c * cols_n);
    }
    return out;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                      std::int64_t stride, std::int64_t pad) {
    std::int64_t out_c, in_c, kh, kw;
    const Tensor flat = flatten_kernel(kernel, out_c, in_c, kh, kw);
    const ConvGeometry g = conv_geometry(input.shape, out_c, in_c, kh, kw, stride, pad);
    Tensor out = conv2d_forward_flat(input, flat, g);
    if (input.rank() == 3) {
        out.shape = {g.out_c, g.out_h, g.out_w};
    }
    return out;
}

Conv2dGrads conv2d_backward_flat(const Tensor& grad_out, const Tensor& input,
                                 const Tensor& kernel_flat, const ConvGeometry& g) {
    const std::int64_t patch = g.in_c * g.kh * g.kw;
    const std::int64_t cols_n = g.out_h * g.out_w;
    if (shape_numel(grad_out.shape) != g.batch * g.out_c * cols_n) {
        throw DimensionError("conv2d_backward: grad_out shape mismatch");
    }
    const Tensor cols = im2col(input, g);
    Tensor grad_kernel = Tensor::zeros({g.out_c, patch});
    Tensor grad_cols = Tensor::zeros({g.batch, patch, cols_n});
    for (std::int64_t b = 0; b < g.batch; ++b) {
        Tensor go({g.out_c, cols_n},
                  std::vector<float>(grad_out.data.begin() + b * g.out_c * cols_n,
                                     grad_out.data.begin() + (b + 1) * g.out_c * cols_n));
        Tensor colmat({patch, cols_n},
                      std::vector<float>(cols.data.begin() + b * patch * cols_n,
                                         cols.data.begin() + (b + 1) * patch * cols_n));
        // grad_K += go * cols^T ; grad_cols = K^T * go
        for (std::int64_t i = 0; i < g.out_c; ++i) {
            for (std::int64_t j = 0; j < cols_n; ++j) {
                const float gv = go.data[static_cast<std::size_t>(i * cols_n + j)];
                if (gv == 0.0f) continue;
                for (std::int64_t p = 0; p < patch; ++p) {
                    grad_kernel.data[static_cast<std::size_t>(i * patch + p)] +=
                        gv * colmat.data[static_cast<std::size_t>(p * cols_n + j)];
                }
            }
        }
        float* gc = grad_cols.data.data() + b * patch * cols_n;
        for (std::int64_t i = 0; i < g.out_c; ++i) {
            for (std::int64_t p = 0; p < patch; ++p) {
                const float kv = kernel_flat.data[static_cast<std::size_t>(i * patch + p)];
                if (kv == 0.0f) continue;
                const float* grow = go.data.data() + i * cols_n;
                float* crow = gc + p * cols_n;
                for (std::int64_t j = 0; j < cols_n; ++j) {
                    crow[j] += kv * grow[j];
                }
            }
        }
    }
    Conv2dGrads grads;
    grads.grad_input = col2im(grad_cols, g);
    grads.grad_kernel = std::move(grad_kernel);
    return grads;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                            const Tensor& kernel, std::int64_t stride,
                            std::int64_t pad) {
    std::int64_t out_c, in_c, kh, kw;
    const Tensor flat = flatten_kernel(kernel, out_c, in_c, kh, kw);
    const ConvGeometry g = conv_geometry(input.shape, out_c, in_c, kh, kw, stride, pad);
    Conv2dGrads grads = conv2d_backward_flat(grad_out, input, flat, g);
    grads.grad_kernel.shape = kernel.shape;
    if (input.rank() == 3) {
        grads.grad_input.shape = {g.in_c, g.in_h, g.in_w};
    }
    return grads;
}

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits,
                                        const std::vector<int>& labels) {
    if (logits.rank() != 2) throw DimensionError("softmax_cross_entropy expects [B,K] logits");
    const std::int64_t batch = logits.dim(0), classes = logits.dim(1);
    if (static_cast<std::int64_t>(labels.size()) != batch) {
        throw DimensionError("label count does not match batch size");
    }
    SoftmaxXentResult res;
    res.grad_logits = Tensor::zeros(logits.shape);
    double loss_sum = 0.0;
    const float inv_b = 1.0f / static_cast<float>(batch);
    for (std::int64_t b = 0; b < batch; ++b) {
        const int label = labels[static_cast<std::size_t>(b)];
        if (label < 0 || label >= classes) {
            throw InputError("label " + std::to_string(label) + " out of range [0," +
                             std::to_string(classes) + ")");
        }
        const float* row = logits.data.data() + b * classes;
        float mx = row[0];
        for (std::int64_t k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (std::int64_t k = 0; k < classes; ++k) {
            denom += std::exp(static_cast<double>(row[k] - mx));
        }
        loss_sum += std::log(denom) - static_cast<double>(row[label] - mx);
        float* grow = res.grad_logits.data.data() + b * classes;
        for (std::int64_t k = 0; k < classes; ++k) {
            const double p = std::exp(static_cast<double>(row[k] - mx)) / denom;
            grow[k] = static_cast<float>(p) * inv_b;
        }
        grow[label] -= inv_b;
    }
    res.loss = loss_sum / static_cast<double>(batch);
    return res;
}

void sgd_step(Tensor& param, const Tensor& grad, OptimizerState& state) {
    if (!param.same_shape(grad)) throw DimensionError("sgd_step shape mismatch");
    if (state.velocity.numel() == 0) {
        state.velocity = Tensor::zeros(param.shape);
    } else if (!state.velocity.same_shape(param)) {
        throw DimensionError("sgd_step velocity shape mismatch");
    }
    if (!grad.all_finite()) throw NumericError("non-finite gradient in sgd_step");
    const float mu = state.momentum;
    const float lr = state.learning_rate;
    float* p = param.data.data();
    float* v = state.velocity.data.data();
    const float* g = grad.data.data();
    const std::size_t n = param.data.size();
    if (state.nesterov) {
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = mu * v[i] + g[i];
            p[i] -= lr * (mu * v[i] + g[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = mu * v[i] + g[i];
            p[i] -= lr * v[i];
        }
    }
}

}  // namespace adaptcl

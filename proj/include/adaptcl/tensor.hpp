#pragma once

#include <cstdint>
#include <vector>

namespace adaptcl {

/// Dense row-major float32 array tagged with its shape. The only numeric
/// carrier in the project. All kernels below iterate in a fixed order so
/// results are bit-reproducible across runs.
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<std::int64_t> shape_, std::vector<float> data_);

    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, float value);

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    std::size_t rank() const { return shape.size(); }
    std::int64_t dim(std::size_t i) const { return shape[i]; }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    float& at2(std::int64_t r, std::int64_t c) {
        return data[static_cast<std::size_t>(r * shape[1] + c)];
    }
    float at2(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r * shape[1] + c)];
    }

    bool all_finite() const;
    void fill(float v);
};

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);

/// Standard product of a [m x k] by a [k x n] matrix, fixed i-k-j loop order.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise product; shapes must agree.
Tensor hadamard(const Tensor& a, const Tensor& b);

struct ConvGeometry {
    std::int64_t batch, in_c, in_h, in_w;
    std::int64_t out_c, kh, kw;
    std::int64_t stride, pad;
    std::int64_t out_h, out_w;
};

/// Validates (H + 2*pad - kh) / stride + 1 is a positive integer for both
/// spatial dims; throws ConfigError otherwise.
ConvGeometry conv_geometry(const std::vector<std::int64_t>& input_shape,
                           std::int64_t out_c, std::int64_t in_c,
                           std::int64_t kh, std::int64_t kw,
                           std::int64_t stride, std::int64_t pad);

/// Unfolds input [B, C, H, W] into patch columns [B, C*kh*kw, OH*OW].
Tensor im2col(const Tensor& input, const ConvGeometry& g);
/// Scatter-adds patch columns back to an image gradient [B, C, H, W].
Tensor col2im(const Tensor& cols, const ConvGeometry& g);

/// Cross-correlation (no kernel flip). Accepts input [B, C, H, W] or a single
/// sample [C, H, W]; kernel may be [Co, Ci, kh, kw] or pre-flattened
/// [Co, Ci*kh*kw] with dims given by the geometry. Kernels are flattened to a
/// matrix and applied with matmul, so dense and convolutional layers share a
/// single (maskable) weight-matrix path.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                      std::int64_t stride, std::int64_t pad);

struct Conv2dGrads {
    Tensor grad_input;
    Tensor grad_kernel;  // same shape as the kernel that was passed in
};

/// Exact gradients of conv2d_forward. Recomputes the patch matrix from the
/// cached input (no column cache is kept between passes).
Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                            const Tensor& kernel, std::int64_t stride,
                            std::int64_t pad);

/// Flat-kernel variants used by the layer stack: kernel is the 2-D matrix
/// [Co, Ci*kh*kw] and the geometry carries the spatial dims.
Tensor conv2d_forward_flat(const Tensor& input, const Tensor& kernel_flat,
                           const ConvGeometry& g);
Conv2dGrads conv2d_backward_flat(const Tensor& grad_out, const Tensor& input,
                                 const Tensor& kernel_flat,
                                 const ConvGeometry& g);

struct SoftmaxXentResult {
    double loss = 0.0;            // mean over the batch, accumulated in f64
    Tensor grad_logits;           // (softmax - onehot) / B
};

/// Numerically stabilized softmax cross-entropy over logits [B, K].
/// Labels must lie in [0, K).
SoftmaxXentResult softmax_cross_entropy(const Tensor& logits,
                                        const std::vector<int>& labels);

/// Velocity plus hyperparameters for one parameter tensor.
struct OptimizerState {
    Tensor velocity;
    float learning_rate = 0.001f;
    float momentum = 0.9f;
    bool nesterov = true;
};

/// v <- mu*v + g; update = mu*v + g when nesterov, else v;
/// param <- param - lr*update. Throws NumericError on a non-finite gradient.
void sgd_step(Tensor& param, const Tensor& grad, OptimizerState& state);

}  // namespace adaptcl

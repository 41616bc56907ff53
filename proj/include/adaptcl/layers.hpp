#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adaptcl/rng.hpp"
#include "adaptcl/tensor.hpp"

namespace adaptcl {

enum class LayerKind { dense, conv, maxpool, relu, tanh, batchnorm, flatten };

const char* layer_kind_name(LayerKind k);

/// Weight matrix plus the per-row trainable threshold and the two binary
/// masks that drive pruning and freezing. Convolution kernels live here in
/// flattened [out_channels, in_channels*kh*kw] form so dense and conv layers
/// share one masked-matrix path. Masks are stored as 0/1 floats; they are
/// bit-packed only at the checkpoint boundary.
struct MaskedLayerState {
    Tensor weight;       // [rows, cols]
    Tensor threshold;    // [rows]
    Tensor prune_mask;   // [rows, cols], entries in {0,1}
    Tensor freeze_mask;  // [rows, cols], entries in {0,1}, monotone across datasets

    std::int64_t rows() const { return weight.dim(0); }
    std::int64_t cols() const { return weight.dim(1); }
};

/// Handle to one trainable tensor. `is_threshold` marks pruning thresholds,
/// which train with the rest but do not count as model parameters.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
    bool is_threshold = false;
};

class Layer {
  public:
    virtual ~Layer() = default;
    virtual LayerKind kind() const = 0;
    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    /// Train-mode forward retains the caches backward needs; eval mode does not.
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    /// Consumes the cached forward; throws StateError without one.
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual void collect_params(std::vector<ParamRef>& out);
    virtual MaskedLayerState* masked_state() { return nullptr; }
    const MaskedLayerState* masked_state() const {
        return const_cast<Layer*>(this)->masked_state();
    }
    /// Model parameters only (weights, biases, batchnorm affine); thresholds
    /// and masks are bookkeeping, not parameters.
    virtual std::int64_t param_count() const { return 0; }
    virtual void zero_grad() {}

  protected:
    std::string name_;
};

class DenseLayer final : public Layer {
  public:
    DenseLayer(std::int64_t in_dim, std::int64_t out_dim, bool with_bias, Rng& init_rng);

    LayerKind kind() const override { return LayerKind::dense; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    MaskedLayerState* masked_state() override { return &state_; }
    std::int64_t param_count() const override;
    void zero_grad() override;

    /// When true, forward multiplies by weight .* prune_mask and backward
    /// routes gradients through the step-function estimator into both the
    /// weight and the threshold. When false the layer is a plain dense layer.
    bool pruning_active = false;

    std::int64_t in_dim() const { return in_dim_; }
    std::int64_t out_dim() const { return out_dim_; }
    bool has_bias() const { return with_bias_; }

    Tensor bias;       // [out_dim], empty when with_bias == false
    Tensor grad_weight, grad_bias, grad_threshold;

  private:
    std::int64_t in_dim_, out_dim_;
    bool with_bias_;
    MaskedLayerState state_;
    Tensor cached_input_;
    bool has_cache_ = false;
};

class ConvLayer final : public Layer {
  public:
    ConvLayer(std::int64_t in_c, std::int64_t out_c, std::int64_t kh, std::int64_t kw,
              std::int64_t stride, std::int64_t pad, Rng& init_rng);

    LayerKind kind() const override { return LayerKind::conv; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    MaskedLayerState* masked_state() override { return &state_; }
    std::int64_t param_count() const override;
    void zero_grad() override;

    bool pruning_active = false;

    std::int64_t in_c() const { return in_c_; }
    std::int64_t out_c() const { return out_c_; }
    std::int64_t kh() const { return kh_; }
    std::int64_t kw() const { return kw_; }
    std::int64_t stride() const { return stride_; }
    std::int64_t pad() const { return pad_; }

    Tensor bias;  // [out_c]
    Tensor grad_weight, grad_bias, grad_threshold;

  private:
    std::int64_t in_c_, out_c_, kh_, kw_, stride_, pad_;
    MaskedLayerState state_;
    Tensor cached_input_;
    bool has_cache_ = false;
};

class MaxPoolLayer final : public Layer {
  public:
    MaxPoolLayer(std::int64_t size, std::int64_t stride);
    LayerKind kind() const override { return LayerKind::maxpool; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

  private:
    std::int64_t size_, stride_;
    std::vector<std::int64_t> argmax_;
    std::vector<std::int64_t> in_shape_;
    bool has_cache_ = false;
};

class ReluLayer final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::relu; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

  private:
    Tensor cached_input_;
    bool has_cache_ = false;
};

class TanhLayer final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::tanh; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

  private:
    Tensor cached_output_;
    bool has_cache_ = false;
};

class FlattenLayer final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::flatten; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

  private:
    std::vector<std::int64_t> in_shape_;
    bool has_cache_ = false;
};

/// Per-channel batch normalization over [B, C, H, W]. Never maskable. Once
/// `frozen` is set, all four state tensors are immutable and the running
/// statistics are used even in train mode.
class BatchNormLayer final : public Layer {
  public:
    explicit BatchNormLayer(std::int64_t channels);
    LayerKind kind() const override { return LayerKind::batchnorm; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    std::int64_t param_count() const override { return 2 * channels_; }
    void zero_grad() override;

    Tensor gain, bias, running_mean, running_var;
    Tensor grad_gain, grad_bias;
    bool frozen = false;
    float eps = 1e-5f;
    float running_momentum = 0.1f;

  private:
    std::int64_t channels_;
    Tensor cached_input_, cached_xhat_;
    Tensor batch_mean_, batch_var_;
    bool has_cache_ = false;
};

/// Ordered layer stack with a single shared output head: the last layer
/// produces [B, head_classes] logits regardless of which dataset a batch
/// comes from.
class Network {
  public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    void add(std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& batch, bool train);
    /// Backpropagates grad_logits through the stack; fills per-layer grads.
    void backward(const Tensor& grad_logits);

    std::vector<ParamRef> parameters();
    std::vector<Layer*> maskable_layers();
    std::vector<const Layer*> maskable_layers() const;
    void zero_grad();
    void set_pruning_active(bool active);

    std::int64_t count_params() const;
    /// Weights with (freeze OR prune) = 1 across maskable layers, plus every
    /// non-maskable model parameter.
    std::int64_t count_used() const;

    std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

    int head_classes = 0;
    std::vector<std::int64_t> input_shape;  // [C, H, W]

  private:
    std::vector<std::unique_ptr<Layer>> layers_;
    bool last_forward_train_ = false;
};

/// conv(6@5x5) -> pool2 -> conv(16@5x5) -> pool2 -> flatten -> 400-120 ->
/// 120-84 -> 84-classes with Tanh activations; 61,706 parameters at the
/// default 1x32x32/10 configuration.
Network build_lenet5(std::uint64_t seed, int classes = 10);

/// Small convnet for 8x8 synthetic tasks.
Network build_toy_cnn(std::uint64_t seed, int in_h, int in_w, int classes);

/// Two-layer MLP for 8x8 synthetic tasks.
Network build_toy_mlp(std::uint64_t seed, int in_h, int in_w, int classes);

}  // namespace adaptcl

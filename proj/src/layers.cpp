#include "adaptcl/layers.hpp"

#include <cmath>
#include <limits>

#include "adaptcl/errors.hpp"
#include "adaptcl/pruning.hpp"

namespace adaptcl {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv: return "conv";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::relu: return "relu";
        case LayerKind::tanh: return "tanh";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

void Layer::collect_params(std::vector<ParamRef>&) {}

namespace {

// Kaiming-uniform fan-in: U(-sqrt(6/fan_in), sqrt(6/fan_in)); biases zero.
void init_weight(Tensor& w, std::int64_t fan_in, Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

void require_cache(bool has_cache, const char* who) {
    if (!has_cache) {
        throw StateError(std::string(who) + ": backward called without a cached train-mode forward");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(std::int64_t in_dim, std::int64_t out_dim, bool with_bias,
                       Rng& init_rng)
    : in_dim_(in_dim), out_dim_(out_dim), with_bias_(with_bias) {
    state_.weight = Tensor::zeros({out_dim, in_dim});
    init_weight(state_.weight, in_dim, init_rng);
    state_.threshold = Tensor::zeros({out_dim});
    state_.prune_mask = Tensor::full({out_dim, in_dim}, 1.0f);
    state_.freeze_mask = Tensor::zeros({out_dim, in_dim});
    if (with_bias_) bias = Tensor::zeros({out_dim});
    zero_grad();
}

std::int64_t DenseLayer::param_count() const {
    return in_dim_ * out_dim_ + (with_bias_ ? out_dim_ : 0);
}

void DenseLayer::zero_grad() {
    grad_weight = Tensor::zeros({out_dim_, in_dim_});
    if (with_bias_) grad_bias = Tensor::zeros({out_dim_});
    grad_threshold = Tensor::zeros({out_dim_});
}

void DenseLayer::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".weight", &state_.weight, &grad_weight, false});
    if (with_bias_) out.push_back({name_ + ".bias", &bias, &grad_bias, false});
    out.push_back({name_ + ".threshold", &state_.threshold, &grad_threshold, true});
}

Tensor DenseLayer::forward(const Tensor& x, bool train) {
    if (x.rank() != 2 || x.dim(1) != in_dim_) {
        throw DimensionError(name_ + ": dense input must be [B," + std::to_string(in_dim_) + "]");
    }
    const Tensor& w_eff = pruning_active ? hadamard(state_.weight, state_.prune_mask)
                                         : state_.weight;
    const std::int64_t batch = x.dim(0);
    // y = x * W^T + b
    Tensor out = Tensor::zeros({batch, out_dim_});
    const float* px = x.data.data();
    const float* pw = w_eff.data.data();
    float* po = out.data.data();
    for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t o = 0; o < out_dim_; ++o) {
            float acc = with_bias_ ? bias.data[static_cast<std::size_t>(o)] : 0.0f;
            const float* xrow = px + b * in_dim_;
            const float* wrow = pw + o * in_dim_;
            for (std::int64_t i = 0; i < in_dim_; ++i) acc += xrow[i] * wrow[i];
            po[b * out_dim_ + o] = acc;
        }
    }
    if (train) {
        cached_input_ = x;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor DenseLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "dense");
    const std::int64_t batch = cached_input_.dim(0);
    if (grad_out.rank() != 2 || grad_out.dim(0) != batch || grad_out.dim(1) != out_dim_) {
        throw DimensionError(name_ + ": grad_out shape mismatch in dense backward");
    }
    // grad wrt the effective weight: g^T * x
    Tensor grad_w_eff = Tensor::zeros({out_dim_, in_dim_});
    for (std::int64_t b = 0; b < batch; ++b) {
        const float* grow = grad_out.data.data() + b * out_dim_;
        const float* xrow = cached_input_.data.data() + b * in_dim_;
        for (std::int64_t o = 0; o < out_dim_; ++o) {
            const float g = grow[o];
            if (g == 0.0f) continue;
            float* wrow = grad_w_eff.data.data() + o * in_dim_;
            for (std::int64_t i = 0; i < in_dim_; ++i) wrow[i] += g * xrow[i];
        }
    }
    if (with_bias_) {
        for (std::int64_t b = 0; b < batch; ++b) {
            const float* grow = grad_out.data.data() + b * out_dim_;
            for (std::int64_t o = 0; o < out_dim_; ++o) {
                grad_bias.data[static_cast<std::size_t>(o)] += grow[o];
            }
        }
    }
    const Tensor w_eff = pruning_active ? hadamard(state_.weight, state_.prune_mask)
                                        : state_.weight;
    Tensor grad_in = Tensor::zeros(cached_input_.shape);
    for (std::int64_t b = 0; b < batch; ++b) {
        const float* grow = grad_out.data.data() + b * out_dim_;
        float* xrow = grad_in.data.data() + b * in_dim_;
        for (std::int64_t o = 0; o < out_dim_; ++o) {
            const float g = grow[o];
            if (g == 0.0f) continue;
            const float* wrow = w_eff.data.data() + o * in_dim_;
            for (std::int64_t i = 0; i < in_dim_; ++i) xrow[i] += g * wrow[i];
        }
    }
    if (pruning_active) {
        MaskedBackwardResult mb = masked_backward(grad_w_eff, state_.weight,
                                                  state_.threshold, state_.prune_mask,
                                                  state_.freeze_mask);
        for (std::size_t i = 0; i < grad_weight.data.size(); ++i)
            grad_weight.data[i] += mb.grad_weight.data[i];
        for (std::size_t i = 0; i < grad_threshold.data.size(); ++i)
            grad_threshold.data[i] += mb.grad_threshold.data[i];
    } else {
        for (std::size_t i = 0; i < grad_weight.data.size(); ++i)
            grad_weight.data[i] += grad_w_eff.data[i];
    }
    has_cache_ = false;
    return grad_in;
}

// ---------------------------------------------------------------------------
// ConvLayer

ConvLayer::ConvLayer(std::int64_t in_c, std::int64_t out_c, std::int64_t kh,
                     std::int64_t kw, std::int64_t stride, std::int64_t pad,
                     Rng& init_rng)
    : in_c_(in_c), out_c_(out_c), kh_(kh), kw_(kw), stride_(stride), pad_(pad) {
    const std::int64_t patch = in_c * kh * kw;
    state_.weight = Tensor::zeros({out_c, patch});
    init_weight(state_.weight, patch, init_rng);
    state_.threshold = Tensor::zeros({out_c});
    state_.prune_mask = Tensor::full({out_c, patch}, 1.0f);
    state_.freeze_mask = Tensor::zeros({out_c, patch});
    bias = Tensor::zeros({out_c});
    zero_grad();
}

std::int64_t ConvLayer::param_count() const {
    return out_c_ * in_c_ * kh_ * kw_ + out_c_;
}

void ConvLayer::zero_grad() {
    grad_weight = Tensor::zeros(state_.weight.shape);
    grad_bias = Tensor::zeros({out_c_});
    grad_threshold = Tensor::zeros({out_c_});
}

void ConvLayer::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".weight", &state_.weight, &grad_weight, false});
    out.push_back({name_ + ".bias", &bias, &grad_bias, false});
    out.push_back({name_ + ".threshold", &state_.threshold, &grad_threshold, true});
}

Tensor ConvLayer::forward(const Tensor& x, bool train) {
    const ConvGeometry g = conv_geometry(x.shape, out_c_, in_c_, kh_, kw_, stride_, pad_);
    const Tensor w_eff = pruning_active ? hadamard(state_.weight, state_.prune_mask)
                                        : state_.weight;
    Tensor out = conv2d_forward_flat(x, w_eff, g);
    float* po = out.data.data();
    const std::int64_t plane = g.out_h * g.out_w;
    for (std::int64_t b = 0; b < g.batch; ++b) {
        for (std::int64_t c = 0; c < out_c_; ++c) {
            const float bv = bias.data[static_cast<std::size_t>(c)];
            float* p = po + (b * out_c_ + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) p[i] += bv;
        }
    }
    if (train) {
        cached_input_ = x;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor ConvLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "conv");
    const ConvGeometry g = conv_geometry(cached_input_.shape, out_c_, in_c_, kh_, kw_,
                                         stride_, pad_);
    const Tensor w_eff = pruning_active ? hadamard(state_.weight, state_.prune_mask)
                                        : state_.weight;
    Conv2dGrads grads = conv2d_backward_flat(grad_out, cached_input_, w_eff, g);
    const std::int64_t plane = g.out_h * g.out_w;
    for (std::int64_t b = 0; b < g.batch; ++b) {
        for (std::int64_t c = 0; c < out_c_; ++c) {
            const float* p = grad_out.data.data() + (b * out_c_ + c) * plane;
            float acc = 0.0f;
            for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
            grad_bias.data[static_cast<std::size_t>(c)] += acc;
        }
    }
    if (pruning_active) {
        MaskedBackwardResult mb = masked_backward(grads.grad_kernel, state_.weight,
                                                  state_.threshold, state_.prune_mask,
                                                  state_.freeze_mask);
        for (std::size_t i = 0; i < grad_weight.data.size(); ++i)
            grad_weight.data[i] += mb.grad_weight.data[i];
        for (std::size_t i = 0; i < grad_threshold.data.size(); ++i)
            grad_threshold.data[i] += mb.grad_threshold.data[i];
    } else {
        for (std::size_t i = 0; i < grad_weight.data.size(); ++i)
            grad_weight.data[i] += grads.grad_kernel.data[i];
    }
    has_cache_ = false;
    return std::move(grads.grad_input);
}

// ---------------------------------------------------------------------------
// MaxPoolLayer

MaxPoolLayer::MaxPoolLayer(std::int64_t size, std::int64_t stride)
    : size_(size), stride_(stride) {}

Tensor MaxPoolLayer::forward(const Tensor& x, bool train) {
    if (x.rank() != 4) throw DimensionError("maxpool input must be [B,C,H,W]");
    const std::int64_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    if ((h - size_) % stride_ != 0 || (w - size_) % stride_ != 0) {
        throw ConfigError("maxpool output extent is not an integer");
    }
    const std::int64_t oh = (h - size_) / stride_ + 1;
    const std::int64_t ow = (w - size_) / stride_ + 1;
    Tensor out = Tensor::zeros({batch, ch, oh, ow});
    argmax_.assign(static_cast<std::size_t>(out.numel()), 0);
    const float* in = x.data.data();
    float* po = out.data.data();
    std::int64_t oi = 0;
    for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t c = 0; c < ch; ++c) {
            const float* plane = in + (b * ch + c) * h * w;
            for (std::int64_t oy = 0; oy < oh; ++oy) {
                for (std::int64_t ox = 0; ox < ow; ++ox, ++oi) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int64_t best_idx = 0;
                    for (std::int64_t ky = 0; ky < size_; ++ky) {
                        for (std::int64_t kx = 0; kx < size_; ++kx) {
                            const std::int64_t iy = oy * stride_ + ky;
                            const std::int64_t ix = ox * stride_ + kx;
                            const float v = plane[iy * w + ix];
                            if (v > best) {  // ties keep the first (scan order)
                                best = v;
                                best_idx = (b * ch + c) * h * w + iy * w + ix;
                            }
                        }
                    }
                    po[oi] = best;
                    argmax_[static_cast<std::size_t>(oi)] = best_idx;
                }
            }
        }
    }
    if (train) {
        in_shape_ = x.shape;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor MaxPoolLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "maxpool");
    Tensor grad_in = Tensor::zeros(in_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i) {
        grad_in.data[static_cast<std::size_t>(argmax_[i])] += grad_out.data[i];
    }
    has_cache_ = false;
    return grad_in;
}

// ---------------------------------------------------------------------------
// Activations / flatten

Tensor ReluLayer::forward(const Tensor& x, bool train) {
    Tensor out = x;
    for (auto& v : out.data) v = v > 0.0f ? v : 0.0f;
    if (train) {
        cached_input_ = x;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor ReluLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "relu");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
        if (cached_input_.data[i] <= 0.0f) grad_in.data[i] = 0.0f;
    }
    has_cache_ = false;
    return grad_in;
}

Tensor TanhLayer::forward(const Tensor& x, bool train) {
    Tensor out = x;
    for (auto& v : out.data) v = std::tanh(v);
    if (train) {
        cached_output_ = out;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor TanhLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "tanh");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
        const float y = cached_output_.data[i];
        grad_in.data[i] *= 1.0f - y * y;
    }
    has_cache_ = false;
    return grad_in;
}

Tensor FlattenLayer::forward(const Tensor& x, bool train) {
    if (x.rank() < 2) throw DimensionError("flatten input must have a batch dimension");
    Tensor out = x;
    std::int64_t rest = 1;
    for (std::size_t i = 1; i < x.rank(); ++i) rest *= x.dim(i);
    out.shape = {x.dim(0), rest};
    if (train) {
        in_shape_ = x.shape;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor FlattenLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "flatten");
    Tensor grad_in = grad_out;
    grad_in.shape = in_shape_;
    has_cache_ = false;
    return grad_in;
}

// ---------------------------------------------------------------------------
// BatchNormLayer

BatchNormLayer::BatchNormLayer(std::int64_t channels) : channels_(channels) {
    gain = Tensor::full({channels}, 1.0f);
    bias = Tensor::zeros({channels});
    running_mean = Tensor::zeros({channels});
    running_var = Tensor::full({channels}, 1.0f);
    zero_grad();
}

void BatchNormLayer::zero_grad() {
    grad_gain = Tensor::zeros({channels_});
    grad_bias = Tensor::zeros({channels_});
}

void BatchNormLayer::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".gain", &gain, &grad_gain, false});
    out.push_back({name_ + ".bias", &bias, &grad_bias, false});
}

Tensor BatchNormLayer::forward(const Tensor& x, bool train) {
    if (x.rank() != 4 || x.dim(1) != channels_) {
        throw DimensionError("batchnorm input must be [B,C,H,W] with matching channels");
    }
    const std::int64_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::int64_t plane = h * w;
    const std::int64_t per_channel = batch * plane;
    const bool use_batch_stats = train && !frozen;

    Tensor mean({channels_}, std::vector<float>(static_cast<std::size_t>(channels_)));
    Tensor var({channels_}, std::vector<float>(static_cast<std::size_t>(channels_)));
    if (use_batch_stats) {
        for (std::int64_t c = 0; c < channels_; ++c) {
            double acc = 0.0;
            for (std::int64_t b = 0; b < batch; ++b) {
                const float* p = x.data.data() + (b * channels_ + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
            }
            const double m = acc / static_cast<double>(per_channel);
            double vacc = 0.0;
            for (std::int64_t b = 0; b < batch; ++b) {
                const float* p = x.data.data() + (b * channels_ + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                    const double d = p[i] - m;
                    vacc += d * d;
                }
            }
            mean.data[static_cast<std::size_t>(c)] = static_cast<float>(m);
            var.data[static_cast<std::size_t>(c)] =
                static_cast<float>(vacc / static_cast<double>(per_channel));
        }
        for (std::int64_t c = 0; c < channels_; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            running_mean.data[ci] = (1.0f - running_momentum) * running_mean.data[ci] +
                                    running_momentum * mean.data[ci];
            running_var.data[ci] = (1.0f - running_momentum) * running_var.data[ci] +
                                   running_momentum * var.data[ci];
        }
    } else {
        mean = running_mean;
        var = running_var;
    }

    Tensor out = Tensor::zeros(x.shape);
    Tensor xhat = Tensor::zeros(x.shape);
    for (std::int64_t c = 0; c < channels_; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const float m = mean.data[ci];
        const float inv_std = 1.0f / std::sqrt(var.data[ci] + eps);
        const float g = gain.data[ci];
        const float bv = bias.data[ci];
        for (std::int64_t b = 0; b < batch; ++b) {
            const float* p = x.data.data() + (b * channels_ + c) * plane;
            float* ph = xhat.data.data() + (b * channels_ + c) * plane;
            float* po = out.data.data() + (b * channels_ + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                ph[i] = (p[i] - m) * inv_std;
                po[i] = g * ph[i] + bv;
            }
        }
    }
    if (train) {
        cached_input_ = x;
        cached_xhat_ = xhat;
        batch_mean_ = mean;
        batch_var_ = var;
        has_cache_ = true;
    } else {
        has_cache_ = false;
    }
    return out;
}

Tensor BatchNormLayer::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "batchnorm");
    const std::int64_t batch = cached_input_.dim(0), h = cached_input_.dim(2),
                       w = cached_input_.dim(3);
    const std::int64_t plane = h * w;
    const std::int64_t n = batch * plane;
    Tensor grad_in = Tensor::zeros(cached_input_.shape);

    for (std::int64_t c = 0; c < channels_; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const float inv_std = 1.0f / std::sqrt(batch_var_.data[ci] + eps);
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::int64_t b = 0; b < batch; ++b) {
            const float* pg = grad_out.data.data() + (b * channels_ + c) * plane;
            const float* ph = cached_xhat_.data.data() + (b * channels_ + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                sum_g += pg[i];
                sum_gx += static_cast<double>(pg[i]) * ph[i];
            }
        }
        if (!frozen) {
            grad_gain.data[ci] += static_cast<float>(sum_gx);
            grad_bias.data[ci] += static_cast<float>(sum_g);
            const float g = gain.data[ci];
            const float inv_n = 1.0f / static_cast<float>(n);
            for (std::int64_t b = 0; b < batch; ++b) {
                const float* pg = grad_out.data.data() + (b * channels_ + c) * plane;
                const float* ph = cached_xhat_.data.data() + (b * channels_ + c) * plane;
                float* pi = grad_in.data.data() + (b * channels_ + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                    pi[i] = g * inv_std * inv_n *
                            (static_cast<float>(n) * pg[i] - static_cast<float>(sum_g) -
                             ph[i] * static_cast<float>(sum_gx));
                }
            }
        } else {
            // Frozen: statistics are constants, so dL/dx = g * inv_std * dL/dy.
            const float g = gain.data[ci];
            for (std::int64_t b = 0; b < batch; ++b) {
                const float* pg = grad_out.data.data() + (b * channels_ + c) * plane;
                float* pi = grad_in.data.data() + (b * channels_ + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) pi[i] = g * inv_std * pg[i];
            }
        }
    }
    has_cache_ = false;
    return grad_in;
}

// ---------------------------------------------------------------------------
// Network

void Network::add(std::unique_ptr<Layer> layer) {
    layer->set_name(std::string(layer_kind_name(layer->kind())) +
                    std::to_string(layers_.size()));
    layers_.push_back(std::move(layer));
}

Tensor Network::forward(const Tensor& batch, bool train) {
    Tensor x = batch;
    for (auto& layer : layers_) x = layer->forward(x, train);
    last_forward_train_ = train;
    return x;
}

void Network::backward(const Tensor& grad_logits) {
    if (!last_forward_train_) {
        throw StateError("network backward requires a preceding train-mode forward");
    }
    Tensor g = grad_logits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
    last_forward_train_ = false;
}

std::vector<ParamRef> Network::parameters() {
    std::vector<ParamRef> out;
    for (auto& layer : layers_) layer->collect_params(out);
    return out;
}

std::vector<Layer*> Network::maskable_layers() {
    std::vector<Layer*> out;
    for (auto& layer : layers_) {
        if (layer->masked_state() != nullptr) out.push_back(layer.get());
    }
    return out;
}

std::vector<const Layer*> Network::maskable_layers() const {
    std::vector<const Layer*> out;
    for (const auto& layer : layers_) {
        if (layer->masked_state() != nullptr) out.push_back(layer.get());
    }
    return out;
}

void Network::zero_grad() {
    for (auto& layer : layers_) layer->zero_grad();
}

void Network::set_pruning_active(bool active) {
    for (auto& layer : layers_) {
        if (auto* d = dynamic_cast<DenseLayer*>(layer.get())) d->pruning_active = active;
        if (auto* c = dynamic_cast<ConvLayer*>(layer.get())) c->pruning_active = active;
    }
}

std::int64_t Network::count_params() const {
    std::int64_t n = 0;
    for (const auto& layer : layers_) n += layer->param_count();
    return n;
}

std::int64_t Network::count_used() const {
    std::int64_t used = 0;
    for (const auto& layer : layers_) {
        if (const MaskedLayerState* st = layer->masked_state()) {
            used += active_weight_count(st->prune_mask, st->freeze_mask);
            used += layer->param_count() - st->weight.numel();  // biases
        } else {
            used += layer->param_count();
        }
    }
    return used;
}

// ---------------------------------------------------------------------------
// Builders

Network build_lenet5(std::uint64_t seed, int classes) {
    Network net;
    net.head_classes = classes;
    net.input_shape = {1, 32, 32};
    {
        Rng r(seed, "init/conv0");
        net.add(std::make_unique<ConvLayer>(1, 6, 5, 5, 1, 0, r));
    }
    net.add(std::make_unique<TanhLayer>());
    net.add(std::make_unique<MaxPoolLayer>(2, 2));
    {
        Rng r(seed, "init/conv3");
        net.add(std::make_unique<ConvLayer>(6, 16, 5, 5, 1, 0, r));
    }
    net.add(std::make_unique<TanhLayer>());
    net.add(std::make_unique<MaxPoolLayer>(2, 2));
    net.add(std::make_unique<FlattenLayer>());
    {
        Rng r(seed, "init/dense7");
        net.add(std::make_unique<DenseLayer>(400, 120, true, r));
    }
    net.add(std::make_unique<TanhLayer>());
    {
        Rng r(seed, "init/dense9");
        net.add(std::make_unique<DenseLayer>(120, 84, true, r));
    }
    net.add(std::make_unique<TanhLayer>());
    {
        Rng r(seed, "init/dense11");
        net.add(std::make_unique<DenseLayer>(84, classes, true, r));
    }
    return net;
}

Network build_toy_cnn(std::uint64_t seed, int in_h, int in_w, int classes) {
    Network net;
    net.head_classes = classes;
    net.input_shape = {1, in_h, in_w};
    {
        Rng r(seed, "init/conv0");
        net.add(std::make_unique<ConvLayer>(1, 12, 3, 3, 1, 1, r));
    }
    net.add(std::make_unique<ReluLayer>());
    net.add(std::make_unique<MaxPoolLayer>(2, 2));
    {
        Rng r(seed, "init/conv3");
        net.add(std::make_unique<ConvLayer>(12, 24, 3, 3, 1, 1, r));
    }
    net.add(std::make_unique<ReluLayer>());
    net.add(std::make_unique<MaxPoolLayer>(2, 2));
    net.add(std::make_unique<FlattenLayer>());
    const std::int64_t flat = 24 * (in_h / 4) * (in_w / 4);
    {
        Rng r(seed, "init/dense7");
        net.add(std::make_unique<DenseLayer>(flat, 64, true, r));
    }
    net.add(std::make_unique<ReluLayer>());
    {
        Rng r(seed, "init/dense9");
        net.add(std::make_unique<DenseLayer>(64, classes, true, r));
    }
    return net;
}

Network build_toy_mlp(std::uint64_t seed, int in_h, int in_w, int classes) {
    Network net;
    net.head_classes = classes;
    net.input_shape = {1, in_h, in_w};
    net.add(std::make_unique<FlattenLayer>());
    const std::int64_t flat = static_cast<std::int64_t>(in_h) * in_w;
    {
        Rng r(seed, "init/dense1");
        net.add(std::make_unique<DenseLayer>(flat, 48, true, r));
    }
    net.add(std::make_unique<ReluLayer>());
    {
        Rng r(seed, "init/dense3");
        net.add(std::make_unique<DenseLayer>(48, classes, true, r));
    }
    return net;
}

}  // namespace adaptcl

#include "adaptcl/pruning.hpp"

#include <cmath>

#include "adaptcl/errors.hpp"
#include "adaptcl/layers.hpp"

namespace adaptcl {

Tensor compute_prune_mask(const Tensor& weight, const Tensor& threshold,
                          const Tensor& freeze) {
    if (weight.rank() != 2) throw DimensionError("compute_prune_mask expects a [rows,cols] weight");
    const std::int64_t rows = weight.dim(0), cols = weight.dim(1);
    if (threshold.numel() != rows) throw DimensionError("threshold length must equal weight rows");
    const bool frozen = freeze.numel() != 0;
    if (frozen && !freeze.same_shape(weight)) throw DimensionError("freeze mask shape mismatch");

    Tensor mask = Tensor::zeros(weight.shape);
    for (std::int64_t i = 0; i < rows; ++i) {
        const float t = threshold.data[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < cols; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i * cols + j);
            if (frozen && freeze.data[idx] != 0.0f) {
                mask.data[idx] = 1.0f;
            } else {
                mask.data[idx] = step(std::fabs(weight.data[idx]) - t);
            }
        }
    }
    return mask;
}

MaskedBackwardResult masked_backward(const Tensor& grad_weight_eff,
                                     const Tensor& weight, const Tensor& threshold,
                                     const Tensor& prune_mask, const Tensor& freeze) {
    if (!grad_weight_eff.same_shape(weight) || !prune_mask.same_shape(weight)) {
        throw DimensionError("masked_backward shape mismatch");
    }
    const std::int64_t rows = weight.dim(0), cols = weight.dim(1);
    if (threshold.numel() != rows) throw DimensionError("threshold length must equal weight rows");
    const bool frozen = freeze.numel() != 0;

    MaskedBackwardResult res;
    res.grad_weight = Tensor::zeros(weight.shape);
    res.grad_threshold = Tensor::zeros({rows});
    for (std::int64_t i = 0; i < rows; ++i) {
        const float t = threshold.data[static_cast<std::size_t>(i)];
        float gt = 0.0f;
        for (std::int64_t j = 0; j < cols; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i * cols + j);
            const float g = grad_weight_eff.data[idx];
            if (frozen && freeze.data[idx] != 0.0f) {
                res.grad_weight.data[idx] = g;
                continue;
            }
            const float w = weight.data[idx];
            const float h = estimator_h(std::fabs(w) - t);
            const float sgn = w < 0.0f ? -1.0f : 1.0f;
            res.grad_weight.data[idx] = g * (prune_mask.data[idx] + w * h * sgn);
            gt -= g * w * h;
        }
        res.grad_threshold.data[static_cast<std::size_t>(i)] = gt;
    }
    return res;
}

SparseRegResult sparse_reg(const Tensor& threshold) {
    SparseRegResult res;
    res.grad_threshold = Tensor::zeros(threshold.shape);
    for (std::size_t i = 0; i < threshold.data.size(); ++i) {
        const float e = std::exp(-threshold.data[i]);
        res.value += static_cast<double>(e);
        res.grad_threshold.data[i] = -e;
    }
    return res;
}

std::int64_t active_weight_count(const Tensor& prune_mask, const Tensor& freeze_mask) {
    std::int64_t active = 0;
    const bool frozen = freeze_mask.numel() != 0;
    for (std::size_t i = 0; i < prune_mask.data.size(); ++i) {
        if (prune_mask.data[i] != 0.0f || (frozen && freeze_mask.data[i] != 0.0f)) ++active;
    }
    return active;
}

double remaining_ratio(const Tensor& prune_mask, const Tensor& freeze_mask) {
    const std::int64_t total = prune_mask.numel();
    if (total == 0) return 1.0;
    return static_cast<double>(active_weight_count(prune_mask, freeze_mask)) /
           static_cast<double>(total);
}

double remaining_ratio(const Network& net) {
    std::int64_t active = 0, total = 0;
    for (const Layer* layer : net.maskable_layers()) {
        const MaskedLayerState* st = layer->masked_state();
        active += active_weight_count(st->prune_mask, st->freeze_mask);
        total += st->weight.numel();
    }
    if (total == 0) return 1.0;
    return static_cast<double>(active) / static_cast<double>(total);
}

}  // namespace adaptcl

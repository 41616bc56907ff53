#pragma once

#include <cstdint>

#include "adaptcl/tensor.hpp"

namespace adaptcl {

class Network;

/// Unit step: 0 for x < 0, 1 for x >= 0.
inline float step(float x) { return x < 0.0f ? 0.0f : 1.0f; }

/// Long-tailed surrogate for the step function's derivative:
/// 2 - 4|x| on |x| <= 0.4, 0.4 on 0.4 < |x| <= 1, 0 beyond.
inline float estimator_h(float x) {
    const float a = x < 0.0f ? -x : x;
    if (a <= 0.4f) return 2.0f - 4.0f * a;
    if (a <= 1.0f) return 0.4f;
    return 0.0f;
}

/// prune_mask[i][j] = step(|W[i][j]| - t[i]) for free entries; entries with
/// freeze[i][j] = 1 are pinned active. Pass an empty freeze tensor for none.
Tensor compute_prune_mask(const Tensor& weight, const Tensor& threshold,
                          const Tensor& freeze);

struct MaskedBackwardResult {
    Tensor grad_weight;     // same shape as W
    Tensor grad_threshold;  // [rows]
};

/// Chain rule through W_eff = W * S(|W| - t) with the estimator H standing in
/// for dS/dx. For a free entry with upstream gradient g on W_eff:
///   dW = g * (mask + W * H(|W| - t) * sign(W))
///   dt[i] -= g * W * H(|W| - t)
/// Frozen entries pass g through untouched (their mask is pinned to 1) and
/// contribute nothing to the threshold gradient.
MaskedBackwardResult masked_backward(const Tensor& grad_weight_eff,
                                     const Tensor& weight, const Tensor& threshold,
                                     const Tensor& prune_mask, const Tensor& freeze);

struct SparseRegResult {
    double value = 0.0;    // sum over rows of exp(-t_i), accumulated in f64
    Tensor grad_threshold; // d/dt_i = -exp(-t_i)
};

/// Regularizer for one threshold vector. The experiment loss adds
/// alpha * (sum over maskable layers of this value).
SparseRegResult sparse_reg(const Tensor& threshold);

/// Fraction of weights active under (prune OR freeze) for one layer state.
double remaining_ratio(const Tensor& prune_mask, const Tensor& freeze_mask);
/// Same fraction pooled over every maskable layer of the network.
double remaining_ratio(const Network& net);

/// Number of active weights, (prune OR freeze) = 1, in one layer state.
std::int64_t active_weight_count(const Tensor& prune_mask, const Tensor& freeze_mask);

}  // namespace adaptcl

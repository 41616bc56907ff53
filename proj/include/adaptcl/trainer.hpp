#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adaptcl/datasets.hpp"
#include "adaptcl/layers.hpp"
#include "adaptcl/metrics.hpp"
#include "adaptcl/tensor.hpp"

namespace adaptcl {

struct TrainConfig {
    /// Scale of the sparse regularizer. Non-positive means "derive from the
    /// rule of thumb": alpha = 1 / (steps_per_epoch * epochs_per_dataset).
    double alpha = -1.0;
    float learning_rate = 0.001f;
    float momentum = 0.9f;
    bool nesterov = true;
    int epochs_per_dataset = 20;
    int batch_size = 32;
    std::uint64_t seed = 5;
    /// When false the dynamic-pruning machinery is fully disabled and the
    /// sequence degenerates to plain finetuning (no masks, no freezing).
    bool pruning = true;

    void validate() const;
    double effective_alpha(std::int64_t steps_per_epoch) const;
};

/// One record per completed epoch.
struct EpochRecord {
    int dataset_idx = 0;
    int epoch = 0;  // global, 1-based across the whole sequence
    std::vector<double> task_accuracy;  // one entry per task in the sequence
    double remaining_ratio = 1.0;
    double train_loss = 0.0;
};

/// Per-layer active-weight fraction after a dataset completes.
struct LayerUsageRecord {
    int dataset_idx = 0;
    int layer_idx = 0;
    std::string layer_name;
    double used_fraction = 1.0;
};

struct SequenceRunState {
    Network network;
    std::vector<EpochRecord> history;
    std::vector<LayerUsageRecord> layer_usage;
};

/// Instrumentation points; every hook may be empty. `on_step_end` fires after
/// the optimizer update and mask refresh of each step, so the stored prune
/// masks are exactly step(|W| - t) at that moment.
struct TrainerHooks {
    std::function<void(Network&, int dataset_idx, int epoch, std::int64_t step)> on_step_end;
    std::function<void(Network&, int dataset_idx, int epoch)> on_epoch_end;
    std::function<void(Network&, int dataset_idx)> on_dataset_end;
};

/// Method-specific behaviour injected into the shared minibatch loop. Every
/// method (including the baselines) runs through the identical loop; a method
/// whose hooks contribute nothing is bit-identical to plain SGD finetuning.
struct StepPlugin {
    /// Runs after backward, before the optimizer step. May adjust gradients
    /// (regularizers, freezing); returns the extra loss term for logging.
    std::function<double(Network&)> post_backward;
    /// Runs after the optimizer step (e.g. prune-mask refresh).
    std::function<void(Network&)> post_step;
    /// Remaining ratio reported in the epoch history (defaults to 1.0).
    std::function<double(Network&)> ratio;
};

/// Minibatch SGD with one velocity per trainable tensor. Rebuilt at every
/// dataset boundary so stale momentum can never move a frozen weight.
class SgdOptimizer {
  public:
    SgdOptimizer(std::vector<ParamRef> params, float lr, float momentum, bool nesterov);
    void step();

  private:
    std::vector<ParamRef> params_;
    std::vector<OptimizerState> states_;
};

/// Returns grad with every frozen coordinate zeroed; free coordinates pass
/// through unchanged. An empty freeze mask is a no-op.
Tensor apply_freeze(const Tensor& grad, const Tensor& freeze_mask);

/// Elementwise OR; the freeze-mask union update. Monotone and idempotent.
Tensor update_freeze_mask(const Tensor& freeze_mask, const Tensor& prune_mask);

/// Recomputes every maskable layer's prune mask from its current weight,
/// threshold and freeze mask.
void refresh_prune_masks(Network& net);

/// Zeroes thresholds for every maskable layer (start-of-dataset reset) and
/// refreshes the masks.
void reset_thresholds(Network& net);

/// Hard-zeroes every weight with (freeze OR prune) = 0 so mask-free inference
/// equals masked inference exactly, and freezes batch-norm state (if any).
/// The underlying values of pruned weights are retained during training and
/// only dropped here, at the dataset boundary.
void finalize_dataset(Network& net);

/// Shared minibatch loop: shuffle (keyed by global epoch), forward, task
/// loss, backward, plugin adjustments, SGD step. Appends one EpochRecord per
/// epoch, evaluating on every task's test set. Throws NumericError with
/// dataset/epoch/step on a non-finite loss.
void train_dataset_loop(SequenceRunState& state, const TaskSequence& tasks,
                        int dataset_idx, const TrainConfig& config, int epoch_base,
                        int epochs, const StepPlugin& plugin,
                        const TrainerHooks& hooks);

/// The adaptive flow for one dataset: per-step mask refresh, masked forward,
/// task loss + alpha * sparse regularizer, estimator-routed backward,
/// freeze-masked gradients, SGD update.
void train_on_dataset(SequenceRunState& state, const TaskSequence& tasks,
                      int dataset_idx, const TrainConfig& config, int epoch_base,
                      const TrainerHooks& hooks = {});

struct SequenceResult {
    SequenceRunState state;
    ResultMatrix matrix;
};

/// Full continual pass: capture random-init accuracies, then for each
/// dataset reset thresholds, train, fold the prune mask into the freeze
/// mask, finalize, and evaluate on every test set. With config.pruning ==
/// false this is exactly plain SGD finetuning across the sequence.
SequenceResult run_sequence(Network net, const TaskSequence& tasks,
                            const TrainConfig& config, const TrainerHooks& hooks = {});

/// Shared validation for every method: non-empty sequence, uniform shapes
/// and class counts matching the network head.
void validate_sequence(const Network& net, const TaskSequence& tasks);

}  // namespace adaptcl

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "adaptcl/trainer.hpp"

namespace adaptcl {

/// Plain finetuning across the sequence: no masks, no penalties, no freezing.
SequenceResult train_sgd_naive(Network net, const TaskSequence& tasks,
                               const TrainConfig& config,
                               const TrainerHooks& hooks = {});

/// Empirical Fisher diagonal for one consolidated dataset, plus the weight
/// anchor taken at consolidation time.
struct FisherState {
    std::vector<Tensor> fisher;   // aligned with model (non-threshold) params
    std::vector<Tensor> anchor;
    double lambda = 1.0;
};

/// Mean over the first n_samples of the squared gradient of the ground-truth
/// label's log-probability. n_samples larger than the dataset is clamped
/// with a warning on stderr. Read-only with respect to training state.
FisherState consolidate_ewc(Network& net, const PreparedDataset& train,
                            std::int64_t n_samples, double lambda);

struct EwcPenalty {
    double loss = 0.0;
    std::vector<Tensor> grads;  // aligned with model (non-threshold) params
};

/// Sum over states of (lambda/2) * sum_k fisher_k * (w_k - anchor_k)^2 and
/// its gradient.
EwcPenalty ewc_penalty(Network& net, const std::vector<FisherState>& states);

struct EwcConfig {
    double lambda = 1.0;
    std::int64_t fisher_samples = 500;
};

/// Quadratic-penalty regularization: after each dataset the Fisher diagonal
/// is consolidated and added as one more penalty term. With lambda == 0 the
/// trajectory is bit-identical to train_sgd_naive under the same seed.
SequenceResult train_ewc(Network net, const TaskSequence& tasks,
                         const TrainConfig& config, const EwcConfig& ewc,
                         const TrainerHooks& hooks = {});

struct PackNetConfig {
    double prune_fraction = 1.0 / 3.0;
    int retrain_epochs = 10;
};

/// Accumulated keep-masks per maskable layer.
struct PackNetState {
    std::vector<Tensor> keep;        // 1 = frozen survivor
    std::vector<Tensor> pruned_now;  // 1 = zeroed this dataset, free next
    double prune_fraction = 1.0 / 3.0;
    int retrain_epochs = 10;

    std::int64_t keep_count() const;
};

/// Domain-incremental PackNet: per dataset, train the free weights, magnitude-
/// prune floor(prune_fraction * free) of them per layer (ties broken by lowest
/// flat index), retrain the survivors for retrain_epochs (taken out of the
/// per-dataset epoch budget), then freeze the survivors. Inference is
/// mask-free on the dense weights. Throws CapacityError once no free weights
/// remain.
SequenceResult train_packnet_star(Network net, const TaskSequence& tasks,
                                  const TrainConfig& config, const PackNetConfig& pn,
                                  const TrainerHooks& hooks = {});

/// Separate model per task: no transfer, no forgetting. Only the diagonal of
/// the result matrix is meaningful; row i holds model i's accuracies.
SequenceResult train_sml(const std::function<Network()>& make_network,
                         const TaskSequence& tasks, const TrainConfig& config,
                         const TrainerHooks& hooks = {});

}  // namespace adaptcl

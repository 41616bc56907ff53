#include "adaptcl/trainer.hpp"

#include <cmath>

#include "adaptcl/errors.hpp"
#include "adaptcl/pruning.hpp"
#include "adaptcl/rng.hpp"

namespace adaptcl {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0f) throw ConfigError("learning_rate must be positive");
    if (momentum < 0.0f || momentum >= 1.0f) throw ConfigError("momentum must be in [0,1)");
    if (epochs_per_dataset <= 0) throw ConfigError("epochs_per_dataset must be positive");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
}

double TrainConfig::effective_alpha(std::int64_t steps_per_epoch) const {
    if (alpha >= 0.0) return alpha;  // explicit zero disables the regularizer
    const double iterations =
        static_cast<double>(steps_per_epoch) * static_cast<double>(epochs_per_dataset);
    return 1.0 / iterations;
}

SgdOptimizer::SgdOptimizer(std::vector<ParamRef> params, float lr, float momentum,
                           bool nesterov)
    : params_(std::move(params)) {
    states_.reserve(params_.size());
    for (const ParamRef& p : params_) {
        OptimizerState st;
        st.velocity = Tensor::zeros(p.value->shape);
        st.learning_rate = lr;
        st.momentum = momentum;
        st.nesterov = nesterov;
        states_.push_back(std::move(st));
    }
}

void SgdOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        sgd_step(*params_[i].value, *params_[i].grad, states_[i]);
    }
}

Tensor apply_freeze(const Tensor& grad, const Tensor& freeze_mask) {
    if (freeze_mask.numel() == 0) return grad;
    if (!grad.same_shape(freeze_mask)) throw DimensionError("apply_freeze shape mismatch");
    Tensor out = grad;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (freeze_mask.data[i] != 0.0f) out.data[i] = 0.0f;
    }
    return out;
}

Tensor update_freeze_mask(const Tensor& freeze_mask, const Tensor& prune_mask) {
    if (!freeze_mask.same_shape(prune_mask)) {
        throw DimensionError("update_freeze_mask shape mismatch");
    }
    Tensor out = freeze_mask;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (freeze_mask.data[i] != 0.0f || prune_mask.data[i] != 0.0f) ? 1.0f : 0.0f;
    }
    return out;
}

void refresh_prune_masks(Network& net) {
    for (Layer* layer : net.maskable_layers()) {
        MaskedLayerState* st = layer->masked_state();
        st->prune_mask = compute_prune_mask(st->weight, st->threshold, st->freeze_mask);
    }
}

void reset_thresholds(Network& net) {
    for (Layer* layer : net.maskable_layers()) {
        layer->masked_state()->threshold.fill(0.0f);
    }
    refresh_prune_masks(net);
}

void finalize_dataset(Network& net) {
    for (auto& layer : net.layers()) {
        if (MaskedLayerState* st = layer->masked_state()) {
            for (std::size_t i = 0; i < st->weight.data.size(); ++i) {
                if (st->prune_mask.data[i] == 0.0f && st->freeze_mask.data[i] == 0.0f) {
                    st->weight.data[i] = 0.0f;
                }
            }
        }
        if (auto* bn = dynamic_cast<BatchNormLayer*>(layer.get())) {
            bn->frozen = true;
        }
    }
}

void validate_sequence(const Network& net, const TaskSequence& tasks) {
    if (tasks.tasks.empty()) throw ConfigError("task sequence is empty");
    for (const Task& task : tasks.tasks) {
        if (task.train.size() == 0 || task.test.size() == 0) {
            throw ConfigError("task '" + task.name + "' has an empty split");
        }
        if (task.train.raw.height != tasks.image_h || task.train.raw.width != tasks.image_w) {
            throw ConfigError("task '" + task.name + "' image shape differs from the sequence");
        }
        if (task.train.raw.classes > net.head_classes) {
            throw ConfigError("task '" + task.name + "' needs " +
                              std::to_string(task.train.raw.classes) +
                              " classes but the head has " +
                              std::to_string(net.head_classes));
        }
    }
}

void train_dataset_loop(SequenceRunState& state, const TaskSequence& tasks,
                        int dataset_idx, const TrainConfig& config, int epoch_base,
                        int epochs, const StepPlugin& plugin, const TrainerHooks& hooks) {
    config.validate();
    Network& net = state.network;
    const Task& task = tasks.tasks[static_cast<std::size_t>(dataset_idx)];
    const std::int64_t n = task.train.size();
    const std::int64_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;

    SgdOptimizer optimizer(net.parameters(), config.learning_rate, config.momentum,
                           config.nesterov);

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::vector<int> labels;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const int global_epoch = epoch_base + epoch + 1;
        Rng shuffle_rng(config.seed, "shuffle/d" + std::to_string(dataset_idx) + "/e" +
                                         std::to_string(global_epoch));
        shuffle_rng.shuffle(order);

        double loss_acc = 0.0;
        std::int64_t step = 0;
        for (std::int64_t first = 0; first < n; first += config.batch_size, ++step) {
            const std::int64_t count = std::min<std::int64_t>(config.batch_size, n - first);
            const Tensor batch = task.train.batch(order, first, count, &labels);

            const Tensor logits = net.forward(batch, /*train=*/true);
            SoftmaxXentResult xent = softmax_cross_entropy(logits, labels);

            net.zero_grad();
            net.backward(xent.grad_logits);

            double extra_loss = 0.0;
            if (plugin.post_backward) extra_loss = plugin.post_backward(net);

            const double loss = xent.loss + extra_loss;
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite loss at dataset " + std::to_string(dataset_idx) +
                                   ", epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(step));
            }
            loss_acc += loss;

            optimizer.step();
            if (plugin.post_step) plugin.post_step(net);
            if (hooks.on_step_end) hooks.on_step_end(net, dataset_idx, global_epoch, step);
        }

        EpochRecord rec;
        rec.dataset_idx = dataset_idx;
        rec.epoch = global_epoch;
        rec.train_loss = loss_acc / static_cast<double>(steps_per_epoch);
        rec.remaining_ratio = plugin.ratio ? plugin.ratio(net) : 1.0;
        for (const Task& t : tasks.tasks) {
            rec.task_accuracy.push_back(accuracy(net, t.test));
        }
        state.history.push_back(std::move(rec));
        if (hooks.on_epoch_end) hooks.on_epoch_end(net, dataset_idx, global_epoch);
    }
}

namespace {

StepPlugin make_adaptive_plugin(double alpha) {
    StepPlugin plugin;
    plugin.post_backward = [alpha](Network& net) {
        double reg_value = 0.0;
        for (Layer* layer : net.maskable_layers()) {
            MaskedLayerState* st = layer->masked_state();
            Tensor* grad_w = nullptr;
            Tensor* grad_t = nullptr;
            if (auto* d = dynamic_cast<DenseLayer*>(layer)) {
                grad_w = &d->grad_weight;
                grad_t = &d->grad_threshold;
            } else if (auto* c = dynamic_cast<ConvLayer*>(layer)) {
                grad_w = &c->grad_weight;
                grad_t = &c->grad_threshold;
            }
            SparseRegResult reg = sparse_reg(st->threshold);
            reg_value += reg.value;
            for (std::size_t i = 0; i < grad_t->data.size(); ++i) {
                grad_t->data[i] += static_cast<float>(alpha) * reg.grad_threshold.data[i];
            }
            *grad_w = apply_freeze(*grad_w, st->freeze_mask);
        }
        return alpha * reg_value;
    };
    plugin.post_step = [](Network& net) { refresh_prune_masks(net); };
    plugin.ratio = [](Network& net) { return remaining_ratio(net); };
    return plugin;
}

}  // namespace

void train_on_dataset(SequenceRunState& state, const TaskSequence& tasks,
                      int dataset_idx, const TrainConfig& config, int epoch_base,
                      const TrainerHooks& hooks) {
    const Task& task = tasks.tasks[static_cast<std::size_t>(dataset_idx)];
    const std::int64_t steps_per_epoch =
        (task.train.size() + config.batch_size - 1) / config.batch_size;
    const double alpha = config.effective_alpha(steps_per_epoch);
    train_dataset_loop(state, tasks, dataset_idx, config, epoch_base,
                       config.epochs_per_dataset, make_adaptive_plugin(alpha), hooks);
}

SequenceResult run_sequence(Network net, const TaskSequence& tasks,
                            const TrainConfig& config, const TrainerHooks& hooks) {
    config.validate();
    validate_sequence(net, tasks);
    const int t_count = static_cast<int>(tasks.size());

    SequenceResult result;
    result.matrix = ResultMatrix(t_count);
    result.state.network = std::move(net);
    Network& network = result.state.network;
    network.set_pruning_active(config.pruning);
    if (config.pruning) reset_thresholds(network);

    // Random-init accuracies, captured before any training.
    for (int j = 0; j < t_count; ++j) {
        result.matrix.b_bar[static_cast<std::size_t>(j)] =
            accuracy(network, tasks.tasks[static_cast<std::size_t>(j)].test);
    }

    for (int d = 0; d < t_count; ++d) {
        const int epoch_base = d * config.epochs_per_dataset;
        if (config.pruning) {
            reset_thresholds(network);
            train_on_dataset(result.state, tasks, d, config, epoch_base, hooks);
            for (Layer* layer : network.maskable_layers()) {
                MaskedLayerState* st = layer->masked_state();
                st->freeze_mask = update_freeze_mask(st->freeze_mask, st->prune_mask);
            }
            finalize_dataset(network);
        } else {
            train_dataset_loop(result.state, tasks, d, config, epoch_base,
                               config.epochs_per_dataset, StepPlugin{}, hooks);
        }

        for (int j = 0; j < t_count; ++j) {
            result.matrix.at(d, j) =
                accuracy(network, tasks.tasks[static_cast<std::size_t>(j)].test);
        }
        int layer_idx = 0;
        for (Layer* layer : network.maskable_layers()) {
            const MaskedLayerState* st = layer->masked_state();
            result.state.layer_usage.push_back(
                {d, layer_idx++, layer->name(),
                 config.pruning ? remaining_ratio(st->prune_mask, st->freeze_mask) : 1.0});
        }
        if (hooks.on_dataset_end) hooks.on_dataset_end(network, d);
    }
    return result;
}

}  // namespace adaptcl

#include "adaptcl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "adaptcl/errors.hpp"
#include "adaptcl/pruning.hpp"

namespace adaptcl {

namespace {

std::vector<ParamRef> model_params(Network& net) {
    std::vector<ParamRef> out;
    for (ParamRef& p : net.parameters()) {
        if (!p.is_threshold) out.push_back(p);
    }
    return out;
}

void eval_row(ResultMatrix& m, int row, Network& net, const TaskSequence& tasks) {
    for (int j = 0; j < m.t; ++j) {
        m.at(row, j) = accuracy(net, tasks.tasks[static_cast<std::size_t>(j)].test);
    }
}

void record_b_bar(ResultMatrix& m, Network& net, const TaskSequence& tasks) {
    for (int j = 0; j < m.t; ++j) {
        m.b_bar[static_cast<std::size_t>(j)] =
            accuracy(net, tasks.tasks[static_cast<std::size_t>(j)].test);
    }
}

void fill_layer_usage(SequenceRunState& state, Network& net, int dataset_idx,
                      double fraction_override = -1.0) {
    int layer_idx = 0;
    for (Layer* layer : net.maskable_layers()) {
        const MaskedLayerState* st = layer->masked_state();
        const double frac = fraction_override >= 0.0
                                ? fraction_override
                                : remaining_ratio(st->prune_mask, st->freeze_mask);
        state.layer_usage.push_back({dataset_idx, layer_idx++, layer->name(), frac});
    }
}

}  // namespace

SequenceResult train_sgd_naive(Network net, const TaskSequence& tasks,
                               const TrainConfig& config, const TrainerHooks& hooks) {
    TrainConfig cfg = config;
    cfg.pruning = false;
    cfg.alpha = 0.0;
    return run_sequence(std::move(net), tasks, cfg, hooks);
}

FisherState consolidate_ewc(Network& net, const PreparedDataset& train,
                            std::int64_t n_samples, double lambda) {
    std::int64_t n = n_samples;
    if (n > train.size()) {
        std::cerr << "ewc: clamping fisher sample count " << n << " to dataset size "
                  << train.size() << "\n";
        n = train.size();
    }
    if (n <= 0) throw InputError("ewc: fisher sample count must be positive");

    auto params = model_params(net);
    std::vector<std::vector<double>> acc(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        acc[p].assign(params[p].value->data.size(), 0.0);
    }

    std::vector<std::int64_t> order(static_cast<std::size_t>(train.size()));
    for (std::int64_t i = 0; i < train.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::vector<int> labels;
    for (std::int64_t i = 0; i < n; ++i) {
        const Tensor x = train.batch(order, i, 1, &labels);
        const Tensor logits = net.forward(x, /*train=*/true);
        // d(-log p(y|x))/dlogits for a single sample; squaring drops the sign,
        // so this equals the squared gradient of the log-likelihood.
        SoftmaxXentResult xent = softmax_cross_entropy(logits, labels);
        net.zero_grad();
        net.backward(xent.grad_logits);
        for (std::size_t p = 0; p < params.size(); ++p) {
            const auto& g = params[p].grad->data;
            for (std::size_t k = 0; k < g.size(); ++k) {
                acc[p][k] += static_cast<double>(g[k]) * static_cast<double>(g[k]);
            }
        }
    }
    net.zero_grad();

    FisherState state;
    state.lambda = lambda;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor f = Tensor::zeros(params[p].value->shape);
        for (std::size_t k = 0; k < f.data.size(); ++k) {
            f.data[k] = static_cast<float>(acc[p][k] / static_cast<double>(n));
        }
        state.fisher.push_back(std::move(f));
        state.anchor.push_back(*params[p].value);
    }
    return state;
}

EwcPenalty ewc_penalty(Network& net, const std::vector<FisherState>& states) {
    auto params = model_params(net);
    EwcPenalty out;
    for (const ParamRef& p : params) out.grads.push_back(Tensor::zeros(p.value->shape));
    for (const FisherState& st : states) {
        if (st.fisher.size() != params.size()) {
            throw DimensionError("ewc_penalty: state does not match network parameters");
        }
        const float lam = static_cast<float>(st.lambda);
        for (std::size_t p = 0; p < params.size(); ++p) {
            const auto& w = params[p].value->data;
            const auto& a = st.anchor[p].data;
            const auto& f = st.fisher[p].data;
            auto& g = out.grads[p].data;
            for (std::size_t k = 0; k < w.size(); ++k) {
                const float d = w[k] - a[k];
                out.loss += 0.5 * static_cast<double>(lam) * static_cast<double>(f[k]) *
                            static_cast<double>(d) * static_cast<double>(d);
                g[k] += lam * f[k] * d;
            }
        }
    }
    return out;
}

SequenceResult train_ewc(Network net, const TaskSequence& tasks,
                         const TrainConfig& config, const EwcConfig& ewc,
                         const TrainerHooks& hooks) {
    TrainConfig cfg = config;
    cfg.validate();
    validate_sequence(net, tasks);
    const int t_count = static_cast<int>(tasks.size());

    SequenceResult result;
    result.matrix = ResultMatrix(t_count);
    result.state.network = std::move(net);
    Network& network = result.state.network;
    network.set_pruning_active(false);

    record_b_bar(result.matrix, network, tasks);

    std::vector<FisherState> consolidated;
    StepPlugin plugin;
    plugin.post_backward = [&](Network& n) -> double {
        if (ewc.lambda == 0.0 || consolidated.empty()) return 0.0;
        EwcPenalty pen = ewc_penalty(n, consolidated);
        auto params = model_params(n);
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& g = params[p].grad->data;
            for (std::size_t k = 0; k < g.size(); ++k) g[k] += pen.grads[p].data[k];
        }
        return pen.loss;
    };

    for (int d = 0; d < t_count; ++d) {
        train_dataset_loop(result.state, tasks, d, cfg, d * cfg.epochs_per_dataset,
                           cfg.epochs_per_dataset, plugin, hooks);
        eval_row(result.matrix, d, network, tasks);
        fill_layer_usage(result.state, network, d, 1.0);
        if (d + 1 < t_count) {
            consolidated.push_back(consolidate_ewc(
                network, tasks.tasks[static_cast<std::size_t>(d)].train,
                ewc.fisher_samples, ewc.lambda));
        }
        if (hooks.on_dataset_end) hooks.on_dataset_end(network, d);
    }
    return result;
}

std::int64_t PackNetState::keep_count() const {
    std::int64_t n = 0;
    for (const Tensor& k : keep) {
        for (const float v : k.data) n += v != 0.0f ? 1 : 0;
    }
    return n;
}

SequenceResult train_packnet_star(Network net, const TaskSequence& tasks,
                                  const TrainConfig& config, const PackNetConfig& pn,
                                  const TrainerHooks& hooks) {
    TrainConfig cfg = config;
    cfg.validate();
    validate_sequence(net, tasks);
    if (pn.prune_fraction <= 0.0 || pn.prune_fraction >= 1.0) {
        throw ConfigError("prune_fraction must lie in (0,1)");
    }
    if (pn.retrain_epochs <= 0 || pn.retrain_epochs >= cfg.epochs_per_dataset) {
        throw ConfigError("retrain_epochs must be positive and below epochs_per_dataset");
    }
    const int t_count = static_cast<int>(tasks.size());

    SequenceResult result;
    result.matrix = ResultMatrix(t_count);
    result.state.network = std::move(net);
    Network& network = result.state.network;
    network.set_pruning_active(false);

    record_b_bar(result.matrix, network, tasks);

    auto layers = network.maskable_layers();
    PackNetState st;
    st.prune_fraction = pn.prune_fraction;
    st.retrain_epochs = pn.retrain_epochs;
    for (Layer* layer : layers) {
        st.keep.push_back(Tensor::zeros(layer->masked_state()->weight.shape));
        st.pruned_now.push_back(Tensor::zeros(layer->masked_state()->weight.shape));
    }

    // Gradients are blocked on frozen survivors and, during retraining, on the
    // weights pruned this round (which are pinned at zero).
    bool block_pruned_now = false;
    double ratio_now = 1.0;
    StepPlugin plugin;
    plugin.post_backward = [&](Network& n) -> double {
        auto ls = n.maskable_layers();
        for (std::size_t li = 0; li < ls.size(); ++li) {
            Tensor* grad_w = nullptr;
            if (auto* dl = dynamic_cast<DenseLayer*>(ls[li])) grad_w = &dl->grad_weight;
            if (auto* cl = dynamic_cast<ConvLayer*>(ls[li])) grad_w = &cl->grad_weight;
            auto& g = grad_w->data;
            const auto& keep = st.keep[li].data;
            const auto& pruned = st.pruned_now[li].data;
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (keep[k] != 0.0f || (block_pruned_now && pruned[k] != 0.0f)) {
                    g[k] = 0.0f;
                }
            }
        }
        return 0.0;
    };
    plugin.ratio = [&](Network&) { return ratio_now; };

    for (int d = 0; d < t_count; ++d) {
        std::int64_t total_free = 0;
        for (std::size_t li = 0; li < layers.size(); ++li) {
            for (const float v : st.keep[li].data) total_free += v == 0.0f ? 1 : 0;
        }
        if (total_free == 0) {
            throw CapacityError("packnet: free capacity exhausted before dataset " +
                                std::to_string(d));
        }

        const int epoch_base = d * cfg.epochs_per_dataset;
        const int train_epochs = cfg.epochs_per_dataset - pn.retrain_epochs;

        block_pruned_now = false;
        ratio_now = 1.0;
        train_dataset_loop(result.state, tasks, d, cfg, epoch_base, train_epochs,
                           plugin, hooks);

        // Magnitude-prune the lowest prune_fraction of the free weights.
        std::int64_t pruned_total = 0, weight_total = 0;
        for (std::size_t li = 0; li < layers.size(); ++li) {
            MaskedLayerState* ms = layers[li]->masked_state();
            auto& keep = st.keep[li].data;
            auto& pruned = st.pruned_now[li].data;
            std::fill(pruned.begin(), pruned.end(), 0.0f);
            std::vector<std::int64_t> free_idx;
            for (std::size_t k = 0; k < keep.size(); ++k) {
                if (keep[k] == 0.0f) free_idx.push_back(static_cast<std::int64_t>(k));
            }
            const auto n_prune = static_cast<std::int64_t>(
                pn.prune_fraction * static_cast<double>(free_idx.size()));
            std::sort(free_idx.begin(), free_idx.end(),
                      [&](std::int64_t a, std::int64_t b) {
                          const float ma = std::fabs(ms->weight.data[static_cast<std::size_t>(a)]);
                          const float mb = std::fabs(ms->weight.data[static_cast<std::size_t>(b)]);
                          if (ma != mb) return ma < mb;
                          return a < b;
                      });
            for (std::int64_t k = 0; k < n_prune; ++k) {
                const auto idx = static_cast<std::size_t>(free_idx[static_cast<std::size_t>(k)]);
                ms->weight.data[idx] = 0.0f;
                pruned[idx] = 1.0f;
            }
            pruned_total += n_prune;
            weight_total += static_cast<std::int64_t>(keep.size());
        }

        block_pruned_now = true;
        ratio_now = 1.0 - static_cast<double>(pruned_total) / static_cast<double>(weight_total);
        train_dataset_loop(result.state, tasks, d, cfg, epoch_base + train_epochs,
                           pn.retrain_epochs, plugin, hooks);

        // Freeze survivors; the pruned weights stay zero and become the free
        // pool for the next dataset.
        for (std::size_t li = 0; li < layers.size(); ++li) {
            auto& keep = st.keep[li].data;
            const auto& pruned = st.pruned_now[li].data;
            for (std::size_t k = 0; k < keep.size(); ++k) {
                if (keep[k] == 0.0f && pruned[k] == 0.0f) keep[k] = 1.0f;
            }
        }

        eval_row(result.matrix, d, network, tasks);
        fill_layer_usage(result.state, network, d, ratio_now);
        if (hooks.on_dataset_end) hooks.on_dataset_end(network, d);
    }

    // Expose what the final model actually uses through the shared mask
    // accounting: survivors are the active set, everything else is zero.
    for (std::size_t li = 0; li < layers.size(); ++li) {
        MaskedLayerState* ms = layers[li]->masked_state();
        ms->freeze_mask = st.keep[li];
        ms->prune_mask = st.keep[li];
    }
    return result;
}

SequenceResult train_sml(const std::function<Network()>& make_network,
                         const TaskSequence& tasks, const TrainConfig& config,
                         const TrainerHooks& hooks) {
    TrainConfig cfg = config;
    cfg.validate();
    const int t_count = static_cast<int>(tasks.size());

    SequenceResult result;
    result.matrix = ResultMatrix(t_count);

    {
        Network fresh = make_network();
        validate_sequence(fresh, tasks);
        fresh.set_pruning_active(false);
        record_b_bar(result.matrix, fresh, tasks);
    }

    for (int d = 0; d < t_count; ++d) {
        SequenceRunState per_task;
        per_task.network = make_network();
        per_task.network.set_pruning_active(false);
        train_dataset_loop(per_task, tasks, d, cfg, d * cfg.epochs_per_dataset,
                           cfg.epochs_per_dataset, StepPlugin{}, hooks);
        eval_row(result.matrix, d, per_task.network, tasks);
        for (EpochRecord& rec : per_task.history) {
            result.state.history.push_back(std::move(rec));
        }
        fill_layer_usage(result.state, per_task.network, d, 1.0);
        if (hooks.on_dataset_end) hooks.on_dataset_end(per_task.network, d);
        result.state.network = std::move(per_task.network);  // keep the last model
    }
    return result;
}

}  // namespace adaptcl

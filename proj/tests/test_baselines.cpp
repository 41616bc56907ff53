#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "adaptcl/baselines.hpp"
#include "adaptcl/errors.hpp"
#include "adaptcl/layers.hpp"
#include "adaptcl/metrics.hpp"
#include "adaptcl/rng.hpp"

using namespace adaptcl;

namespace {

SyntheticConfig small_synth(int n_tasks) {
    SyntheticConfig cfg;
    cfg.n_tasks = n_tasks;
    cfg.train_per_class = 60;
    cfg.test_per_class = 25;
    cfg.classes = 4;
    cfg.image_size = 8;
    cfg.shift = ShiftKind::strong;
    cfg.seed = 5;
    return cfg;
}

TrainConfig small_train(int epochs) {
    TrainConfig cfg;
    cfg.learning_rate = 0.05f;
    cfg.momentum = 0.9f;
    cfg.nesterov = true;
    cfg.epochs_per_dataset = epochs;
    cfg.batch_size = 32;
    cfg.seed = 5;
    return cfg;
}

bool params_bitwise_equal(Network& a, Network& b) {
    auto pa = a.parameters();
    auto pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const auto& va = pa[i].value->data;
        const auto& vb = pb[i].value->data;
        if (va.size() != vb.size() ||
            std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) != 0) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("naive SGD forgets a strongly shifted earlier task") {
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(10);
    SequenceResult res = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    CHECK(*compute_bwt(res.matrix) <= -10.0);
}

TEST_CASE("naive SGD is deterministic under a fixed seed") {
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(3);
    SequenceResult a = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    SequenceResult b = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    CHECK(a.matrix.r == b.matrix.r);
    CHECK(params_bitwise_equal(a.state.network, b.state.network));
}

TEST_CASE("single task: naive SGD equals the trainer with pruning disabled") {
    const TaskSequence seq = synthetic_sequence(small_synth(1));
    TrainConfig cfg = small_train(4);
    SequenceResult a = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    TrainConfig plain = cfg;
    plain.pruning = false;
    plain.alpha = 0.0;
    SequenceResult b = run_sequence(build_toy_mlp(5, 8, 8, 4), seq, plain);
    CHECK(a.matrix.r == b.matrix.r);
    CHECK(params_bitwise_equal(a.state.network, b.state.network));
}

TEST_CASE("fisher is zero for a saturated model and nonnegative always") {
    const TaskSequence seq = synthetic_sequence(small_synth(1));
    Network net = build_toy_mlp(5, 8, 8, 4);
    net.set_pruning_active(false);

    // Saturate: crank the last dense bias so one logit dominates by ~1e4.
    auto layers = net.maskable_layers();
    auto* last = dynamic_cast<DenseLayer*>(layers.back());
    last->masked_state()->weight.fill(0.0f);
    last->bias.data[0] = 1e4f;

    // All labels must be class 0 for the gradient to vanish: craft a copy.
    PreparedDataset data = seq.tasks[0].train;
    for (auto& l : data.raw.labels) l = 0;
    const FisherState fs = consolidate_ewc(net, data, 30, 1.0);
    for (const Tensor& f : fs.fisher) {
        for (const float v : f.data) {
            CHECK(v >= 0.0f);
            CHECK(v < 1e-12f);
        }
    }
}

TEST_CASE("fisher matches the closed-form logistic gradient on a 2-weight toy") {
    // One dense layer, no bias: logits = [w0*x, w1*x]. For label y the
    // log-likelihood gradient is ((1 - p_y) or -p_k) * x, so the Fisher
    // diagonal is the mean of those squares over the samples.
    Rng r(5, "test/fisher");
    Network net;
    net.head_classes = 2;
    net.input_shape = {1, 1, 1};
    net.add(std::make_unique<FlattenLayer>());
    net.add(std::make_unique<DenseLayer>(1, 2, false, r));
    net.set_pruning_active(false);
    auto* dense = dynamic_cast<DenseLayer*>(net.maskable_layers()[0]);
    const double w0 = 0.8, w1 = -0.4;
    dense->masked_state()->weight = Tensor({2, 1}, {static_cast<float>(w0),
                                                    static_cast<float>(w1)});

    ImageDataset raw;
    raw.n = 4;
    raw.height = 1;
    raw.width = 1;
    raw.classes = 2;
    raw.pixels = {20, 200, 90, 160};
    raw.labels = {0, 1, 1, 0};
    PreparedDataset data;
    data.raw = raw;
    data.stats = compute_norm_stats(raw);

    const FisherState fs = consolidate_ewc(net, data, 4, 1.0);

    double acc0 = 0.0, acc1 = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double x = (raw.pixels[static_cast<std::size_t>(i)] / 255.0 - data.stats.mean) /
                         data.stats.stddev;
        const double e0 = std::exp(w0 * x), e1 = std::exp(w1 * x);
        const double p0 = e0 / (e0 + e1);
        const int y = raw.labels[static_cast<std::size_t>(i)];
        const double g0 = ((y == 0 ? 1.0 : 0.0) - p0) * x;
        const double g1 = ((y == 1 ? 1.0 : 0.0) - (1.0 - p0)) * x;
        acc0 += g0 * g0;
        acc1 += g1 * g1;
    }
    CHECK(fs.fisher[0].data[0] == doctest::Approx(acc0 / 4.0).epsilon(1e-6));
    CHECK(fs.fisher[0].data[1] == doctest::Approx(acc1 / 4.0).epsilon(1e-6));
}

TEST_CASE("fisher sample count clamps to the dataset size") {
    const TaskSequence seq = synthetic_sequence(small_synth(1));
    Network net = build_toy_mlp(5, 8, 8, 4);
    net.set_pruning_active(false);
    const FisherState fs = consolidate_ewc(net, seq.tasks[0].train, 1 << 20, 0.3);
    CHECK(fs.fisher.size() == fs.anchor.size());
}

TEST_CASE("ewc penalty is zero at the anchor and scales linearly in lambda") {
    const TaskSequence seq = synthetic_sequence(small_synth(1));
    Network net = build_toy_mlp(5, 8, 8, 4);
    net.set_pruning_active(false);
    FisherState fs = consolidate_ewc(net, seq.tasks[0].train, 20, 0.5);

    EwcPenalty at_anchor = ewc_penalty(net, {fs});
    CHECK(at_anchor.loss == doctest::Approx(0.0));
    for (const Tensor& g : at_anchor.grads) {
        for (const float v : g.data) CHECK(v == 0.0f);
    }

    // Move the weights, then doubling lambda doubles the penalty.
    for (ParamRef& p : net.parameters()) {
        if (p.is_threshold) continue;
        for (auto& v : p.value->data) v += 0.01f;
    }
    const double base = ewc_penalty(net, {fs}).loss;
    fs.lambda = 1.0;
    const double doubled = ewc_penalty(net, {fs}).loss;
    CHECK(doubled == doctest::Approx(2.0 * base).epsilon(1e-9));
    CHECK(base > 0.0);
}

TEST_CASE("ewc penalty matches an independent formula evaluation") {
    Rng r(5, "test/ewcpen");
    Network net;
    net.head_classes = 2;
    net.input_shape = {1, 2, 2};
    net.add(std::make_unique<FlattenLayer>());
    net.add(std::make_unique<DenseLayer>(4, 2, true, r));
    net.set_pruning_active(false);

    FisherState fs;
    fs.lambda = 0.7;
    auto params = net.parameters();
    double expected = 0.0;
    Rng rng(6, "test/ewcpen2");
    for (ParamRef& p : params) {
        if (p.is_threshold) continue;
        Tensor fisher = Tensor::zeros(p.value->shape);
        Tensor anchor = *p.value;
        for (std::size_t i = 0; i < fisher.data.size(); ++i) {
            fisher.data[i] = rng.uniform(0.0f, 2.0f);
            anchor.data[i] += rng.uniform(-0.5f, 0.5f);
            const double d = p.value->data[i] - anchor.data[i];
            expected += 0.5 * 0.7 * fisher.data[i] * d * d;
        }
        fs.fisher.push_back(std::move(fisher));
        fs.anchor.push_back(std::move(anchor));
    }
    CHECK(ewc_penalty(net, {fs}).loss == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("ewc with lambda zero matches naive SGD bitwise") {
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(3);
    EwcConfig ewc;
    ewc.lambda = 0.0;
    ewc.fisher_samples = 40;
    SequenceResult a = train_ewc(build_toy_mlp(5, 8, 8, 4), seq, cfg, ewc);
    SequenceResult b = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    CHECK(a.matrix.r == b.matrix.r);
    CHECK(params_bitwise_equal(a.state.network, b.state.network));
}

TEST_CASE("ewc with a real penalty diverges from naive SGD") {
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(3);
    EwcConfig ewc;
    ewc.lambda = 1.0;
    ewc.fisher_samples = 40;
    SequenceResult a = train_ewc(build_toy_mlp(5, 8, 8, 4), seq, cfg, ewc);
    SequenceResult b = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    CHECK_FALSE(params_bitwise_equal(a.state.network, b.state.network));
}

TEST_CASE("packnet prunes exactly floor(fraction * free) per layer") {
    SyntheticConfig synth;
    synth.n_tasks = 2;
    synth.train_per_class = 12;
    synth.test_per_class = 6;
    synth.classes = 11;
    synth.image_size = 3;
    synth.seed = 5;
    const TaskSequence seq = synthetic_sequence(synth);

    auto make_net = [] {
        Network net;
        net.head_classes = 11;
        net.input_shape = {1, 3, 3};
        net.add(std::make_unique<FlattenLayer>());
        Rng r(5, "test/pn");
        net.add(std::make_unique<DenseLayer>(9, 11, false, r));
        return net;
    };

    TrainConfig cfg = small_train(12);
    PackNetConfig pn;
    pn.retrain_epochs = 10;

    // One dataset: floor(99/3)=33 pruned, 66 frozen.
    TaskSequence one = seq;
    one.tasks.resize(1);
    SequenceResult r1 = train_packnet_star(make_net(), one, cfg, pn);
    const MaskedLayerState* st = r1.state.network.maskable_layers()[0]->masked_state();
    std::int64_t frozen = 0, zeros = 0;
    for (const float v : st->freeze_mask.data) frozen += v != 0.0f;
    for (const float v : st->weight.data) zeros += v == 0.0f;
    CHECK(frozen == 66);
    CHECK(zeros >= 33);  // the 33 released weights are zero

    // Two datasets: 66 + (33 - floor(33/3)) = 88 frozen.
    SequenceResult r2 = train_packnet_star(make_net(), seq, cfg, pn);
    const MaskedLayerState* st2 = r2.state.network.maskable_layers()[0]->masked_state();
    frozen = 0;
    for (const float v : st2->freeze_mask.data) frozen += v != 0.0f;
    CHECK(frozen == 88);
}

TEST_CASE("packnet frozen weights stay bit-identical across later datasets") {
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(6);
    PackNetConfig pn;
    pn.retrain_epochs = 2;

    std::vector<float> after_d0;
    TrainerHooks hooks;
    hooks.on_dataset_end = [&](Network& net, int d) {
        if (d == 0) {
            for (Layer* layer : net.maskable_layers()) {
                const auto& w = layer->masked_state()->weight.data;
                after_d0.insert(after_d0.end(), w.begin(), w.end());
            }
        }
    };
    SequenceResult res = train_packnet_star(build_toy_mlp(5, 8, 8, 4), seq, cfg, pn, hooks);

    // Survivors of dataset 0 are the entries that were nonzero afterwards.
    std::size_t off = 0;
    for (Layer* layer : res.state.network.maskable_layers()) {
        const auto& w = layer->masked_state()->weight.data;
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (after_d0[off + k] != 0.0f) {
                std::uint32_t a, b;
                std::memcpy(&a, &after_d0[off + k], 4);
                std::memcpy(&b, &w[k], 4);
                CHECK(a == b);
            }
        }
        off += w.size();
    }
}

TEST_CASE("packnet aborts once free capacity is exhausted") {
    SyntheticConfig synth;
    synth.n_tasks = 8;
    synth.train_per_class = 6;
    synth.test_per_class = 3;
    synth.classes = 2;
    synth.image_size = 2;
    synth.seed = 5;
    const TaskSequence seq = synthetic_sequence(synth);

    Network net;
    net.head_classes = 2;
    net.input_shape = {1, 2, 2};
    net.add(std::make_unique<FlattenLayer>());
    Rng r(5, "test/pncap");
    net.add(std::make_unique<DenseLayer>(4, 2, false, r));  // 8 weights only

    TrainConfig cfg = small_train(3);
    PackNetConfig pn;
    pn.prune_fraction = 1.0 / 3.0;
    pn.retrain_epochs = 1;
    CHECK_THROWS_AS(train_packnet_star(std::move(net), seq, cfg, pn), CapacityError);
}

TEST_CASE("packnet rejects a retrain budget that swallows the epoch budget") {
    const TaskSequence seq = synthetic_sequence(small_synth(1));
    TrainConfig cfg = small_train(5);
    PackNetConfig pn;
    pn.retrain_epochs = 5;
    CHECK_THROWS_AS(train_packnet_star(build_toy_mlp(5, 8, 8, 4), seq, cfg, pn),
                    ConfigError);
}

TEST_CASE("sml trains isolated models: diagonal high, deterministic") {
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(8);
    auto factory = [] { return build_toy_mlp(5, 8, 8, 4); };
    SequenceResult a = train_sml(factory, seq, cfg);
    SequenceResult b = train_sml(factory, seq, cfg);
    CHECK(a.matrix.r == b.matrix.r);
    for (int i = 0; i < 2; ++i) CHECK(a.matrix.at(i, i) > 90.0);
}

TEST_CASE("sml per-task accuracy bounds the continual diagonal from above-ish") {
    // With isolated models there is no interference; continual methods on a
    // strong shift should not beat them on their own tasks by any margin.
    const TaskSequence seq = synthetic_sequence(small_synth(2));
    TrainConfig cfg = small_train(8);
    SequenceResult sml = train_sml([] { return build_toy_mlp(5, 8, 8, 4); }, seq, cfg);
    SequenceResult sgd = train_sgd_naive(build_toy_mlp(5, 8, 8, 4), seq, cfg);
    for (int i = 0; i < 2; ++i) {
        CHECK(sml.matrix.at(i, i) >= sgd.matrix.at(i, i) - 1.0);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adaptcl/errors.hpp"
#include "adaptcl/layers.hpp"
#include "adaptcl/rng.hpp"
#include "adaptcl/tensor.hpp"

using namespace adaptcl;

namespace {

Network tiny_net(std::uint64_t seed, bool with_bn = false) {
    // conv 1->2 3x3 pad1 on 1x4x4, pool, flatten, dense 8->3. Under 1k params.
    Network net;
    net.head_classes = 3;
    net.input_shape = {1, 4, 4};
    {
        Rng r(seed, "test/conv");
        net.add(std::make_unique<ConvLayer>(1, 2, 3, 3, 1, 1, r));
    }
    if (with_bn) net.add(std::make_unique<BatchNormLayer>(2));
    net.add(std::make_unique<TanhLayer>());
    net.add(std::make_unique<MaxPoolLayer>(2, 2));
    net.add(std::make_unique<FlattenLayer>());
    {
        Rng r(seed, "test/dense");
        net.add(std::make_unique<DenseLayer>(8, 3, true, r));
    }
    return net;
}

Tensor random_batch(std::uint64_t seed, std::vector<std::int64_t> shape) {
    Rng rng(seed, "test/batch");
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(-1.0f, 1.0f);
    return t;
}

}  // namespace

TEST_CASE("lenet5 parameter count is exactly 61706") {
    const Network net = build_lenet5(5);
    CHECK(net.count_params() == 61706);
}

TEST_CASE("lenet5 per-layer parameter counts") {
    const Network net = build_lenet5(5);
    std::vector<std::int64_t> counts;
    for (const auto& layer : net.layers()) {
        if (layer->param_count() > 0) counts.push_back(layer->param_count());
    }
    CHECK(counts == std::vector<std::int64_t>{156, 2416, 48120, 10164, 850});
}

TEST_CASE("lenet5 forward on a zero image is finite with 10 logits") {
    Network net = build_lenet5(5);
    const Tensor x = Tensor::zeros({1, 1, 32, 32});
    const Tensor logits = net.forward(x, false);
    REQUIRE(logits.shape == std::vector<std::int64_t>{1, 10});
    CHECK(logits.all_finite());
}

TEST_CASE("lenet5 batch forward shape") {
    Network net = build_lenet5(5);
    const Tensor x = random_batch(5, {4, 1, 32, 32});
    const Tensor logits = net.forward(x, false);
    CHECK(logits.shape == std::vector<std::int64_t>{4, 10});
}

TEST_CASE("eval forward is deterministic") {
    Network net = tiny_net(5);
    const Tensor x = random_batch(7, {3, 1, 4, 4});
    const Tensor a = net.forward(x, false);
    const Tensor b = net.forward(x, false);
    CHECK(a.data == b.data);
}

TEST_CASE("train and eval forward agree when no batchnorm is present") {
    Network net = tiny_net(5);
    const Tensor x = random_batch(8, {3, 1, 4, 4});
    const Tensor a = net.forward(x, true);
    const Tensor b = net.forward(x, false);
    CHECK(a.data == b.data);
}

TEST_CASE("backward without a cached forward is a state error") {
    Network net = tiny_net(5);
    const Tensor x = random_batch(9, {2, 1, 4, 4});
    (void)net.forward(x, false);  // eval keeps no caches
    const Tensor g = Tensor::full({2, 3}, 1.0f);
    CHECK_THROWS_AS(net.backward(g), StateError);
}

TEST_CASE("zero grad_logits produce all-zero gradients") {
    Network net = tiny_net(5);
    const Tensor x = random_batch(10, {2, 1, 4, 4});
    (void)net.forward(x, true);
    net.zero_grad();
    net.backward(Tensor::zeros({2, 3}));
    for (ParamRef& p : net.parameters()) {
        for (const float v : p.grad->data) CHECK(v == 0.0f);
    }
}

TEST_CASE("full-network finite-difference spot check") {
    Network net = tiny_net(5);
    const Tensor x = random_batch(11, {4, 1, 4, 4});
    const std::vector<int> labels{0, 2, 1, 1};

    const Tensor logits = net.forward(x, true);
    SoftmaxXentResult xent = softmax_cross_entropy(logits, labels);
    net.zero_grad();
    net.backward(xent.grad_logits);

    auto loss_at = [&](Network& n) {
        const Tensor l = n.forward(x, false);
        return softmax_cross_entropy(l, labels).loss;
    };

    Rng rng(5, "test/fd");
    auto params = net.parameters();
    const float eps = 1e-3f;
    int checked = 0;
    while (checked < 20) {
        auto& p = params[static_cast<std::size_t>(rng.next_index(static_cast<std::int64_t>(params.size())))];
        if (p.is_threshold) continue;  // plain mode: thresholds do not act
        const auto idx = static_cast<std::size_t>(rng.next_index(p.value->numel()));
        const float saved = p.value->data[idx];
        p.value->data[idx] = saved + eps;
        const double lp = loss_at(net);
        p.value->data[idx] = saved - eps;
        const double lm = loss_at(net);
        p.value->data[idx] = saved;
        const double fd = (lp - lm) / (2.0 * eps);
        const double an = p.grad->data[idx];
        const double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-2});
        CHECK(rel < 1e-3);
        ++checked;
    }
}

TEST_CASE("maxpool forward picks maxima and backward routes to them") {
    MaxPoolLayer pool(2, 2);
    const Tensor x({1, 1, 2, 2}, {1.0f, 5.0f, 3.0f, 2.0f});
    const Tensor out = pool.forward(x, true);
    REQUIRE(out.data.size() == 1);
    CHECK(out.data[0] == 5.0f);
    const Tensor g({1, 1, 1, 1}, {2.5f});
    const Tensor gin = pool.backward(g);
    CHECK(gin.data == std::vector<float>{0.0f, 2.5f, 0.0f, 0.0f});
}

TEST_CASE("count_used equals count_params on a fresh network") {
    Network net = build_lenet5(5);
    CHECK(net.count_used() == net.count_params());
    CHECK(net.count_used() == 61706);
}

TEST_CASE("count_used drops pruned weights") {
    Network net = tiny_net(5);
    auto layers = net.maskable_layers();
    MaskedLayerState* st = layers[1]->masked_state();  // dense 8->3
    const std::int64_t total_before = net.count_used();
    // Prune the first dense row entirely (8 weights).
    for (std::int64_t j = 0; j < 8; ++j) st->prune_mask.data[static_cast<std::size_t>(j)] = 0.0f;
    CHECK(net.count_used() == total_before - 8);
}

TEST_CASE("network with no maskable layers reports used == total") {
    Network net;
    net.head_classes = 4;
    net.input_shape = {1, 2, 2};
    net.add(std::make_unique<FlattenLayer>());
    CHECK(net.count_used() == net.count_params());
}

TEST_CASE("frozen batchnorm fields receive zero gradients and never move") {
    Network net = tiny_net(5, /*with_bn=*/true);
    BatchNormLayer* bn = nullptr;
    for (auto& layer : net.layers()) {
        if (auto* b = dynamic_cast<BatchNormLayer*>(layer.get())) bn = b;
    }
    REQUIRE(bn != nullptr);

    // Train one step so the running stats move, then freeze.
    const Tensor x = random_batch(12, {4, 1, 4, 4});
    (void)net.forward(x, true);
    net.zero_grad();
    net.backward(Tensor::full({4, 3}, 0.1f));
    bn->frozen = true;
    const std::vector<float> gain = bn->gain.data;
    const std::vector<float> mean = bn->running_mean.data;
    const std::vector<float> var = bn->running_var.data;

    (void)net.forward(x, true);
    net.zero_grad();
    net.backward(Tensor::full({4, 3}, 0.1f));
    for (const float v : bn->grad_gain.data) CHECK(v == 0.0f);
    for (const float v : bn->grad_bias.data) CHECK(v == 0.0f);
    CHECK(bn->gain.data == gain);
    CHECK(bn->running_mean.data == mean);
    CHECK(bn->running_var.data == var);
}

TEST_CASE("batchnorm gradients agree with finite differences") {
    Network net = tiny_net(5, /*with_bn=*/true);
    const Tensor x = random_batch(13, {4, 1, 4, 4});
    const std::vector<int> labels{0, 1, 2, 0};

    const Tensor logits = net.forward(x, true);
    SoftmaxXentResult xent = softmax_cross_entropy(logits, labels);
    net.zero_grad();
    net.backward(xent.grad_logits);

    BatchNormLayer* bn = nullptr;
    for (auto& layer : net.layers()) {
        if (auto* b = dynamic_cast<BatchNormLayer*>(layer.get())) bn = b;
    }
    REQUIRE(bn != nullptr);

    // Finite differences must use batch statistics, i.e. train-mode forward.
    auto loss_train = [&](Network& n) {
        BatchNormLayer* bnorm = nullptr;
        for (auto& layer : n.layers()) {
            if (auto* b = dynamic_cast<BatchNormLayer*>(layer.get())) bnorm = b;
        }
        // Preserve running stats so repeated train-mode forwards do not drift.
        const std::vector<float> rm = bnorm->running_mean.data;
        const std::vector<float> rv = bnorm->running_var.data;
        const Tensor l = n.forward(x, true);
        bnorm->running_mean.data = rm;
        bnorm->running_var.data = rv;
        return softmax_cross_entropy(l, labels).loss;
    };

    const float eps = 1e-3f;
    for (std::size_t i = 0; i < bn->gain.data.size(); ++i) {
        const float saved = bn->gain.data[i];
        bn->gain.data[i] = saved + eps;
        const double lp = loss_train(net);
        bn->gain.data[i] = saved - eps;
        const double lm = loss_train(net);
        bn->gain.data[i] = saved;
        const double fd = (lp - lm) / (2.0 * eps);
        CHECK(std::fabs(fd - bn->grad_gain.data[i]) <
              1e-3 * std::max(1.0, std::fabs(fd)));
    }
}

TEST_CASE("forward and backward are bit-reproducible") {
    Network a = tiny_net(21);
    Network b = tiny_net(21);
    const Tensor x = random_batch(22, {3, 1, 4, 4});
    const Tensor la = a.forward(x, true);
    const Tensor lb = b.forward(x, true);
    CHECK(la.data == lb.data);
    a.zero_grad();
    b.zero_grad();
    a.backward(Tensor::full({3, 3}, 0.5f));
    b.backward(Tensor::full({3, 3}, 0.5f));
    auto pa = a.parameters();
    auto pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].grad->data == pb[i].grad->data);
}

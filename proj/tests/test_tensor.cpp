#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adaptcl/errors.hpp"
#include "adaptcl/rng.hpp"
#include "adaptcl/tensor.hpp"

using namespace adaptcl;

TEST_CASE("matmul identity") {
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor b({2, 2}, {3, 4, 5, 6});
    const Tensor out = matmul(eye, b);
    CHECK(out.data == std::vector<float>{3, 4, 5, 6});
}

TEST_CASE("matmul hand-computed dot product") {
    const Tensor a({1, 2}, {1, 2});
    const Tensor b({2, 1}, {3, 4});
    const Tensor out = matmul(a, b);
    REQUIRE(out.shape == std::vector<std::int64_t>{1, 1});
    CHECK(out.data[0] == 11.0f);
}

TEST_CASE("matmul zero annihilates") {
    const Tensor zero = Tensor::zeros({3, 4});
    Tensor b = Tensor::zeros({4, 2});
    Rng rng(5, "test/matmul");
    for (auto& v : b.data) v = rng.uniform(-1.0f, 1.0f);
    const Tensor out = matmul(zero, b);
    for (const float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({4, 2});
    CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("matmul is bit-reproducible") {
    Rng rng(5, "test/matmul2");
    Tensor a = Tensor::zeros({7, 9});
    Tensor b = Tensor::zeros({9, 5});
    for (auto& v : a.data) v = rng.uniform(-2.0f, 2.0f);
    for (auto& v : b.data) v = rng.uniform(-2.0f, 2.0f);
    const Tensor x = matmul(a, b);
    const Tensor y = matmul(a, b);
    CHECK(x.data == y.data);
}

TEST_CASE("conv2d 3x3 ones kernel sums the window") {
    const Tensor input({1, 3, 3}, std::vector<float>(9, 1.0f));
    const Tensor kernel({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
    const Tensor out = conv2d_forward(input, kernel, 1, 0);
    REQUIRE(out.shape == std::vector<std::int64_t>{1, 1, 1});
    CHECK(out.data[0] == 9.0f);
}

TEST_CASE("conv2d all-zero kernel gives zero output") {
    Rng rng(5, "test/conv0");
    Tensor input = Tensor::zeros({2, 3, 6, 6});
    for (auto& v : input.data) v = rng.uniform(-1.0f, 1.0f);
    const Tensor kernel = Tensor::zeros({4, 3, 3, 3});
    const Tensor out = conv2d_forward(input, kernel, 1, 1);
    for (const float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("conv2d 1x1 kernel scales") {
    const Tensor input({1, 2, 2}, {1, 2, 3, 4});
    const Tensor kernel({1, 1, 1, 1}, {2});
    const Tensor out = conv2d_forward(input, kernel, 1, 0);
    CHECK(out.data == std::vector<float>{2, 4, 6, 8});
}

TEST_CASE("conv2d rejects non-integer output extents") {
    const Tensor input = Tensor::zeros({1, 5, 5});
    const Tensor kernel = Tensor::zeros({1, 1, 2, 2});
    CHECK_THROWS_AS(conv2d_forward(input, kernel, 2, 0), ConfigError);
}

TEST_CASE("conv2d backward matches the hand chain rule for a 1x1 kernel") {
    const Tensor input({1, 2, 2}, {1, 2, 3, 4});
    const Tensor kernel({1, 1, 1, 1}, {2});
    const Tensor grad_out({1, 2, 2}, {1, 1, 1, 1});
    const Conv2dGrads grads = conv2d_backward(grad_out, input, kernel, 1, 0);
    CHECK(grads.grad_input.data == std::vector<float>{2, 2, 2, 2});
    CHECK(grads.grad_kernel.data[0] == 10.0f);  // sum of the input
}

TEST_CASE("conv2d backward zero grad_out gives zero gradients") {
    Rng rng(5, "test/convb");
    Tensor input = Tensor::zeros({1, 2, 4, 4});
    Tensor kernel = Tensor::zeros({3, 2, 3, 3});
    for (auto& v : input.data) v = rng.uniform(-1.0f, 1.0f);
    for (auto& v : kernel.data) v = rng.uniform(-1.0f, 1.0f);
    const Tensor grad_out = Tensor::zeros({1, 3, 2, 2});
    const Conv2dGrads grads = conv2d_backward(grad_out, input, kernel, 1, 0);
    for (const float v : grads.grad_input.data) CHECK(v == 0.0f);
    for (const float v : grads.grad_kernel.data) CHECK(v == 0.0f);
}

TEST_CASE("conv2d backward agrees with central finite differences") {
    Rng rng(5, "test/convfd");
    Tensor input = Tensor::zeros({1, 1, 4, 4});
    Tensor kernel = Tensor::zeros({2, 1, 3, 3});
    for (auto& v : input.data) v = rng.uniform(-1.0f, 1.0f);
    for (auto& v : kernel.data) v = rng.uniform(-1.0f, 1.0f);

    // Scalar objective: sum of outputs. d(sum)/dx via backward with ones.
    auto objective = [&](const Tensor& in, const Tensor& k) {
        const Tensor out = conv2d_forward(in, k, 1, 1);
        double s = 0.0;
        for (const float v : out.data) s += v;
        return s;
    };
    const Tensor out = conv2d_forward(input, kernel, 1, 1);
    const Tensor ones = Tensor::full(out.shape, 1.0f);
    const Conv2dGrads grads = conv2d_backward(ones, input, kernel, 1, 1);

    const float eps = 1e-3f;
    for (int trial = 0; trial < 10; ++trial) {
        const auto ii = static_cast<std::size_t>(rng.next_index(input.numel()));
        Tensor ip = input, im = input;
        ip.data[ii] += eps;
        im.data[ii] -= eps;
        const double fd = (objective(ip, kernel) - objective(im, kernel)) / (2.0 * eps);
        const double an = grads.grad_input.data[ii];
        CHECK(std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1.0}) < 1e-4);

        const auto ki = static_cast<std::size_t>(rng.next_index(kernel.numel()));
        Tensor kp = kernel, km = kernel;
        kp.data[ki] += eps;
        km.data[ki] -= eps;
        const double fdk = (objective(input, kp) - objective(input, km)) / (2.0 * eps);
        const double ank = grads.grad_kernel.data[ki];
        CHECK(std::fabs(fdk - ank) / std::max({std::fabs(fdk), std::fabs(ank), 1.0}) < 1e-4);
    }
}

TEST_CASE("sgd_step plain reduction") {
    Tensor w({1}, {1.0f});
    const Tensor g({1}, {2.0f});
    OptimizerState st;
    st.learning_rate = 0.1f;
    st.momentum = 0.0f;
    st.nesterov = false;
    sgd_step(w, g, st);
    CHECK(w.data[0] == doctest::Approx(0.8f).epsilon(1e-7));
}

TEST_CASE("sgd_step zero gradient leaves parameters unchanged") {
    Tensor w({3}, {1.0f, -2.0f, 3.0f});
    const Tensor g = Tensor::zeros({3});
    OptimizerState st;
    st.learning_rate = 0.5f;
    st.momentum = 0.9f;
    st.nesterov = true;
    const std::vector<float> before = w.data;
    sgd_step(w, g, st);
    CHECK(w.data == before);
}

TEST_CASE("sgd_step nesterov hand-computed value") {
    // mu=0.9, lr=0.001, w=0, g=1, v=0: v=1, update=mu*v+g=1.9, w=-0.0019
    Tensor w({1}, {0.0f});
    const Tensor g({1}, {1.0f});
    OptimizerState st;
    st.learning_rate = 0.001f;
    st.momentum = 0.9f;
    st.nesterov = true;
    sgd_step(w, g, st);
    CHECK(st.velocity.data[0] == 1.0f);
    CHECK(w.data[0] == doctest::Approx(-0.0019f).epsilon(1e-6));
}

TEST_CASE("sgd_step with momentum 0 and no nesterov is vanilla descent") {
    Rng rng(5, "test/sgd");
    Tensor w = Tensor::zeros({20});
    Tensor g = Tensor::zeros({20});
    for (auto& v : w.data) v = rng.uniform(-1.0f, 1.0f);
    for (auto& v : g.data) v = rng.uniform(-1.0f, 1.0f);
    Tensor expected = w;
    for (std::size_t i = 0; i < expected.data.size(); ++i) {
        expected.data[i] = w.data[i] - 0.01f * g.data[i];
    }
    OptimizerState st;
    st.learning_rate = 0.01f;
    st.momentum = 0.0f;
    st.nesterov = false;
    sgd_step(w, g, st);
    CHECK(w.data == expected.data);
}

TEST_CASE("sgd_step rejects non-finite gradients") {
    Tensor w({1}, {0.0f});
    const Tensor g({1}, {std::numeric_limits<float>::infinity()});
    OptimizerState st;
    CHECK_THROWS_AS(sgd_step(w, g, st), NumericError);
}

TEST_CASE("softmax cross entropy on uniform logits is ln K") {
    const Tensor logits = Tensor::zeros({2, 10});
    const SoftmaxXentResult res = softmax_cross_entropy(logits, {3, 7});
    CHECK(res.loss == doctest::Approx(std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("softmax cross entropy saturates cleanly") {
    Tensor logits = Tensor::zeros({1, 4});
    logits.data[2] = 1e4f;
    const SoftmaxXentResult res = softmax_cross_entropy(logits, {2});
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::fabs(res.grad_logits.data[2]) < 1e-9f);
}

TEST_CASE("softmax cross entropy matches a direct formula evaluation") {
    const Tensor logits({2, 3}, {0.3f, -1.2f, 0.7f, 2.0f, 0.1f, -0.5f});
    const std::vector<int> labels{2, 0};
    const SoftmaxXentResult res = softmax_cross_entropy(logits, labels);

    double loss = 0.0;
    std::vector<double> grad(6, 0.0);
    for (int b = 0; b < 2; ++b) {
        double denom = 0.0;
        for (int k = 0; k < 3; ++k) denom += std::exp(static_cast<double>(logits.data[static_cast<std::size_t>(b * 3 + k)]));
        const int y = labels[static_cast<std::size_t>(b)];
        loss += -std::log(std::exp(static_cast<double>(logits.data[static_cast<std::size_t>(b * 3 + y)])) / denom);
        for (int k = 0; k < 3; ++k) {
            const double p = std::exp(static_cast<double>(logits.data[static_cast<std::size_t>(b * 3 + k)])) / denom;
            grad[static_cast<std::size_t>(b * 3 + k)] = (p - (k == y ? 1.0 : 0.0)) / 2.0;
        }
    }
    loss /= 2.0;
    CHECK(res.loss == doctest::Approx(loss).epsilon(1e-6));
    for (int i = 0; i < 6; ++i) {
        CHECK(res.grad_logits.data[static_cast<std::size_t>(i)] ==
              doctest::Approx(grad[static_cast<std::size_t>(i)]).epsilon(1e-5));
    }
}

TEST_CASE("softmax cross entropy rejects out-of-range labels") {
    const Tensor logits = Tensor::zeros({1, 3});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {3}), InputError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1}), InputError);
}

TEST_CASE("tensor invariant: shape product equals data length") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0f}), DimensionError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "geofuse/tensor.hpp"
#include "oracles.hpp"

using namespace geofuse;

namespace {

Conv2DLayer random_conv(std::size_t out, std::size_t in, std::size_t half, Rng& rng) {
    Conv2DLayer layer = Conv2DLayer::zeros(out, in, half);
    for (double& v : layer.weights.values()) v = rng.uniform(-1, 1);
    for (double& v : layer.bias.values()) v = rng.uniform(-1, 1);
    return layer;
}

}  // namespace

TEST(Conv2d, IdentityKernelCopiesInput) {
    Rng rng(1);
    const Tensor x = oracle::random_tensor({1, 5, 4}, rng);
    Conv2DLayer layer = Conv2DLayer::zeros(1, 1, 0);
    layer.weights[0] = 1.0;
    EXPECT_EQ(conv2d_forward(x, layer), x);
}

TEST(Conv2d, ZeroWeightsGiveZeroOutput) {
    Rng rng(2);
    const Tensor x = oracle::random_tensor({3, 6, 6}, rng);
    const Tensor y = conv2d_forward(x, Conv2DLayer::zeros(2, 3, 1));
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, AllOnesFilterOnSmallGrid) {
    const Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Conv2DLayer layer = Conv2DLayer::zeros(1, 1, 1);
    layer.weights.fill(1.0);
    const Tensor y = conv2d_forward(x, layer);
    EXPECT_EQ(y.at(0, 1, 1), 45.0);
    EXPECT_EQ(y.at(0, 0, 0), 12.0);
    EXPECT_EQ(y, oracle::conv2d(x, layer.weights, layer.bias));
}

TEST(Conv2d, MatchesNestedLoopOracleBitwise) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const std::size_t c = 1 + rng.below(3), h = 1 + rng.below(8), w = 1 + rng.below(8);
        const Conv2DLayer layer = random_conv(1 + rng.below(3), c, rng.below(3), rng);
        const Tensor x = oracle::random_tensor({c, h, w}, rng);
        EXPECT_EQ(conv2d_forward(x, layer), oracle::conv2d(x, layer.weights, layer.bias)) << "seed " << seed;
    }
}

TEST(Conv2d, RejectsEvenOrMismatchedFilters) {
    Conv2DLayer layer = Conv2DLayer::zeros(1, 2, 1);
    EXPECT_THROW(conv2d_forward(Tensor({3, 4, 4}), layer), ShapeError);
    layer.weights = Tensor({1, 2, 2, 2});
    EXPECT_THROW(layer.validate(), ShapeError);
}

TEST(Conv2dBackward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(3);
    const Conv2DLayer layer = random_conv(3, 2, 1, rng);
    const Tensor x = oracle::random_tensor({2, 4, 4}, rng);
    const auto g = conv2d_backward(Tensor({3, 4, 4}), x, layer);
    for (const Tensor* t : {&g.input, &g.weights, &g.bias})
        for (double v : t->values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2dBackward, IdentityKernelPassesGradient) {
    Rng rng(4);
    Conv2DLayer layer = Conv2DLayer::zeros(1, 1, 0);
    layer.weights[0] = 1.0;
    const Tensor x = oracle::random_tensor({1, 3, 5}, rng);
    const Tensor up = oracle::random_tensor({1, 3, 5}, rng);
    EXPECT_EQ(conv2d_backward(up, x, layer).input, up);
}

TEST(Conv2dBackward, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(100 + seed);
        Conv2DLayer layer = random_conv(3, 2, 1, rng);
        Tensor x = oracle::random_tensor({2, 4, 4}, rng);
        const Tensor r = oracle::random_tensor({3, 4, 4}, rng);
        auto loss = [&] { return oracle::dot(conv2d_forward(x, layer), r); };
        const auto g = conv2d_backward(r, x, layer);
        EXPECT_LE(oracle::max_relative_error(g.input, oracle::numeric_gradient(x, loss)), 1e-4);
        EXPECT_LE(oracle::max_relative_error(g.weights, oracle::numeric_gradient(layer.weights, loss)), 1e-4);
        EXPECT_LE(oracle::max_relative_error(g.bias, oracle::numeric_gradient(layer.bias, loss)), 1e-4);
    }
}

TEST(Relu, PointValues) {
    const Tensor y = relu_forward(Tensor::vector({-3.0, 2.5, 0.0}));
    EXPECT_EQ(y[0], 0.0);
    EXPECT_EQ(y[1], 2.5);
    EXPECT_EQ(y[2], 0.0);
}

TEST(Relu, Idempotent) {
    Rng rng(5);
    const Tensor x = oracle::random_tensor({4, 7}, rng);
    EXPECT_EQ(relu_forward(relu_forward(x)), relu_forward(x));
}

TEST(Relu, BackwardMasks) {
    Rng rng(6);
    const Tensor up = oracle::random_tensor({10}, rng);
    const Tensor pos = oracle::random_tensor({10}, rng, 0.1, 1.0);
    const Tensor neg = oracle::random_tensor({10}, rng, -1.0, -0.1);
    EXPECT_EQ(relu_backward(up, pos), up);
    const Tensor masked = relu_backward(up, neg);
    for (double v : masked.values()) EXPECT_EQ(v, 0.0);
}

TEST(Relu, BackwardMatchesFiniteDifferencesAwayFromKink) {
    Rng rng(7);
    Tensor x = oracle::random_tensor({30}, rng);
    for (double& v : x.values())
        if (std::abs(v) < 0.05) v = 0.5;
    const Tensor r = oracle::random_tensor({30}, rng);
    auto loss = [&] { return oracle::dot(relu_forward(x), r); };
    EXPECT_LE(oracle::max_relative_error(relu_backward(r, x), oracle::numeric_gradient(x, loss)), 1e-4);
}

TEST(MaxPool, WindowMax) {
    const Tensor x({1, 2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(maxpool2d_forward(x).output[0], 4.0);
    const Tensor c({2, 4, 4}, 1.5);
    const MaxPoolResult pooled = maxpool2d_forward(c);
    for (double v : pooled.output.values()) EXPECT_EQ(v, 1.5);
}

TEST(MaxPool, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const Tensor x = oracle::random_tensor({1 + rng.below(3), 4, 4}, rng);
        EXPECT_EQ(maxpool2d_forward(x).output, oracle::maxpool(x, 2));
    }
}

TEST(MaxPool, BackwardRoutesToArgmax) {
    Rng rng(8);
    Tensor x = oracle::random_tensor({2, 4, 6}, rng);
    const Tensor r = oracle::random_tensor({2, 2, 3}, rng);
    auto loss = [&] { return oracle::dot(maxpool2d_forward(x).output, r); };
    const Tensor g = maxpool2d_backward(r, maxpool2d_forward(x));
    EXPECT_LE(oracle::max_relative_error(g, oracle::numeric_gradient(x, loss)), 1e-4);
}

TEST(Dense, IdentityAndZeroInput) {
    DenseLayer layer = DenseLayer::zeros(3, 3);
    for (std::size_t i = 0; i < 3; ++i) layer.weights.at(i, i) = 1.0;
    const Tensor x = Tensor::vector({1.0, -2.0, 3.5});
    EXPECT_EQ(dense_forward(x, layer), x);
    layer.bias = Tensor::vector({0.1, 0.2, 0.3});
    EXPECT_EQ(dense_forward(Tensor({3}), layer), layer.bias);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
    Rng rng(9);
    DenseLayer layer = DenseLayer::zeros(4, 6);
    for (double& v : layer.weights.values()) v = rng.uniform(-1, 1);
    for (double& v : layer.bias.values()) v = rng.uniform(-1, 1);
    Tensor x = oracle::random_tensor({2, 3}, rng);
    const Tensor r = oracle::random_tensor({4}, rng);
    auto loss = [&] { return oracle::dot(dense_forward(x, layer), r); };
    const auto g = dense_backward(r, x, layer);
    EXPECT_EQ(g.input.shape(), x.shape());
    EXPECT_LE(oracle::max_relative_error(g.input, oracle::numeric_gradient(x, loss)), 1e-4);
    EXPECT_LE(oracle::max_relative_error(g.weights, oracle::numeric_gradient(layer.weights, loss)), 1e-4);
    EXPECT_LE(oracle::max_relative_error(g.bias, oracle::numeric_gradient(layer.bias, loss)), 1e-4);
}

TEST(SoftmaxCrossEntropy, KnownValues) {
    EXPECT_NEAR(softmax_cross_entropy(Tensor::vector({0, 0}), 0).loss, std::log(2.0), 1e-12);
    EXPECT_NEAR(softmax_cross_entropy(Tensor::vector({1, 2, 3}), 2).loss,
                -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0))), 1e-12);
    EXPECT_NEAR(softmax_cross_entropy(Tensor::vector({1, 2, 3}), 2).loss, 0.407606, 1e-6);
    EXPECT_LT(softmax_cross_entropy(Tensor::vector({0, 800}), 1).loss, 1e-300);
}

TEST(SoftmaxCrossEntropy, GradientSumsToZeroAndMatchesFiniteDifferences) {
    Rng rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor z = oracle::random_tensor({5}, rng, -3, 3);
        const auto lg = softmax_cross_entropy(z, trial % 5);
        double s = 0.0;
        for (double v : lg.grad.values()) s += v;
        EXPECT_NEAR(s, 0.0, 1e-12);
        auto loss = [&] { return softmax_cross_entropy(z, trial % 5).loss; };
        EXPECT_LE(oracle::max_relative_error(lg.grad, oracle::numeric_gradient(z, loss)), 1e-4);
    }
}

TEST(MseL2, KnownValues) {
    const Tensor a = Tensor::vector({1.0, 2.0});
    EXPECT_EQ(mse_l2_loss(a, a, {}, 0.0), 0.0);
    EXPECT_EQ(mse_l2_loss(Tensor::vector({0.0}), Tensor::vector({1.0}), {}, 0.0), 1.0);
    const std::vector<Tensor> params{Tensor::vector({1.0, 2.0})};
    EXPECT_NEAR(mse_l2_loss(Tensor::vector({3.0}), Tensor::vector({3.0}), params, 0.1), 0.5, 1e-15);
}

TEST(MseL2, NonNegativeAndZeroOnlyAtFit) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor p = oracle::random_tensor({6}, rng), t = oracle::random_tensor({6}, rng);
        const std::vector<Tensor> params{oracle::random_tensor({3}, rng)};
        EXPECT_GT(mse_l2_loss(p, t, params, 0.01), 0.0);
        EXPECT_GT(mse_l2_loss(p, p, params, 0.01), 0.0);
        EXPECT_EQ(mse_l2_loss(p, p, params, 0.0), 0.0);
    }
}

TEST(Tensor, ShapeMismatchThrows) {
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    EXPECT_THROW(Tensor({2, 3}).reshaped({4}), ShapeError);
}

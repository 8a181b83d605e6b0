#include <gtest/gtest.h>

#include <cmath>

#include "geofuse/recurrent.hpp"
#include "oracles.hpp"

using namespace geofuse;

namespace {

constexpr double kBig = 1000.0;

LstmParams forced(std::size_t hidden, std::size_t input, double f, double i, double o) {
    LstmParams p = LstmParams::zeros(hidden, input);
    p.bias(Gate::Forget).fill(f);
    p.bias(Gate::Input).fill(i);
    p.bias(Gate::Output).fill(o);
    p.bias(Gate::Candidate).fill(0.3);
    return p;
}

struct Problem {
    std::vector<Tensor> xs;
    std::vector<Tensor> rh;
    Tensor rc;
    LstmState init;
};

Problem random_problem(std::size_t hidden, std::size_t input, std::size_t steps, Rng& rng) {
    Problem p;
    for (std::size_t t = 0; t < steps; ++t) {
        p.xs.push_back(oracle::random_tensor({input}, rng));
        p.rh.push_back(oracle::random_tensor({hidden}, rng));
    }
    p.rc = oracle::random_tensor({hidden}, rng);
    p.init = {oracle::random_tensor({hidden}, rng, -0.5, 0.5), oracle::random_tensor({hidden}, rng, -0.5, 0.5)};
    return p;
}

double sequence_loss(const Problem& p, const LstmParams& params) {
    const LstmSequence seq = lstm_sequence_forward(p.xs, p.init, params);
    double s = oracle::dot(seq.states.back().cell, p.rc);
    for (std::size_t t = 0; t < p.xs.size(); ++t) s += oracle::dot(seq.states[t].hidden, p.rh[t]);
    return s;
}

}  // namespace

TEST(LstmCell, ForgetOneInputZeroKeepsCell) {
    const LstmParams p = forced(3, 2, kBig, -kBig, 0.0);
    const LstmState prev{Tensor::vector({0.4, -1.2, 2.0}), Tensor::vector({0.1, 0.2, 0.3})};
    const LstmStep s = lstm_cell_step(Tensor::vector({5.0, -7.0}), prev, p);
    EXPECT_EQ(s.state.cell, prev.cell);
}

TEST(LstmCell, ForgetZeroInputOneOverwrites) {
    const LstmParams p = forced(2, 1, -kBig, kBig, 0.0);
    const LstmState prev{Tensor::vector({3.0, -3.0}), Tensor({2})};
    const LstmStep s = lstm_cell_step(Tensor::vector({1.0}), prev, p);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(s.state.cell[i], std::tanh(0.3));
}

TEST(LstmCell, OutputGateOffZeroesHidden) {
    const LstmParams p = forced(2, 1, 0.0, 0.0, -kBig);
    const LstmState prev{Tensor::vector({3.0, -3.0}), Tensor({2})};
    const LstmStep s = lstm_cell_step(Tensor::vector({1.0}), prev, p);
    for (double v : s.state.hidden.values()) EXPECT_EQ(v, 0.0);
}

TEST(LstmCell, RangesOfGatesAndHidden) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const LstmParams p = LstmParams::random(4, 3, rng);
        const LstmState prev{oracle::random_tensor({4}, rng, -5, 5), oracle::random_tensor({4}, rng)};
        const LstmStep s = lstm_cell_step(oracle::random_tensor({3}, rng, -10, 10), prev, p);
        for (const Tensor* g : {&s.cache.forget, &s.cache.input, &s.cache.output})
            for (double v : g->values()) {
                EXPECT_GT(v, 0.0);
                EXPECT_LT(v, 1.0);
            }
        for (double v : s.state.hidden.values()) EXPECT_LT(std::abs(v), 1.0);
    }
}

TEST(LstmCell, RandomInitRangeAndForgetBias) {
    Rng rng(2);
    const LstmParams p = LstmParams::random(5, 3, rng);
    const double bound = 1.0 / std::sqrt(8.0);
    for (const auto& w : p.weights)
        for (double v : w.values()) EXPECT_LE(std::abs(v), bound);
    for (double v : p.bias(Gate::Forget).values()) EXPECT_EQ(v, 1.0);
}

TEST(LstmSequence, LengthOneEqualsSingleStep) {
    Rng rng(3);
    const LstmParams p = LstmParams::random(3, 2, rng);
    const Tensor x = oracle::random_tensor({2}, rng);
    const LstmState init = LstmState::zeros(3);
    const std::vector<Tensor> xs{x};
    const LstmSequence seq = lstm_sequence_forward(xs, init, p);
    const LstmStep one = lstm_cell_step(x, init, p);
    EXPECT_EQ(seq.states.at(0).cell, one.state.cell);
    EXPECT_EQ(seq.states.at(0).hidden, one.state.hidden);
}

TEST(LstmSequence, ZeroParamsHalveTheCell) {
    const LstmParams p = LstmParams::zeros(2, 1);
    const std::vector<Tensor> xs(4, Tensor::vector({0.7}));
    const LstmSequence from_zero = lstm_sequence_forward(xs, LstmState::zeros(2), p);
    for (const auto& s : from_zero.states)
        for (double v : s.cell.values()) EXPECT_EQ(v, 0.0);
    const LstmSequence from_one = lstm_sequence_forward(xs, {Tensor::vector({1.0, -2.0}), Tensor({2})}, p);
    double expect = 1.0;
    for (const auto& s : from_one.states) {
        expect *= 0.5;
        EXPECT_DOUBLE_EQ(s.cell[0], expect);
        EXPECT_DOUBLE_EQ(s.cell[1], -2.0 * expect);
    }
}

TEST(LstmSequence, MatchesScalarOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        oracle::ScalarLstm ref{};
        LstmParams p = LstmParams::zeros(1, 1);
        const Gate order[4] = {Gate::Forget, Gate::Input, Gate::Output, Gate::Candidate};
        for (int g = 0; g < 4; ++g) {
            for (int c = 0; c < 3; ++c) ref.w[g][c] = rng.uniform(-1, 1);
            p.weight(order[g])[0] = ref.w[g][0];
            p.weight(order[g])[1] = ref.w[g][1];
            p.bias(order[g])[0] = ref.w[g][2];
        }
        std::vector<Tensor> xs;
        for (int t = 0; t < 3; ++t) xs.push_back(Tensor::vector({rng.uniform(-2, 2)}));
        const LstmSequence seq = lstm_sequence_forward(xs, LstmState::zeros(1), p);
        double c = 0.0, h = 0.0;
        for (int t = 0; t < 3; ++t) {
            std::tie(c, h) = ref.step(xs[t][0], c, h);
            EXPECT_NEAR(seq.states[t].cell[0], c, 1e-12);
            EXPECT_NEAR(seq.states[t].hidden[0], h, 1e-12);
        }
    }
}

TEST(LstmSequence, CellConservedUnderForcedGates) {
    const LstmParams p = forced(3, 2, kBig, -kBig, 0.5);
    Rng rng(4);
    std::vector<Tensor> xs;
    for (int t = 0; t < 25; ++t) xs.push_back(oracle::random_tensor({2}, rng, -3, 3));
    const LstmState init{Tensor::vector({0.25, -4.0, 9.5}), Tensor({3})};
    EXPECT_EQ(lstm_sequence_forward(xs, init, p).states.back().cell, init.cell);
}

TEST(LstmBackward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(5);
    const LstmParams p = LstmParams::random(3, 2, rng);
    const Problem prob = random_problem(3, 2, 4, rng);
    const LstmSequence seq = lstm_sequence_forward(prob.xs, prob.init, p);
    const std::vector<Tensor> zeros(4, Tensor({3}));
    const LstmGradients g = lstm_backward(zeros, seq.caches, p);
    for (const Tensor* t : g.params.tensors())
        for (double v : t->values()) EXPECT_EQ(v, 0.0);
}

class LstmGradientCheck : public ::testing::TestWithParam<std::pair<std::size_t, std::size_t>> {};

TEST_P(LstmGradientCheck, MatchesFiniteDifferences) {
    const auto [hidden, steps] = GetParam();
    Rng rng(hidden * 31 + steps);
    LstmParams p = LstmParams::random(hidden, 2, rng);
    Problem prob = random_problem(hidden, 2, steps, rng);
    const LstmSequence seq = lstm_sequence_forward(prob.xs, prob.init, p);
    const LstmGradients g = lstm_backward(prob.rh, seq.caches, p, prob.rc);
    auto loss = [&] { return sequence_loss(prob, p); };

    const auto analytic = g.params.tensors();
    const auto params = p.tensors();
    for (std::size_t k = 0; k < params.size(); ++k) {
        EXPECT_LE(oracle::max_relative_error(*analytic[k], oracle::numeric_gradient(*params[k], loss)), 1e-4)
            << "parameter tensor " << k;
    }
    for (std::size_t t = 0; t < steps; ++t) {
        EXPECT_LE(oracle::max_relative_error(g.inputs[t], oracle::numeric_gradient(prob.xs[t], loss)), 1e-4);
    }
    EXPECT_LE(oracle::max_relative_error(g.initial.cell, oracle::numeric_gradient(prob.init.cell, loss)), 1e-4);
    EXPECT_LE(oracle::max_relative_error(g.initial.hidden, oracle::numeric_gradient(prob.init.hidden, loss)), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Shapes, LstmGradientCheck,
                         ::testing::Values(std::pair<std::size_t, std::size_t>{1, 1},
                                           std::pair<std::size_t, std::size_t>{3, 5},
                                           std::pair<std::size_t, std::size_t>{2, 8}));

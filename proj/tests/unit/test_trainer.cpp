#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "geofuse/trainer.hpp"
#include "oracles.hpp"

using namespace geofuse;

TEST(RmsProp, ZeroGradientDecaysAverage) {
    const Tensor theta = Tensor::vector({1.0, -2.0});
    const auto s = rmsprop_step(theta, Tensor({2}), Tensor::vector({0.5, 2.0}), 0.01, 0.9, 1e-8);
    EXPECT_EQ(s.theta, theta);
    EXPECT_DOUBLE_EQ(s.avg_sq[0], 0.45);
    EXPECT_DOUBLE_EQ(s.avg_sq[1], 1.8);
}

TEST(RmsProp, SingleStepArithmetic) {
    const auto s = rmsprop_step(Tensor::vector({1.0}), Tensor::vector({1.0}), Tensor({1}), 0.01, 0.9, 1e-8);
    EXPECT_NEAR(s.avg_sq[0], 0.1, 1e-15);
    EXPECT_NEAR(s.theta[0], 1.0 - 0.01 / std::sqrt(0.1 + 1e-8), 1e-15);
    EXPECT_NEAR(s.theta[0], 0.9683772, 1e-7);
}

TEST(RmsProp, StepMagnitudeIsScaleFree) {
    for (double c : {1e-3, 1.0, 250.0}) {
        const auto s = rmsprop_step(Tensor::vector({0.0}), Tensor::vector({c}), Tensor({1}), 0.01, 0.9, 1e-30);
        EXPECT_NEAR(std::abs(s.theta[0]), 0.01 / std::sqrt(0.1), 1e-9);
    }
}

TEST(Sgd, Arithmetic) {
    EXPECT_EQ(sgd_step(Tensor::vector({2.0}), Tensor::vector({1.0}), 0.5)[0], 1.5);
    EXPECT_EQ(sgd_step(Tensor::vector({2.0}), Tensor({1}), 0.5)[0], 2.0);
}

TEST(Adam, FirstStepIsAboutLearningRate) {
    const auto s = adam_step(Tensor::vector({1.0}), Tensor::vector({1.0}), AdamMoments{Tensor({1}), Tensor({1}), 0},
                             0.001);
    EXPECT_NEAR(1.0 - s.theta[0], 0.001, 1e-8);
    EXPECT_EQ(s.moments.step, 1u);
}

TEST(Optimizer, ZeroGradientNeverMoves) {
    for (OptimizerKind kind : {OptimizerKind::Adam, OptimizerKind::RMSProp, OptimizerKind::SGD}) {
        Tensor p = Tensor::vector({0.3, -0.7, 1.1});
        const Tensor before = p;
        Optimizer opt(kind, 0.1, {&p});
        const std::vector<Tensor> zero{Tensor({3})};
        for (int i = 0; i < 20; ++i) opt.step(zero);
        EXPECT_EQ(p, before);
    }
}

TEST(Optimizer, SgdOnQuadraticIsMonotone) {
    Rng rng(1);
    Tensor p = oracle::random_tensor({6}, rng, -3, 3);
    const Tensor target = oracle::random_tensor({6}, rng, -3, 3);
    Optimizer opt(OptimizerKind::SGD, 0.05, {&p});
    auto loss = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < 6; ++i) s += (p[i] - target[i]) * (p[i] - target[i]);
        return s;
    };
    double prev = loss();
    for (int e = 0; e < 200; ++e) {
        Tensor g({6});
        for (std::size_t i = 0; i < 6; ++i) g[i] = 2.0 * (p[i] - target[i]);
        opt.step(std::vector<Tensor>{g});
        const double now = loss();
        EXPECT_LE(now, prev);
        prev = now;
    }
    EXPECT_LT(prev, 1e-10);
}

TEST(Dropout, RateZeroAndEvalAreIdentity) {
    Rng rng(2);
    const Tensor x = oracle::random_tensor({50}, rng);
    EXPECT_EQ(dropout_apply(x, 0.0, Mode::Train, rng).output, x);
    EXPECT_EQ(dropout_apply(x, 0.7, Mode::Eval, rng).output, x);
}

TEST(Dropout, MonteCarloSurvivalAndExpectation) {
    Rng rng(3);
    const Tensor x({100000}, 1.0);
    const auto r = dropout_apply(x, 0.5, Mode::Train, rng);
    double kept = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        kept += r.mask[i] != 0.0;
        sum += r.output[i];
    }
    EXPECT_NEAR(kept / 1e5, 0.5, 0.01);
    EXPECT_NEAR(sum / 1e5, 1.0, 0.02);
}

TEST(Regularization, Values) {
    const Tensor a = Tensor::vector({1.0, 2.0});
    const Tensor b = Tensor::vector({-3.0, 4.0});
    const std::vector<const Tensor*> pa{&a}, pb{&b};
    EXPECT_NEAR(regularization_term(pa, Regularization::L2, 0.1).penalty, 0.5, 1e-15);
    EXPECT_EQ(regularization_term(pb, Regularization::L1, 1.0).penalty, 7.0);
    const auto none = regularization_term(pb, Regularization::None, 3.0);
    EXPECT_EQ(none.penalty, 0.0);
    for (double v : none.gradients.at(0).values()) EXPECT_EQ(v, 0.0);
    const auto l1 = regularization_term(pb, Regularization::L1, 2.0);
    EXPECT_EQ(l1.gradients[0][0], -2.0);
    EXPECT_EQ(l1.gradients[0][1], 2.0);
}

TEST(Split, SizesFollowFloorRule) {
    auto sizes = [](std::size_t n) {
        const auto s = split_indices(n, 9);
        return std::array<std::size_t, 3>{s.train.size(), s.validation.size(), s.test.size()};
    };
    EXPECT_EQ(sizes(100), (std::array<std::size_t, 3>{70, 15, 15}));
    EXPECT_EQ(sizes(20), (std::array<std::size_t, 3>{14, 3, 3}));
}

TEST(Split, DeterministicDisjointAndComplete) {
    EXPECT_EQ(split_indices(57, 4).validation, split_indices(57, 4).validation);
    for (std::size_t n = 10; n < 200; n += 7) {
        const auto s = split_indices(n, n);
        std::multiset<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.validation.begin(), s.validation.end());
        all.insert(s.test.begin(), s.test.end());
        ASSERT_EQ(all.size(), n);
        std::size_t expect = 0;
        for (std::size_t v : all) EXPECT_EQ(v, expect++);
    }
}

TEST(ConvergenceEpoch, PlateauDetection) {
    const std::vector<double> falling{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
    EXPECT_EQ(convergence_epoch(falling), falling.size());
    const std::vector<double> flat{5, 4, 3, 3, 3, 3, 3, 3, 3};
    EXPECT_EQ(convergence_epoch(flat), 8u);
    const std::vector<double> rising{1, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6};
    EXPECT_EQ(convergence_epoch(rising), 6u);
}

namespace {

Split<LabeledPatch> separable_set(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledPatch> samples;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t label = s % 2;
        Tensor patch({2, 4, 4});
        for (double& v : patch.values()) v = (label ? 0.6 : -0.6) + rng.uniform(-0.3, 0.3);
        samples.push_back({patch, label});
    }
    return split_dataset(samples, seed);
}

HyperParams small_hp() {
    HyperParams hp;
    hp.num_filters = 4;
    hp.epochs = 15;
    hp.batch_size = 8;
    return hp;
}

}  // namespace

TEST(TrainModel, SeparableSetReachesHighAccuracy) {
    const auto data = separable_set(120, 5);
    const auto out = train_model(CnnArch{2, 4, 2}, small_hp(), data, 11);
    ASSERT_TRUE(out.report.train_accuracy);
    EXPECT_GE(*out.report.train_accuracy, 0.95);
    EXPECT_LE(out.report.convergence_epoch, small_hp().epochs);
    for (double l : out.report.train_loss) EXPECT_TRUE(std::isfinite(l));
}

TEST(TrainModel, ZeroLearningRateLeavesParameters) {
    const auto data = separable_set(40, 6);
    HyperParams hp = small_hp();
    hp.epochs = 3;
    hp.regularization = Regularization::None;
    Rng rng(derive_seed(12, "init"));
    const CnnClassifier init = CnnClassifier::init(CnnArch{2, 4, 2}, hp, rng);
    for (OptimizerKind kind : {OptimizerKind::SGD, OptimizerKind::Adam, OptimizerKind::RMSProp}) {
        hp.optimizer = kind;
        hp.learning_rate = 0.0;
        const auto out = train_model(CnnArch{2, 4, 2}, hp, data, 12);
        const auto a = out.model.parameters();
        const auto b = init.parameters();
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k], *b[k]);
    }
}

TEST(TrainModel, SameSeedSameReport) {
    const auto data = separable_set(60, 7);
    const auto a = train_model(CnnArch{2, 4, 2}, small_hp(), data, 3);
    const auto b = train_model(CnnArch{2, 4, 2}, small_hp(), data, 3);
    EXPECT_TRUE(a.report.same_outcome(b.report));
    EXPECT_EQ(a.report.validation_loss, b.report.validation_loss);
}

TEST(TrainModel, NoneIgnoresLambda) {
    const auto data = separable_set(60, 8);
    HyperParams hp = small_hp();
    hp.regularization = Regularization::None;
    TrainOptions weak, strong;
    weak.lambda = 1e-6;
    strong.lambda = 10.0;
    const auto a = train_model(CnnArch{2, 4, 2}, hp, data, 3, weak);
    const auto b = train_model(CnnArch{2, 4, 2}, hp, data, 3, strong);
    EXPECT_EQ(a.report.train_loss, b.report.train_loss);
}

TEST(TrainModel, ForecasterLearnsSine) {
    std::vector<SequenceSample> samples;
    for (std::size_t s = 0; s < 120; ++s) {
        SequenceSample q;
        for (std::size_t t = 0; t < 6; ++t) q.history.push_back(1.5 + std::sin(0.9 * static_cast<double>(s + t)));
        q.target = 1.5 + std::sin(0.9 * static_cast<double>(s + 6));
        samples.push_back(q);
    }
    const auto data = split_dataset(samples, 1);
    HyperParams hp;
    hp.learning_rate = 0.01;
    hp.epochs = 60;
    hp.batch_size = 8;
    hp.dropout_rate = 0.0;
    Rng rng(4);
    const LstmForecaster untrained = LstmForecaster::init(LstmArch{8}, rng);
    const auto out = train_model(LstmArch{8}, hp, data, 4);
    EXPECT_LT(mean_squared_error(out.model, data.test), 0.5 * mean_squared_error(untrained, data.test));
}

TEST(HyperParams, ValidateRejectsStructuralErrors) {
    HyperParams hp;
    EXPECT_NO_THROW(hp.validate());
    hp.kernel_size = 4;
    EXPECT_THROW(hp.validate(), std::invalid_argument);
    hp = {};
    hp.dropout_rate = 1.0;
    EXPECT_THROW(hp.validate(), std::invalid_argument);
    hp = {};
    hp.batch_size = 0;
    EXPECT_THROW(hp.validate(), std::invalid_argument);
}

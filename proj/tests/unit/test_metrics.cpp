#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geofuse/metrics.hpp"
#include "oracles.hpp"

using namespace geofuse;

namespace {

LabelImage vertical_split(std::size_t n, std::size_t column) {
    LabelImage l(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) l.at(i, j) = j < column ? 0 : 1;
    return l;
}

}  // namespace

TEST(Classification, PerfectClassifier) {
    ConfusionMatrix cm(3);
    for (std::size_t c = 0; c < 3; ++c) cm.add(c, c, 5 + c);
    const MetricReport r = classification_metrics(cm);
    for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.specificity}) EXPECT_EQ(v, 1.0);
}

TEST(Classification, BinaryCounts) {
    ConfusionMatrix cm(2);
    cm.add(1, 1, 8);
    cm.add(0, 1, 2);
    cm.add(1, 0, 2);
    cm.add(0, 0, 8);
    const MetricReport r = classification_metrics(cm);
    for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.specificity}) EXPECT_NEAR(v, 0.8, 1e-15);
}

TEST(Classification, AllWrong) {
    ConfusionMatrix cm(2);
    cm.add(0, 1, 4);
    cm.add(1, 0, 3);
    EXPECT_EQ(classification_metrics(cm).accuracy, 0.0);
    EXPECT_THROW(classification_metrics(ConfusionMatrix(2)), std::invalid_argument);
}

TEST(Classification, MatchesCountingOracle) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const std::size_t k = 2 + rng.below(5), n = 20 + rng.below(200);
        std::vector<std::size_t> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = rng.below(k);
            p[i] = rng.bernoulli(0.6) ? t[i] : rng.below(k);
        }
        const MetricReport r = classification_metrics(ConfusionMatrix(k, t, p));
        const oracle::Counts o = oracle::count_metrics(t, p, k);
        EXPECT_NEAR(r.accuracy, o.accuracy, 1e-12);
        EXPECT_NEAR(r.precision, o.precision, 1e-12);
        EXPECT_NEAR(r.recall, o.recall, 1e-12);
        EXPECT_NEAR(r.f1, o.f1, 1e-12);
        EXPECT_NEAR(r.specificity, o.specificity, 1e-12);
        for (std::size_t c = 0; c < k; ++c) EXPECT_NEAR(r.per_class_accuracy[c], o.per_class[c], 1e-12);
    }
}

TEST(Classification, PermutationInvariant) {
    Rng rng(1);
    const std::size_t k = 4, n = 150;
    std::vector<std::size_t> t(n), p(n), perm{2, 0, 3, 1};
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = rng.below(k);
        p[i] = rng.bernoulli(0.7) ? t[i] : rng.below(k);
    }
    std::vector<std::size_t> tp(n), pp(n);
    for (std::size_t i = 0; i < n; ++i) {
        tp[i] = perm[t[i]];
        pp[i] = perm[p[i]];
    }
    const MetricReport a = classification_metrics(ConfusionMatrix(k, t, p));
    const MetricReport b = classification_metrics(ConfusionMatrix(k, tp, pp));
    EXPECT_DOUBLE_EQ(a.accuracy, b.accuracy);
    EXPECT_NEAR(a.precision, b.precision, 1e-15);
    EXPECT_NEAR(a.recall, b.recall, 1e-15);
    EXPECT_NEAR(a.f1, b.f1, 1e-15);

    LabelImage lt(10, 15), lp(10, 15), ltp(10, 15), lpp(10, 15);
    for (std::size_t i = 0; i < n; ++i) {
        lt.labels[i] = static_cast<std::uint16_t>(t[i]);
        lp.labels[i] = static_cast<std::uint16_t>(p[i]);
        ltp.labels[i] = static_cast<std::uint16_t>(tp[i]);
        lpp.labels[i] = static_cast<std::uint16_t>(pp[i]);
    }
    EXPECT_NEAR(mean_iou(lp, lt, k), mean_iou(lpp, ltp, k), 1e-15);
}

TEST(Auc, KnownCases) {
    EXPECT_EQ(auc_binary(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}), 1.0);
    EXPECT_EQ(auc_binary(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5, 0.5}), 0.5);
    EXPECT_DOUBLE_EQ(auc_binary(std::vector<double>{0.9, 0.8}, std::vector<double>{0.7, 0.85}), 0.75);
}

TEST(Auc, MatchesTrapezoidRoc) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        std::vector<double> pos(5 + rng.below(40)), neg(5 + rng.below(40));
        for (double& v : pos) v = std::round(rng.normal(0.5, 1.0) * 4) / 4;
        for (double& v : neg) v = std::round(rng.normal(0.0, 1.0) * 4) / 4;
        EXPECT_NEAR(auc_binary(pos, neg), oracle::trapezoid_auc(pos, neg), 1e-9);
    }
}

TEST(Auc, MacroExcludesDegenerateClasses) {
    const std::vector<std::vector<double>> scores{{0.9, 0.1, 0.0}, {0.2, 0.8, 0.0}, {0.6, 0.4, 0.0}};
    const std::vector<std::size_t> truth{0, 1, 0};
    const AucResult r = auc_roc(scores, truth);
    EXPECT_EQ(r.excluded, (std::vector<std::size_t>{2}));
    EXPECT_TRUE(std::isnan(r.per_class[2]));
    EXPECT_EQ(r.macro, 1.0);
}

TEST(Iou, Cases) {
    const std::vector<bool> a{true, true, false, false}, b{false, false, true, true};
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, b), 0.0);
    const std::vector<bool> half{true, false, false, false};
    EXPECT_EQ(iou(half, a), 0.5);
    EXPECT_EQ(iou(std::vector<bool>(4, false), std::vector<bool>(4, false)), 1.0);
}

TEST(Iou, Symmetric) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<bool> a(50), b(50);
        for (std::size_t i = 0; i < 50; ++i) {
            a[i] = rng.bernoulli(0.4);
            b[i] = rng.bernoulli(0.4);
        }
        EXPECT_EQ(iou(a, b), iou(b, a));
    }
}

TEST(Boundary, UniformImageHasNoBoundary) {
    const LabelImage l(6, 7, 2);
    const BinaryImage b = boundary_map(l);
    EXPECT_EQ(b.count(), 0u);
    EXPECT_EQ(boundary_gradient_norm(b), 0.0);
}

TEST(Boundary, IdenticalSegmentations) {
    const LabelImage l = vertical_split(8, 4);
    for (std::size_t tol : {0u, 1u, 3u}) EXPECT_EQ(boundary_accuracy(l, l, tol), 1.0);
    EXPECT_EQ(boundary_map(l).count(), 16u);
}

TEST(Boundary, ShiftedSplitEnumeration) {
    const LabelImage truth = vertical_split(8, 4);
    const LabelImage pred = vertical_split(8, 5);
    EXPECT_EQ(boundary_accuracy(pred, truth, 1), 1.0);
    // Predicted boundary columns 4 and 5; only column 4 coincides with the
    // true boundary (columns 3 and 4).
    EXPECT_EQ(boundary_accuracy(pred, truth, 0), 0.5);
}

TEST(Boundary, AccuracyIsAsymmetric) {
    const LabelImage truth = vertical_split(8, 4);
    LabelImage pred = truth;
    pred.at(1, 1) = 1;
    EXPECT_LT(boundary_accuracy(pred, truth, 0), 1.0);
    EXPECT_EQ(boundary_accuracy(truth, pred, 0), 1.0);
}

TEST(Temporal, PerfectAndBlind) {
    std::vector<LabelImage> truth{LabelImage(4, 4, 0), LabelImage(4, 4, 1), LabelImage(4, 4, 0)};
    const TemporalMetrics perfect = temporal_metrics(truth, truth);
    EXPECT_EQ(perfect.temporal_accuracy, 1.0);
    EXPECT_EQ(perfect.prediction_error, 0.0);
    EXPECT_EQ(perfect.temporal_iou, 1.0);
    const std::vector<LabelImage> constant(3, LabelImage(4, 4, 0));
    EXPECT_EQ(temporal_metrics(constant, truth).temporal_iou, 0.0);
    EXPECT_THROW(temporal_metrics(std::span(constant).first(1), std::span(truth).first(1)), std::invalid_argument);
}

TEST(Temporal, HalfDetectedChange) {
    const std::vector<LabelImage> truth{LabelImage(2, 2, 0), LabelImage(2, 2, 1)};
    LabelImage half(2, 2, 0);
    half.labels[0] = half.labels[1] = 1;
    const std::vector<LabelImage> pred{LabelImage(2, 2, 0), half};
    EXPECT_EQ(temporal_metrics(pred, truth).temporal_iou, 0.5);
}

TEST(Mape, SkipsZeroTruth) {
    const std::vector<double> truth{2.0, 0.0, 4.0}, pred{1.0, 5.0, 5.0};
    EXPECT_DOUBLE_EQ(mean_absolute_percentage_error(pred, truth), (0.5 + 0.25) / 2);
    EXPECT_THROW(mean_absolute_percentage_error(std::vector<double>{1.0}, std::vector<double>{0.0}),
                 std::invalid_argument);
}

TEST(Metrics, OutputsInUnitInterval) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        LabelImage a(9, 9), b(9, 9);
        for (std::size_t i = 0; i < 81; ++i) {
            a.labels[i] = static_cast<std::uint16_t>(rng.below(3));
            b.labels[i] = static_cast<std::uint16_t>(rng.below(3));
        }
        for (double v : {mean_iou(a, b, 3), boundary_accuracy(a, b, 1)}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

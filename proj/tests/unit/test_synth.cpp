#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "geofuse/synth.hpp"

using namespace geofuse;

namespace {

SceneSpec clean_spec(std::uint64_t seed) {
    SceneSpec s;
    s.height = 32;
    s.width = 32;
    s.noise_sigma = 0.0;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(Synth, NoiselessUnmixedPixelsEqualSignatures) {
    SceneSpec spec = clean_spec(1);
    spec.mixed_width = 0;
    const Scene scene = synth_scene(spec);
    const auto sig = spec.resolved_signatures();
    for (std::size_t i = 0; i < spec.height; ++i)
        for (std::size_t j = 0; j < spec.width; ++j)
            for (std::size_t b = 0; b < spec.bands; ++b)
                EXPECT_EQ(scene.image.at(b, i, j), sig[scene.labels.at(i, j)][b]);
    for (auto m : scene.mixed) EXPECT_EQ(m, 0);
}

TEST(Synth, SameSeedSameScene) {
    SceneSpec spec = clean_spec(2);
    spec.noise_sigma = 0.2;
    const Scene a = synth_scene(spec), b = synth_scene(spec);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.mixed, b.mixed);
    spec.seed = 3;
    EXPECT_NE(synth_scene(spec).image, a.image);
}

TEST(Synth, HalfSplitMixedColumns) {
    SceneSpec spec = clean_spec(4);
    spec.classes = 2;
    spec.layout = SceneLayout::HalfSplit;
    spec.mixed_width = 1;
    const Scene scene = synth_scene(spec);
    for (std::size_t i = 0; i < spec.height; ++i)
        for (std::size_t j = 0; j < spec.width; ++j) {
            const bool expect = j == spec.width / 2 - 1 || j == spec.width / 2;
            EXPECT_EQ(scene.mixed[i * spec.width + j] != 0, expect) << i << "," << j;
            EXPECT_EQ(scene.labels.at(i, j), j < spec.width / 2 ? 0 : 1);
        }
}

TEST(Synth, NearestSignatureIsExactWithoutNoise) {
    const SceneSpec spec = clean_spec(5);
    const Scene scene = synth_scene(spec);
    const auto sig = spec.resolved_signatures();
    std::size_t checked = 0;
    for (std::size_t p = 0; p < scene.image.pixels(); ++p) {
        if (scene.mixed[p]) continue;
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < spec.classes; ++c) {
            double d = 0.0;
            for (std::size_t b = 0; b < spec.bands; ++b) {
                const double r = scene.image.band(b)[p] - sig[c][b];
                d += r * r;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        EXPECT_EQ(best, scene.labels.labels[p]);
        ++checked;
    }
    EXPECT_GT(checked, 0u);
}

TEST(Synth, ClassPriorsNearUniformExpectation) {
    SceneSpec spec;
    std::vector<double> share(spec.classes, 0.0);
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        spec.seed = static_cast<std::uint64_t>(s);
        const LabelImage l = synth_labels(spec);
        for (auto v : l.labels) share[v] += 1.0 / static_cast<double>(l.labels.size() * seeds);
    }
    for (double v : share) EXPECT_NEAR(v, 1.0 / static_cast<double>(spec.classes), 0.05);
}

TEST(Synth, SignaturesAreDistinct) {
    const auto sig = default_signatures(8, 9);
    ASSERT_EQ(sig.size(), 8u);
    for (std::size_t a = 0; a < 8; ++a)
        for (std::size_t b = a + 1; b < 8; ++b) EXPECT_NE(sig[a], sig[b]);
    EXPECT_THROW(default_signatures(9, 6), std::invalid_argument);
}

TEST(Timeseries, IdentityRuleFreezesLabels) {
    SceneSpec spec = clean_spec(6);
    const auto frames = synth_timeseries(spec, 5, TransitionRule{});
    for (const auto& f : frames) EXPECT_EQ(f.labels, frames[0].labels);
}

TEST(Timeseries, PeriodicRule) {
    SceneSpec spec = clean_spec(7);
    TransitionRule rule;
    rule.kind = TransitionKind::Annex;
    rule.grower = 1;
    rule.period = 4;
    const auto frames = synth_timeseries(spec, 12, rule);
    for (std::size_t t = 0; t + 4 < frames.size(); ++t) EXPECT_EQ(frames[t].labels, frames[t + 4].labels);
    EXPECT_NE(frames[0].labels, frames[1].labels);
}

TEST(Timeseries, PerFrameNoiseDiffers) {
    SceneSpec spec = clean_spec(8);
    spec.noise_sigma = 0.1;
    const auto frames = synth_timeseries(spec, 3, TransitionRule{});
    EXPECT_NE(frames[0].image, frames[1].image);
}

TEST(Annex, RingWidthOneChangesThePerimeterBand) {
    const LabelImage start = synth_labels(clean_spec(9));
    const std::uint16_t grower = start.labels[start.labels.size() / 2];
    std::size_t band = 0;
    for (std::size_t i = 0; i < start.height; ++i)
        for (std::size_t j = 0; j < start.width; ++j) {
            if (start.at(i, j) == grower) continue;
            const bool touches = (i > 0 && start.at(i - 1, j) == grower) ||
                                 (i + 1 < start.height && start.at(i + 1, j) == grower) ||
                                 (j > 0 && start.at(i, j - 1) == grower) ||
                                 (j + 1 < start.width && start.at(i, j + 1) == grower);
            band += touches;
        }
    const LabelImage next = annex_step(start, grower, 1);
    std::size_t changed = 0;
    for (std::size_t p = 0; p < start.labels.size(); ++p) {
        changed += start.labels[p] != next.labels[p];
        if (start.labels[p] != next.labels[p]) EXPECT_EQ(next.labels[p], grower);
    }
    EXPECT_EQ(changed, band);
    EXPECT_GT(changed, 0u);
}

TEST(SceneSpec, ValidationRejectsDegenerateSpecs) {
    SceneSpec spec;
    spec.classes = 0;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec = {};
    spec.blob_radius_min = 5;
    spec.blob_radius_max = 2;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec = {};
    spec.noise_sigma = -1;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    TransitionRule rule;
    rule.kind = TransitionKind::Annex;
    rule.grower = 9;
    EXPECT_THROW(rule.validate(4), std::invalid_argument);
}

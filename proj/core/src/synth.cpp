#include "geofuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geofuse/rng.hpp"

namespace geofuse {

namespace {

constexpr double kBaseSignatures[kMaxLandCoverClasses][6] = {
    {0.30, 0.28, 0.27, 0.30, 0.35, 0.33},  // urban
    {0.04, 0.07, 0.04, 0.40, 0.20, 0.10},  // forest
    {0.08, 0.06, 0.04, 0.02, 0.01, 0.01},  // water
    {0.06, 0.10, 0.08, 0.50, 0.28, 0.15},  // agriculture
    {0.20, 0.24, 0.28, 0.32, 0.40, 0.36},  // bare soil
    {0.05, 0.08, 0.06, 0.22, 0.10, 0.05},  // wetlands
    {0.25, 0.25, 0.25, 0.28, 0.30, 0.28},  // built-up
    {0.07, 0.12, 0.09, 0.35, 0.30, 0.18},  // grassland
};

void majority_smooth(LabelImage& img, std::size_t classes) {
    LabelImage out = img;
    std::vector<int> votes(classes);
    for (std::size_t i = 0; i < img.height; ++i) {
        for (std::size_t j = 0; j < img.width; ++j) {
            std::fill(votes.begin(), votes.end(), 0);
            for (std::size_t a = i > 0 ? i - 1 : 0; a <= std::min(img.height - 1, i + 1); ++a)
                for (std::size_t b = j > 0 ? j - 1 : 0; b <= std::min(img.width - 1, j + 1); ++b)
                    ++votes[img.at(a, b)];
            const auto own = img.at(i, j);
            std::size_t best = own;
            for (std::size_t c = 0; c < classes; ++c)
                if (votes[c] > votes[best]) best = c;
            out.at(i, j) = static_cast<std::uint16_t>(best);
        }
    }
    img = std::move(out);
}

}  // namespace

std::vector<std::vector<double>> default_signatures(std::size_t classes, std::size_t bands) {
    if (classes > kMaxLandCoverClasses) throw std::invalid_argument("at most 8 land-cover classes");
    std::vector<std::vector<double>> sig(classes, std::vector<double>(bands));
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t b = 0; b < bands; ++b)
            sig[c][b] = kBaseSignatures[c][b % 6] * (1.0 + 0.1 * static_cast<double>(b / 6));
    return sig;
}

std::vector<std::vector<double>> SceneSpec::resolved_signatures() const {
    return signatures.empty() ? default_signatures(classes, bands) : signatures;
}

void SceneSpec::validate() const {
    if (classes < 2) throw std::invalid_argument("scene needs at least 2 classes");
    if (classes > kMaxLandCoverClasses) throw std::invalid_argument("scene supports at most 8 classes");
    if (bands == 0 || height == 0 || width == 0) throw std::invalid_argument("scene has zero area or bands");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
    if (!(blob_radius_min > 0.0) || blob_radius_max < blob_radius_min) {
        throw std::invalid_argument("blob radii must satisfy 0 < min <= max");
    }
    if (layout == SceneLayout::Blobs && background_sites == 0) {
        throw std::invalid_argument("blob layout needs at least one background site");
    }
    const auto sig = resolved_signatures();
    if (sig.size() != classes) throw std::invalid_argument("one signature per class required");
    for (const auto& s : sig) {
        if (s.size() != bands) throw std::invalid_argument("signature length must equal band count");
    }
    for (std::size_t a = 0; a < classes; ++a)
        for (std::size_t b = a + 1; b < classes; ++b)
            if (sig[a] == sig[b]) {
                throw std::invalid_argument("signatures of classes " + std::to_string(a) + " and " +
                                            std::to_string(b) + " are identical");
            }
}

LabelImage synth_labels(const SceneSpec& spec) {
    spec.validate();
    LabelImage img(spec.height, spec.width);
    if (spec.layout == SceneLayout::HalfSplit) {
        for (std::size_t i = 0; i < spec.height; ++i)
            for (std::size_t j = 0; j < spec.width; ++j) img.at(i, j) = j < spec.width / 2 ? 0 : 1;
        return img;
    }

    Rng rng(derive_seed(spec.seed, "labels"));
    const double h = static_cast<double>(spec.height);
    const double w = static_cast<double>(spec.width);

    struct Site {
        double y, x;
        std::uint16_t label;
    };
    std::vector<Site> sites;
    for (std::size_t s = 0; s < spec.background_sites; ++s) {
        sites.push_back({rng.uniform(0.0, h), rng.uniform(0.0, w), static_cast<std::uint16_t>(rng.below(spec.classes))});
    }
    for (std::size_t i = 0; i < spec.height; ++i) {
        for (std::size_t j = 0; j < spec.width; ++j) {
            const double y = static_cast<double>(i) + 0.5, x = static_cast<double>(j) + 0.5;
            double best = INFINITY;
            for (const auto& s : sites) {
                const double d = (s.y - y) * (s.y - y) + (s.x - x) * (s.x - x);
                if (d < best) {
                    best = d;
                    img.at(i, j) = s.label;
                }
            }
        }
    }

    for (std::size_t b = 0; b < spec.blob_count; ++b) {
        const double cy = rng.uniform(0.0, h), cx = rng.uniform(0.0, w);
        const double ry = rng.uniform(spec.blob_radius_min, spec.blob_radius_max);
        const double rx = rng.uniform(spec.blob_radius_min, spec.blob_radius_max);
        const auto label = static_cast<std::uint16_t>(rng.below(spec.classes));
        for (std::size_t i = 0; i < spec.height; ++i) {
            const double dy = (static_cast<double>(i) + 0.5 - cy) / ry;
            if (std::abs(dy) > 1.0) continue;
            for (std::size_t j = 0; j < spec.width; ++j) {
                const double dx = (static_cast<double>(j) + 0.5 - cx) / rx;
                if (dx * dx + dy * dy <= 1.0) img.at(i, j) = label;
            }
        }
    }
    for (std::size_t p = 0; p < spec.smoothing_passes; ++p) majority_smooth(img, spec.classes);
    return img;
}

Scene render_scene(const SceneSpec& spec, const LabelImage& labels, std::uint64_t noise_seed) {
    spec.validate();
    if (labels.height != spec.height || labels.width != spec.width) {
        throw std::invalid_argument("label map does not match the scene size");
    }
    const auto sig = spec.resolved_signatures();
    const std::size_t H = spec.height, W = spec.width, r = spec.mixed_width;
    Scene scene{RasterStack(spec.bands, H, W), labels, std::vector<std::uint8_t>(H * W, 0)};

    std::vector<double> blend(spec.bands);
    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
            const auto own = labels.at(i, j);
            if (own >= spec.classes) throw std::invalid_argument("label outside the class range");
            const std::size_t ilo = i >= r ? i - r : 0, ihi = std::min(H - 1, i + r);
            const std::size_t jlo = j >= r ? j - r : 0, jhi = std::min(W - 1, j + r);
            bool mixed = false;
            std::fill(blend.begin(), blend.end(), 0.0);
            for (std::size_t a = ilo; a <= ihi; ++a) {
                for (std::size_t b = jlo; b <= jhi; ++b) {
                    const auto l = labels.at(a, b);
                    mixed = mixed || l != own;
                    for (std::size_t k = 0; k < spec.bands; ++k) blend[k] += sig[l][k];
                }
            }
            const double n = static_cast<double>((ihi - ilo + 1) * (jhi - jlo + 1));
            scene.mixed[i * W + j] = mixed ? 1 : 0;
            for (std::size_t k = 0; k < spec.bands; ++k) scene.image.at(k, i, j) = mixed ? blend[k] / n : sig[own][k];
        }
    }
    if (spec.noise_sigma > 0.0) {
        Rng rng(noise_seed);
        for (double& v : scene.image.values()) v += rng.normal(0.0, spec.noise_sigma);
    }
    return scene;
}

Scene synth_scene(const SceneSpec& spec) {
    return render_scene(spec, synth_labels(spec), derive_seed(spec.seed, "noise"));
}

void TransitionRule::validate(std::size_t classes) const {
    if (kind == TransitionKind::Annex) {
        if (grower >= classes) throw std::invalid_argument("annex grower class out of range");
        if (ring_width == 0) throw std::invalid_argument("annex ring width must be positive");
    }
}

LabelImage annex_step(const LabelImage& labels, std::uint16_t grower, std::size_t ring_width) {
    const std::size_t H = labels.height, W = labels.width;
    // Manhattan distance to the nearest grower pixel by two-pass chamfer.
    const std::size_t far = H + W + 1;
    std::vector<std::size_t> dist(H * W, far);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
            if (labels.at(i, j) == grower) dist[i * W + j] = 0;
    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
            auto& d = dist[i * W + j];
            if (i > 0) d = std::min(d, dist[(i - 1) * W + j] + 1);
            if (j > 0) d = std::min(d, dist[i * W + j - 1] + 1);
        }
    }
    for (std::size_t i = H; i-- > 0;) {
        for (std::size_t j = W; j-- > 0;) {
            auto& d = dist[i * W + j];
            if (i + 1 < H) d = std::min(d, dist[(i + 1) * W + j] + 1);
            if (j + 1 < W) d = std::min(d, dist[i * W + j + 1] + 1);
        }
    }
    LabelImage out = labels;
    for (std::size_t p = 0; p < H * W; ++p)
        if (dist[p] <= ring_width) out.labels[p] = grower;
    return out;
}

std::vector<Scene> synth_timeseries(const SceneSpec& spec, std::size_t steps, const TransitionRule& rule) {
    if (steps < 2) throw std::invalid_argument("time series needs at least 2 steps");
    spec.validate();
    rule.validate(spec.classes);

    std::vector<LabelImage> maps{synth_labels(spec)};
    const std::size_t distinct = rule.period > 0 ? std::min(rule.period, steps) : steps;
    while (maps.size() < distinct) {
        maps.push_back(rule.kind == TransitionKind::Annex ? annex_step(maps.back(), rule.grower, rule.ring_width)
                                                          : maps.back());
    }
    std::vector<Scene> frames;
    for (std::size_t t = 0; t < steps; ++t) {
        const LabelImage& map = maps[rule.period > 0 ? t % rule.period : t];
        frames.push_back(render_scene(spec, map, derive_seed(spec.seed, "frame" + std::to_string(t))));
    }
    return frames;
}

}  // namespace geofuse

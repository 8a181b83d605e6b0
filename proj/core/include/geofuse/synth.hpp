#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "geofuse/raster.hpp"

namespace geofuse {

inline constexpr std::size_t kMaxLandCoverClasses = 8;

inline constexpr std::array<const char*, kMaxLandCoverClasses> kLandCoverNames{
    "Urban Areas", "Forest",  "Water Bodies",   "Agricultural Land",
    "Bare Soil",   "Wetlands", "Built-up Areas", "Grassland"};

/// Reference reflectance-like signatures, [classes][bands]. Bands beyond the
/// sixth are scaled copies of the first six.
std::vector<std::vector<double>> default_signatures(std::size_t classes, std::size_t bands);

enum class SceneLayout { Blobs, HalfSplit };

struct SceneSpec {
    std::size_t classes = 4;
    std::size_t bands = 6;
    std::size_t height = 64;
    std::size_t width = 64;
    /// [classes][bands]; empty selects default_signatures.
    std::vector<std::vector<double>> signatures;
    SceneLayout layout = SceneLayout::Blobs;
    /// Voronoi background sites and ellipse blobs per scene.
    std::size_t background_sites = 8;
    std::size_t blob_count = 10;
    double blob_radius_min = 3.0;
    double blob_radius_max = 10.0;
    std::size_t smoothing_passes = 1;
    double noise_sigma = 0.0;
    /// Pixels within this Chebyshev distance of another class are mixed.
    std::size_t mixed_width = 1;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on a degenerate spec.
    void validate() const;
    std::vector<std::vector<double>> resolved_signatures() const;
};

struct Scene {
    RasterStack image;
    LabelImage labels;
    /// 1 where the spectrum is a blend of several classes.
    std::vector<std::uint8_t> mixed;
};

/// Class map only, before spectra are rendered.
LabelImage synth_labels(const SceneSpec& spec);

/// Spectra for a label map: box blend of class signatures over the
/// (2w+1)^2 window at mixed pixels, then Gaussian noise from `noise_seed`.
Scene render_scene(const SceneSpec& spec, const LabelImage& labels, std::uint64_t noise_seed);

Scene synth_scene(const SceneSpec& spec);

enum class TransitionKind { Identity, Annex };

struct TransitionRule {
    TransitionKind kind = TransitionKind::Identity;
    /// Annex: class that grows into its 4-neighbour ring each step.
    std::uint16_t grower = 0;
    std::size_t ring_width = 1;
    /// When > 0, frame t uses the map after (t mod period) steps.
    std::size_t period = 0;

    void validate(std::size_t classes) const;
};

/// One annexation step: every pixel of another class within 4-neighbour
/// (Manhattan) distance `ring_width` of the grower joins it.
LabelImage annex_step(const LabelImage& labels, std::uint16_t grower, std::size_t ring_width);

/// T frames; spectra are re-rendered per frame with a per-frame noise seed.
std::vector<Scene> synth_timeseries(const SceneSpec& spec, std::size_t steps, const TransitionRule& rule);

}  // namespace geofuse

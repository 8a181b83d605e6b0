#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "geofuse/metrics.hpp"
#include "geofuse/raster.hpp"
#include "geofuse/search.hpp"
#include "geofuse/synth.hpp"
#include "geofuse/trainer.hpp"

namespace geofuse::cli {

/// Fitted preprocessing: per-band stretch ranges and the PCA basis.
struct PreprocessModel {
    std::vector<std::pair<double, double>> ranges;  // empty when stretch is off
    PcaModel pca;
};

struct Preprocessed {
    RasterStack image;
    PreprocessModel model;
};

/// Optional equalization, optional contrast stretch, then PCA fitted on the
/// result.
Preprocessed preprocess(const RasterStack& image, const PreprocessSettings& settings);

/// Applies an already fitted model (equalization is recomputed per image).
RasterStack apply_preprocess(const RasterStack& image, const PreprocessSettings& settings,
                             const PreprocessModel& model);

std::string serialize_preprocess(const PreprocessModel& model);
PreprocessModel parse_preprocess(const std::string& text);

/// [bands, P, P] window whose rows span i - P/2 + 1 .. i + P/2, edges
/// replicated.
Tensor extract_patch(const RasterStack& image, std::size_t i, std::size_t j, std::size_t patch_size);

/// `count` distinct pixels drawn without replacement.
std::vector<LabeledPatch> sample_patches(const RasterStack& image, const LabelImage& labels,
                                         std::size_t patch_size, std::size_t count, std::uint64_t seed);

struct ClassificationData {
    CnnArch arch;
    Split<LabeledPatch> split;
};

ClassificationData build_dataset(const ExperimentConfig& config, const RasterStack& preprocessed,
                                 const LabelImage& labels);

/// Pooled feature vector (input of the dense head) in eval mode.
std::vector<double> pooled_features(const CnnClassifier& model, const Tensor& patch);

/// Mean over classes of the per-class feature variance (averaged over
/// feature dimensions).
double class_feature_variance(const CnnClassifier& model, std::span<const LabeledPatch> samples);

/// Composite objective value for a trained candidate.
double composite_value(const ExperimentConfig& config, const CnnClassifier& model, const HyperParams& hp,
                       const TrainReport& report, std::span<const LabeledPatch> validation);

struct CandidateLog {
    std::vector<double> point;
    HyperParams hp;
    double fitness = 0.0;
    std::uint64_t macs = 0;
};

struct SearchOutcome {
    std::string algorithm;
    SearchResult result;
    HyperParams best;
    std::uint64_t total_macs = 0;
};

/// Runs the configured metaheuristic; every candidate is trained with the
/// same training seed so the objective is a deterministic function of the
/// hyperparameters.
SearchOutcome run_search(const ExperimentConfig& config, const ClassificationData& data,
                         const std::string& algorithm, std::uint64_t search_seed, std::uint64_t train_seed);

struct SegmentationResult {
    LabelImage predicted;
    std::vector<double> top_probability;
};

SegmentationResult segment(const CnnClassifier& model, const RasterStack& image);

/// Per-pixel scalar sequences from band `band` of the frames.
std::vector<SequenceSample> forecast_sequences(const std::vector<Scene>& frames, const TimeseriesSettings& ts,
                                               std::uint64_t seed);

/// Prediction error (MAPE fraction) of a forecaster on samples.
double forecast_error(const LstmForecaster& model, std::span<const SequenceSample> samples);

struct RunEvaluation {
    MetricReport test;
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
    double mean_iou = 0.0;
    double boundary_accuracy = 0.0;
    double boundary_gradient_norm = 0.0;
    double mixed_pixels = 0.0;
    double pixel_agreement = 0.0;
    TemporalMetrics temporal;
    double forecast_error = 0.0;
    std::vector<std::pair<double, double>> change_sensitivity;  // (t, changed-mask IoU)
};

struct TemporalData {
    std::vector<RasterStack> frames;  // preprocessed
    std::vector<LabelImage> labels;
    Split<SequenceSample> sequences;
};

TemporalData build_temporal_data(const ExperimentConfig& config, const std::vector<Scene>& frames,
                                 const PreprocessModel& model);

RunEvaluation evaluate_run(const ExperimentConfig& config, const CnnClassifier& cnn,
                           const LstmForecaster& forecaster, const ClassificationData& data,
                           const RasterStack& scene, const LabelImage& labels, const TemporalData& temporal);

}  // namespace geofuse::cli

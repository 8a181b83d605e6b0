#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "geofuse/raster.hpp"

namespace geofuse {

/// counts[truth][prediction].
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);
    ConfusionMatrix(std::size_t classes, std::span<const std::size_t> truths,
                    std::span<const std::size_t> predictions);

    void add(std::size_t truth, std::size_t prediction, std::uint64_t count = 1);

    std::size_t classes() const noexcept { return classes_; }
    std::uint64_t at(std::size_t truth, std::size_t prediction) const {
        return counts_.at(truth * classes_ + prediction);
    }
    std::uint64_t total() const noexcept { return total_; }
    std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
    std::uint64_t false_negatives(std::size_t c) const;
    std::uint64_t false_positives(std::size_t c) const;
    std::uint64_t true_negatives(std::size_t c) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t classes_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct MetricReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double specificity = 0.0;
    double auc = 0.0;
    std::vector<double> per_class_accuracy;  // recall of each class
    /// Classes whose precision, recall or specificity had a zero denominator.
    std::vector<std::size_t> zero_division_classes;
};

/// Accuracy is sum TP / sum (TP + FN); the rest are macro averages, with F1
/// the harmonic mean of macro precision and macro recall. Throws
/// std::invalid_argument on an empty matrix. `auc` is left at 0.
MetricReport classification_metrics(const ConfusionMatrix& cm);

struct AucResult {
    double macro = 0.0;
    std::vector<double> per_class;          // NaN for excluded classes
    std::vector<std::size_t> excluded;      // no positives or no negatives
};

/// One-vs-rest Mann-Whitney AUC with ties counted 1/2, macro-averaged over
/// evaluable classes. scores is [samples][classes].
AucResult auc_roc(std::span<const std::vector<double>> scores, std::span<const std::size_t> truths);
/// Binary AUC of positive vs negative scores.
double auc_binary(std::span<const double> positives, std::span<const double> negatives);

/// |A & B| / |A | B|; two empty masks give 1.
double iou(std::span<const bool> pred, std::span<const bool> truth);
double iou(const std::vector<bool>& pred, const std::vector<bool>& truth);
/// Mean over classes 0..classes-1 of the per-class mask IoU.
double mean_iou(const LabelImage& pred, const LabelImage& truth, std::size_t classes);

/// Row-major binary image.
struct BinaryImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t i, std::size_t j) const { return pixels[i * width + j]; }
    std::size_t count() const;
};

/// Pixels whose label differs from any 4-neighbour.
BinaryImage boundary_map(const LabelImage& seg);
/// L2 norm over the image of the central-difference gradient field
/// (one-sided at the edges).
double boundary_gradient_norm(const BinaryImage& boundary);
/// Fraction of predicted boundary pixels within Chebyshev distance `tol` of
/// a true boundary pixel. No predicted boundary: 1 if the truth has none
/// either, else 0.
double boundary_accuracy(const LabelImage& pred, const LabelImage& truth, std::size_t tol);

struct TemporalMetrics {
    double temporal_accuracy = 0.0;
    double prediction_error = 0.0;
    double temporal_iou = 0.0;
};

/// Class-map series. temporal_iou is the mean over steps t >= 1 of the IoU
/// of the changed-pixel masks; throws for fewer than two frames.
TemporalMetrics temporal_metrics(std::span<const LabelImage> pred, std::span<const LabelImage> truth);

/// Mean absolute percentage error, as a fraction. Pairs with truth == 0
/// are skipped; throws if none remain.
double mean_absolute_percentage_error(std::span<const double> pred, std::span<const double> truth);

}  // namespace geofuse

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geofuse/recurrent.hpp"
#include "geofuse/rng.hpp"
#include "geofuse/tensor.hpp"

namespace geofuse {

enum class Regularization { L1, L2, None };
enum class OptimizerKind { Adam, RMSProp, SGD };

std::string_view to_string(Regularization r);
std::string_view to_string(OptimizerKind k);
std::optional<Regularization> parse_regularization(std::string_view s);
std::optional<OptimizerKind> parse_optimizer(std::string_view s);

/// One decoded hyperparameter assignment.
struct HyperParams {
    double learning_rate = 0.01;
    std::size_t num_filters = 32;
    std::size_t kernel_size = 3;
    std::size_t batch_size = 32;
    double dropout_rate = 0.2;
    std::size_t epochs = 100;
    Regularization regularization = Regularization::L2;
    OptimizerKind optimizer = OptimizerKind::Adam;

    /// Baseline column of the tuning table.
    static HyperParams baseline() { return {}; }

    /// Throws std::invalid_argument on a structurally invalid assignment
    /// (zero sizes, even kernel, dropout outside [0,1), negative rate).
    void validate() const;

    friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

std::string describe(const HyperParams& hp);

// ---------------------------------------------------------------------------
// Optimizer steps

struct RmsPropStep {
    Tensor theta;
    Tensor avg_sq;
};

/// avg_sq' = rho*avg_sq + (1-rho)*g^2;  theta' = theta - eta*g/sqrt(avg_sq' + eps).
RmsPropStep rmsprop_step(const Tensor& theta, const Tensor& grad, const Tensor& avg_sq, double eta,
                         double rho = 0.9, double eps = 1e-8);

Tensor sgd_step(const Tensor& theta, const Tensor& grad, double eta);

struct AdamMoments {
    Tensor first;
    Tensor second;
    std::size_t step = 0;
};

struct AdamStep {
    Tensor theta;
    AdamMoments moments;
};

AdamStep adam_step(const Tensor& theta, const Tensor& grad, const AdamMoments& moments, double eta,
                   double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct OptimizerSettings {
    double rms_rho = 0.9;
    double rms_eps = 1e-8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

/// Stateful optimizer over a fixed list of parameter tensors. Updates in
/// place using the same arithmetic as the free step functions.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, std::vector<Tensor*> params,
              OptimizerSettings settings = {});

    void step(std::span<const Tensor> grads);
    OptimizerKind kind() const { return kind_; }

private:
    OptimizerKind kind_;
    double lr_;
    std::vector<Tensor*> params_;
    OptimizerSettings settings_;
    std::vector<Tensor> first_;
    std::vector<Tensor> second_;
    std::size_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Dropout and regularization

enum class Mode { Train, Eval };

struct DropoutResult {
    Tensor output;
    Tensor mask;  // 0 or 1/(1-rate) per element; all ones in eval mode
};

/// Inverted dropout.
DropoutResult dropout_apply(const Tensor& x, double rate, Mode mode, Rng& rng);

struct RegularizationTerm {
    double penalty = 0.0;
    std::vector<Tensor> gradients;  // one per parameter tensor
};

/// L2: lambda*sum||theta||^2, grad 2*lambda*theta. L1: lambda*sum|theta|,
/// subgradient lambda*sign(theta) with sign(0) = 0. None: zero.
RegularizationTerm regularization_term(std::span<const Tensor* const> params, Regularization kind,
                                       double lambda);

// ---------------------------------------------------------------------------
// Dataset splitting

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Seeded shuffle, then floor(15%) validation, floor(15%) test, remainder train.
SplitIndices split_indices(std::size_t count, std::uint64_t seed);

template <typename T>
struct Split {
    std::vector<T> train;
    std::vector<T> validation;
    std::vector<T> test;
};

template <typename T>
Split<T> split_dataset(const std::vector<T>& samples, std::uint64_t seed) {
    const SplitIndices idx = split_indices(samples.size(), seed);
    Split<T> out;
    for (std::size_t i : idx.train) out.train.push_back(samples[i]);
    for (std::size_t i : idx.validation) out.validation.push_back(samples[i]);
    for (std::size_t i : idx.test) out.test.push_back(samples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Models and training

struct LabeledPatch {
    Tensor patch;  // [C, P, P]
    std::size_t label = 0;
};

/// conv(kernel_size, num_filters) -> ReLU -> 2x2 max pool -> dropout -> dense -> softmax.
struct CnnArch {
    std::size_t in_channels = 0;
    std::size_t patch_size = 4;  // must be even
    std::size_t num_classes = 0;
};

struct CnnClassifier {
    CnnArch arch;
    Conv2DLayer conv;
    DenseLayer head;

    static CnnClassifier init(const CnnArch& arch, const HyperParams& hp, Rng& rng);

    Tensor logits(const Tensor& patch) const;
    std::size_t predict(const Tensor& patch) const;
    Tensor probabilities(const Tensor& patch) const;
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;
};

struct SequenceSample {
    std::vector<double> history;  // scalar observations, oldest first
    double target = 0.0;          // next value
};

struct LstmArch {
    std::size_t hidden = 8;
};

/// Scalar one-step-ahead forecaster: LSTM over the history, dense head on
/// the final hidden state.
struct LstmForecaster {
    LstmParams lstm;
    DenseLayer head;

    static LstmForecaster init(const LstmArch& arch, Rng& rng);

    double predict(std::span<const double> history) const;
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;
};

struct TrainOptions {
    double lambda = 1e-4;  // regularization strength for L1/L2
    OptimizerSettings optimizer;
    std::size_t plateau_window = 5;
    double plateau_threshold = 1e-4;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::optional<double> train_accuracy;
    std::optional<double> validation_accuracy;
    std::optional<double> test_accuracy;
    std::size_t convergence_epoch = 0;
    /// Multiply-accumulates spent, a deterministic stand-in for training time.
    std::uint64_t work_macs = 0;
    double wall_seconds = 0.0;

    double final_validation_loss() const { return validation_loss.back(); }
    /// Every field except wall time.
    bool same_outcome(const TrainReport& other) const;
};

/// First 1-based epoch e with val[e-window] - val[e] < threshold; the last
/// epoch when no such plateau occurs.
std::size_t convergence_epoch(std::span<const double> validation_loss, std::size_t window = 5,
                              double threshold = 1e-4);

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, std::size_t batch, double loss);
    std::size_t epoch;
    std::size_t batch;
};

struct TrainedCnn {
    CnnClassifier model;
    TrainReport report;
};

struct TrainedForecaster {
    LstmForecaster model;
    TrainReport report;
};

/// Mini-batch training with the optimizer, dropout, and regularization named
/// by `hp`; cross-entropy data loss. Deterministic given `seed`.
TrainedCnn train_model(const CnnArch& arch, const HyperParams& hp,
                       const Split<LabeledPatch>& data, std::uint64_t seed,
                       const TrainOptions& options = {});

/// Same loop for the forecaster with the squared-error data loss. Only the
/// learning rate, batch size, dropout, epochs, regularization, and optimizer
/// fields of `hp` apply.
TrainedForecaster train_model(const LstmArch& arch, const HyperParams& hp,
                              const Split<SequenceSample>& data, std::uint64_t seed,
                              const TrainOptions& options = {});

double accuracy(const CnnClassifier& model, std::span<const LabeledPatch> samples);
double mean_cross_entropy(const CnnClassifier& model, std::span<const LabeledPatch> samples);
double mean_squared_error(const LstmForecaster& model, std::span<const SequenceSample> samples);

}  // namespace geofuse

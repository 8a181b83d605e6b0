#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace geofuse::cli {

Preprocessed preprocess(const RasterStack& image, const PreprocessSettings& settings) {
    RasterStack work = settings.equalize ? equalize_stack(image, settings.equalize_levels) : image;
    PreprocessModel model;
    if (settings.stretch) {
        for (std::size_t b = 0; b < work.bands(); ++b) model.ranges.push_back(work.band_range(b));
        work = stretch_stack(work);
    }
    model.pca = pca_fit(work, settings.pca_retain, settings.d_max);
    return {pca_transform(work, model.pca), std::move(model)};
}

RasterStack apply_preprocess(const RasterStack& image, const PreprocessSettings& settings,
                             const PreprocessModel& model) {
    RasterStack work = settings.equalize ? equalize_stack(image, settings.equalize_levels) : image;
    if (!model.ranges.empty()) {
        if (model.ranges.size() != work.bands()) throw std::invalid_argument("stretch ranges do not match bands");
        for (std::size_t b = 0; b < work.bands(); ++b) {
            const auto [lo, hi] = model.ranges[b];
            const double span = hi - lo;
            for (double& v : work.band(b)) v = span > 0.0 ? (v - lo) / span : 0.0;
        }
    }
    return pca_transform(work, model.pca);
}

std::string serialize_preprocess(const PreprocessModel& model) {
    std::ostringstream out;
    out << "ranges " << model.ranges.size() << '\n';
    for (const auto& [lo, hi] : model.ranges) out << format_number(lo) << ' ' << format_number(hi) << '\n';
    const auto& p = model.pca;
    out << "pca " << p.bands() << ' ' << p.retained() << '\n';
    for (double m : p.mean) out << format_number(m) << ' ';
    out << '\n';
    for (std::size_t k = 0; k < p.retained(); ++k) {
        out << format_number(p.eigenvalues[k]) << ' ' << format_number(p.explained_ratio[k]);
        for (double c : p.components[k]) out << ' ' << format_number(c);
        out << '\n';
    }
    return out.str();
}

PreprocessModel parse_preprocess(const std::string& text) {
    std::istringstream in(text);
    PreprocessModel model;
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> n) || tag != "ranges") throw std::runtime_error("preprocess model: missing ranges");
    model.ranges.resize(n);
    for (auto& r : model.ranges) in >> r.first >> r.second;
    std::size_t bands = 0, retained = 0;
    if (!(in >> tag >> bands >> retained) || tag != "pca") throw std::runtime_error("preprocess model: missing pca");
    model.pca.mean.resize(bands);
    for (double& m : model.pca.mean) in >> m;
    model.pca.components.assign(retained, std::vector<double>(bands));
    model.pca.eigenvalues.resize(retained);
    model.pca.explained_ratio.resize(retained);
    for (std::size_t k = 0; k < retained; ++k) {
        in >> model.pca.eigenvalues[k] >> model.pca.explained_ratio[k];
        for (double& c : model.pca.components[k]) in >> c;
    }
    if (!in) throw std::runtime_error("preprocess model: truncated");
    return model;
}

Tensor extract_patch(const RasterStack& image, std::size_t i, std::size_t j, std::size_t patch_size) {
    const long p = static_cast<long>(patch_size);
    const long h = static_cast<long>(image.height());
    const long w = static_cast<long>(image.width());
    Tensor out({image.bands(), patch_size, patch_size});
    for (std::size_t b = 0; b < image.bands(); ++b) {
        for (long a = 0; a < p; ++a) {
            const long y = std::clamp(static_cast<long>(i) - p / 2 + 1 + a, 0L, h - 1);
            for (long c = 0; c < p; ++c) {
                const long x = std::clamp(static_cast<long>(j) - p / 2 + 1 + c, 0L, w - 1);
                out.at(b, static_cast<std::size_t>(a), static_cast<std::size_t>(c)) =
                    image.at(b, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            }
        }
    }
    return out;
}

std::vector<LabeledPatch> sample_patches(const RasterStack& image, const LabelImage& labels,
                                         std::size_t patch_size, std::size_t count, std::uint64_t seed) {
    if (labels.height != image.height() || labels.width != image.width()) {
        throw std::invalid_argument("label map does not match the image");
    }
    const std::size_t pixels = image.pixels();
    count = std::min(count, pixels);
    std::vector<std::size_t> order(pixels);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates: the first `count` entries are a uniform sample.
    for (std::size_t k = 0; k < count; ++k) std::swap(order[k], order[k + rng.below(pixels - k)]);
    std::vector<LabeledPatch> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t p = order[k];
        out.push_back({extract_patch(image, p / image.width(), p % image.width(), patch_size), labels.labels[p]});
    }
    return out;
}

ClassificationData build_dataset(const ExperimentConfig& config, const RasterStack& preprocessed,
                                 const LabelImage& labels) {
    ClassificationData data;
    data.arch = CnnArch{preprocessed.bands(), config.data.patch_size, config.scene.classes};
    const auto samples = sample_patches(preprocessed, labels, config.data.patch_size, config.data.samples,
                                        config.stage_seed("samples"));
    data.split = split_dataset(samples, config.stage_seed("split"));
    return data;
}

std::vector<double> pooled_features(const CnnClassifier& model, const Tensor& patch) {
    const Tensor act = relu_forward(conv2d_forward(patch, model.conv));
    const Tensor pooled = maxpool2d_forward(act).output;
    return {pooled.values().begin(), pooled.values().end()};
}

double class_feature_variance(const CnnClassifier& model, std::span<const LabeledPatch> samples) {
    const std::size_t k = model.arch.num_classes;
    std::vector<std::vector<std::vector<double>>> by_class(k);
    for (const auto& s : samples) by_class.at(s.label).push_back(pooled_features(model, s.patch));
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& cls : by_class) {
        if (cls.size() < 2) continue;
        const std::size_t d = cls.front().size();
        double var_sum = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
            double mean = 0.0;
            for (const auto& x : cls) mean += x[f];
            mean /= static_cast<double>(cls.size());
            double v = 0.0;
            for (const auto& x : cls) v += (x[f] - mean) * (x[f] - mean);
            var_sum += v / static_cast<double>(cls.size());
        }
        total += var_sum / static_cast<double>(d);
        ++used;
    }
    return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double composite_value(const ExperimentConfig& config, const CnnClassifier& model, const HyperParams& hp,
                       const TrainReport& report, std::span<const LabeledPatch> validation) {
    CompositeInputs in;
    for (const auto& s : validation) in.true_positives += model.predict(s.patch) == s.label ? 1.0 : 0.0;
    in.true_plus_false_negatives = static_cast<double>(validation.size());
    in.class_feature_variance = {class_feature_variance(model, validation)};
    const auto& sp = config.search.space;
    in.normalized_thetas = {hp.learning_rate / sp.learning_rate.high,
                            static_cast<double>(hp.num_filters) / static_cast<double>(sp.num_filters.high),
                            static_cast<double>(hp.kernel_size) / static_cast<double>(sp.kernel_size.high),
                            static_cast<double>(hp.batch_size) / static_cast<double>(sp.batch_size.high),
                            static_cast<double>(hp.epochs) / static_cast<double>(sp.epochs.high)};
    const double per_epoch = static_cast<double>(report.work_macs) / static_cast<double>(hp.epochs) * 1e-9;
    for (std::size_t e = 1; e <= hp.epochs; ++e) in.costs.push_back(std::exp(1.0) + per_epoch * static_cast<double>(e));
    return composite_objective(in, config.objective.alpha, config.objective.beta, config.objective.lambda);
}

SearchOutcome run_search(const ExperimentConfig& config, const ClassificationData& data,
                         const std::string& algorithm, std::uint64_t search_seed, std::uint64_t train_seed) {
    const SearchSpace& space = config.search.space;
    std::atomic<std::uint64_t> macs{0};
    const bool use_z = config.search.objective == "eq1";
    Objective objective = [&](std::span<const double> point, std::uint64_t) {
        const HyperParams hp = space.decode(point);
        const TrainedCnn trained = train_model(data.arch, hp, data.split, train_seed, config.train);
        macs += trained.report.work_macs;
        if (use_z) return composite_value(config, trained.model, hp, trained.report, data.split.validation);
        return ga_fitness(trained.report.final_validation_loss());
    };

    SearchOptions options;
    options.population = config.search.population;
    options.max_iterations = config.search.iterations;
    options.seed = search_seed;
    options.convergence_tolerance = config.search.tolerance;
    options.plateau_window = config.search.plateau_window;
    options.threads = config.search.threads;
    if (config.search.seed_baseline) options.initial_points.push_back(space.encode(config.baseline));

    SearchOutcome out;
    out.algorithm = algorithm;
    if (algorithm == "pso") {
        out.result = pso_optimize(SearchSpace::kDimensions, objective, options);
    } else if (algorithm == "ga") {
        out.result = ga_optimize(SearchSpace::kDimensions, objective, options);
    } else {
        throw std::invalid_argument("unknown search algorithm '" + algorithm + "'");
    }
    out.best = space.decode(out.result.best_point);
    out.total_macs = macs.load();
    return out;
}

SegmentationResult segment(const CnnClassifier& model, const RasterStack& image) {
    SegmentationResult out{LabelImage(image.height(), image.width()), std::vector<double>(image.pixels())};
    for (std::size_t i = 0; i < image.height(); ++i) {
        for (std::size_t j = 0; j < image.width(); ++j) {
            const Tensor p = model.probabilities(extract_patch(image, i, j, model.arch.patch_size));
            const auto best = std::max_element(p.values().begin(), p.values().end());
            out.predicted.at(i, j) = static_cast<std::uint16_t>(std::distance(p.values().begin(), best));
            out.top_probability[i * image.width() + j] = *best;
        }
    }
    return out;
}

std::vector<SequenceSample> forecast_sequences(const std::vector<Scene>& frames, const TimeseriesSettings& ts,
                                               std::uint64_t seed) {
    if (frames.size() < ts.history + 1) throw std::invalid_argument("series shorter than history + 1");
    const std::size_t pixels = frames.front().image.pixels();
    const std::size_t starts = frames.size() - ts.history;
    Rng rng(seed);
    std::vector<SequenceSample> out;
    for (std::size_t n = 0; n < ts.sequences; ++n) {
        const std::size_t p = rng.below(pixels);
        const std::size_t t0 = rng.below(starts);
        SequenceSample s;
        for (std::size_t t = t0; t < t0 + ts.history; ++t) s.history.push_back(frames[t].image.band(ts.band)[p]);
        s.target = frames[t0 + ts.history].image.band(ts.band)[p];
        out.push_back(std::move(s));
    }
    return out;
}

double forecast_error(const LstmForecaster& model, std::span<const SequenceSample> samples) {
    std::vector<double> pred, truth;
    for (const auto& s : samples) {
        pred.push_back(model.predict(s.history));
        truth.push_back(s.target);
    }
    return mean_absolute_percentage_error(pred, truth);
}

TemporalData build_temporal_data(const ExperimentConfig& config, const std::vector<Scene>& frames,
                                 const PreprocessModel& model) {
    TemporalData out;
    for (const auto& f : frames) {
        out.frames.push_back(apply_preprocess(f.image, config.preprocess, model));
        out.labels.push_back(f.labels);
    }
    out.sequences = split_dataset(forecast_sequences(frames, config.timeseries, config.stage_seed("sequences")),
                                  config.stage_seed("sequence_split"));
    return out;
}

RunEvaluation evaluate_run(const ExperimentConfig& config, const CnnClassifier& cnn,
                           const LstmForecaster& forecaster, const ClassificationData& data,
                           const RasterStack& scene, const LabelImage& labels, const TemporalData& temporal) {
    RunEvaluation ev;
    const std::size_t k = config.scene.classes;

    ConfusionMatrix cm(k);
    std::vector<std::vector<double>> scores;
    std::vector<std::size_t> truths;
    for (const auto& s : data.split.test) {
        const Tensor p = cnn.probabilities(s.patch);
        const auto best = std::max_element(p.values().begin(), p.values().end());
        cm.add(s.label, static_cast<std::size_t>(std::distance(p.values().begin(), best)));
        scores.emplace_back(p.values().begin(), p.values().end());
        truths.push_back(s.label);
    }
    ev.test = classification_metrics(cm);
    try {
        ev.test.auc = auc_roc(scores, truths).macro;
    } catch (const std::invalid_argument&) {
        ev.test.auc = std::numeric_limits<double>::quiet_NaN();
    }
    ev.train_accuracy = accuracy(cnn, data.split.train);
    ev.validation_accuracy = accuracy(cnn, data.split.validation);

    const SegmentationResult seg = segment(cnn, scene);
    ev.mean_iou = mean_iou(seg.predicted, labels, k);
    ev.boundary_accuracy = boundary_accuracy(seg.predicted, labels, config.evaluate.boundary_tolerance);
    ev.boundary_gradient_norm = boundary_gradient_norm(boundary_map(seg.predicted));
    ev.mixed_pixels = static_cast<double>(
        std::count_if(seg.top_probability.begin(), seg.top_probability.end(), [](double p) { return p < 0.5; }));
    std::size_t agree = 0;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) agree += seg.predicted.labels[i] == labels.labels[i];
    ev.pixel_agreement = static_cast<double>(agree) / static_cast<double>(labels.labels.size());

    std::vector<LabelImage> predicted;
    for (const auto& f : temporal.frames) predicted.push_back(segment(cnn, f).predicted);
    ev.temporal = temporal_metrics(predicted, temporal.labels);
    ev.forecast_error = forecast_error(forecaster, temporal.sequences.test);
    ev.temporal.prediction_error = ev.forecast_error;
    for (std::size_t t = 1; t < predicted.size(); ++t) {
        std::vector<bool> dp(predicted[t].labels.size());
        std::vector<bool> dt(dp.size());
        for (std::size_t i = 0; i < dp.size(); ++i) {
            dp[i] = predicted[t].labels[i] != predicted[t - 1].labels[i];
            dt[i] = temporal.labels[t].labels[i] != temporal.labels[t - 1].labels[i];
        }
        ev.change_sensitivity.emplace_back(static_cast<double>(t), iou(dp, dt));
    }
    return ev;
}

}  // namespace geofuse::cli

#include "geofuse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace geofuse {

std::string_view to_string(Regularization r) {
    switch (r) {
        case Regularization::L1: return "L1";
        case Regularization::L2: return "L2";
        case Regularization::None: return "None";
    }
    return "?";
}

std::string_view to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Adam: return "Adam";
        case OptimizerKind::RMSProp: return "RMSProp";
        case OptimizerKind::SGD: return "SGD";
    }
    return "?";
}

std::optional<Regularization> parse_regularization(std::string_view s) {
    if (s == "L1") return Regularization::L1;
    if (s == "L2") return Regularization::L2;
    if (s == "None") return Regularization::None;
    return std::nullopt;
}

std::optional<OptimizerKind> parse_optimizer(std::string_view s) {
    if (s == "Adam") return OptimizerKind::Adam;
    if (s == "RMSProp") return OptimizerKind::RMSProp;
    if (s == "SGD") return OptimizerKind::SGD;
    return std::nullopt;
}

void HyperParams::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("hyperparams: " + msg); };
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
    if (num_filters == 0) fail("num_filters must be positive");
    if (kernel_size == 0 || kernel_size % 2 == 0) fail("kernel_size must be odd and positive");
    if (batch_size == 0) fail("batch_size must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
    if (epochs == 0) fail("epochs must be positive");
}

std::string describe(const HyperParams& hp) {
    std::ostringstream out;
    out << "lr=" << hp.learning_rate << " filters=" << hp.num_filters << " kernel=" << hp.kernel_size
        << " batch=" << hp.batch_size << " dropout=" << hp.dropout_rate << " epochs=" << hp.epochs
        << " reg=" << to_string(hp.regularization) << " opt=" << to_string(hp.optimizer);
    return out.str();
}

// ---------------------------------------------------------------------------
// Optimizer arithmetic. The free functions and the Optimizer class share
// these kernels so both paths produce identical bits.

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

void rmsprop_kernel(std::span<double> theta, std::span<const double> g, std::span<double> avg_sq,
                    double eta, double rho, double eps) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        avg_sq[i] = rho * avg_sq[i] + (1.0 - rho) * g[i] * g[i];
        theta[i] -= eta * g[i] / std::sqrt(avg_sq[i] + eps);
    }
}

void sgd_kernel(std::span<double> theta, std::span<const double> g, double eta) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * g[i];
}

void adam_kernel(std::span<double> theta, std::span<const double> g, std::span<double> m,
                 std::span<double> v, std::size_t step, double eta, double b1, double b2,
                 double eps) {
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        theta[i] -= eta * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

RmsPropStep rmsprop_step(const Tensor& theta, const Tensor& grad, const Tensor& avg_sq, double eta,
                         double rho, double eps) {
    require_same(theta, grad, "rmsprop_step");
    require_same(theta, avg_sq, "rmsprop_step");
    RmsPropStep out{theta, avg_sq};
    rmsprop_kernel(out.theta.values(), grad.values(), out.avg_sq.values(), eta, rho, eps);
    return out;
}

Tensor sgd_step(const Tensor& theta, const Tensor& grad, double eta) {
    require_same(theta, grad, "sgd_step");
    Tensor out = theta;
    sgd_kernel(out.values(), grad.values(), eta);
    return out;
}

AdamStep adam_step(const Tensor& theta, const Tensor& grad, const AdamMoments& moments, double eta,
                   double beta1, double beta2, double eps) {
    require_same(theta, grad, "adam_step");
    AdamStep out{theta, moments};
    if (out.moments.first.empty()) out.moments.first = Tensor(theta.shape());
    if (out.moments.second.empty()) out.moments.second = Tensor(theta.shape());
    require_same(theta, out.moments.first, "adam_step");
    require_same(theta, out.moments.second, "adam_step");
    ++out.moments.step;
    adam_kernel(out.theta.values(), grad.values(), out.moments.first.values(),
                out.moments.second.values(), out.moments.step, eta, beta1, beta2, eps);
    return out;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::vector<Tensor*> params,
                     OptimizerSettings settings)
    : kind_(kind), lr_(learning_rate), params_(std::move(params)), settings_(settings) {
    for (Tensor* p : params_) {
        first_.emplace_back(p->shape());
        second_.emplace_back(p->shape());
    }
}

void Optimizer::step(std::span<const Tensor> grads) {
    if (grads.size() != params_.size()) {
        throw std::invalid_argument("optimizer: gradient count does not match parameter count");
    }
    ++steps_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        require_same(*params_[i], grads[i], "optimizer step");
        auto theta = params_[i]->values();
        auto g = grads[i].values();
        switch (kind_) {
            case OptimizerKind::SGD: sgd_kernel(theta, g, lr_); break;
            case OptimizerKind::RMSProp:
                rmsprop_kernel(theta, g, second_[i].values(), lr_, settings_.rms_rho,
                               settings_.rms_eps);
                break;
            case OptimizerKind::Adam:
                adam_kernel(theta, g, first_[i].values(), second_[i].values(), steps_, lr_,
                            settings_.adam_beta1, settings_.adam_beta2, settings_.adam_eps);
                break;
        }
    }
}

// ---------------------------------------------------------------------------

DropoutResult dropout_apply(const Tensor& x, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
    DropoutResult out{x, Tensor(x.shape(), 1.0)};
    if (mode == Mode::Eval || rate == 0.0) return out;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        out.mask[i] = m;
        out.output[i] = x[i] * m;
    }
    return out;
}

RegularizationTerm regularization_term(std::span<const Tensor* const> params, Regularization kind,
                                       double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("regularization lambda must be >= 0");
    RegularizationTerm term;
    term.gradients.reserve(params.size());
    for (const Tensor* p : params) {
        Tensor g(p->shape());
        switch (kind) {
            case Regularization::None: break;
            case Regularization::L2:
                for (std::size_t i = 0; i < p->size(); ++i) {
                    term.penalty += (*p)[i] * (*p)[i];
                    g[i] = 2.0 * lambda * (*p)[i];
                }
                break;
            case Regularization::L1:
                for (std::size_t i = 0; i < p->size(); ++i) {
                    const double v = (*p)[i];
                    term.penalty += std::abs(v);
                    g[i] = v > 0.0 ? lambda : (v < 0.0 ? -lambda : 0.0);
                }
                break;
        }
        term.gradients.push_back(std::move(g));
    }
    term.penalty *= lambda;
    return term;
}

SplitIndices split_indices(std::size_t count, std::uint64_t seed) {
    if (count < 10) {
        throw std::invalid_argument("split_dataset needs at least 10 samples, got " +
                                    std::to_string(count));
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    const std::size_t held_out = count * 15 / 100;
    const std::size_t n_train = count - 2 * held_out;
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + held_out));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + held_out), order.end());
    return out;
}

// ---------------------------------------------------------------------------
// CNN classifier

CnnClassifier CnnClassifier::init(const CnnArch& arch, const HyperParams& hp, Rng& rng) {
    if (arch.in_channels == 0 || arch.num_classes < 2) {
        throw std::invalid_argument("cnn needs input channels and at least 2 classes");
    }
    if (arch.patch_size == 0 || arch.patch_size % 2 != 0) {
        throw std::invalid_argument("cnn patch size must be even and positive");
    }
    hp.validate();
    CnnClassifier m;
    m.arch = arch;
    const std::size_t half = hp.kernel_size / 2;
    m.conv = Conv2DLayer::zeros(hp.num_filters, arch.in_channels, half);
    const double fan_in = static_cast<double>(arch.in_channels * hp.kernel_size * hp.kernel_size);
    const double conv_bound = std::sqrt(6.0 / fan_in);
    for (double& w : m.conv.weights.values()) w = rng.uniform(-conv_bound, conv_bound);

    const std::size_t pooled = arch.patch_size / 2;
    const std::size_t features = hp.num_filters * pooled * pooled;
    m.head = DenseLayer::zeros(arch.num_classes, features);
    const double dense_bound =
        std::sqrt(6.0 / static_cast<double>(features + arch.num_classes));
    for (double& w : m.head.weights.values()) w = rng.uniform(-dense_bound, dense_bound);
    return m;
}

Tensor CnnClassifier::logits(const Tensor& patch) const {
    const Tensor act = relu_forward(conv2d_forward(patch, conv));
    return dense_forward(maxpool2d_forward(act).output, head);
}

std::size_t CnnClassifier::predict(const Tensor& patch) const {
    const Tensor z = logits(patch);
    return static_cast<std::size_t>(
        std::distance(z.values().begin(), std::max_element(z.values().begin(), z.values().end())));
}

Tensor CnnClassifier::probabilities(const Tensor& patch) const { return softmax(logits(patch)); }

std::vector<Tensor*> CnnClassifier::parameters() {
    return {&conv.weights, &conv.bias, &head.weights, &head.bias};
}

std::vector<const Tensor*> CnnClassifier::parameters() const {
    return {&conv.weights, &conv.bias, &head.weights, &head.bias};
}

std::size_t CnnClassifier::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* p : parameters()) n += p->size();
    return n;
}

double accuracy(const CnnClassifier& model, std::span<const LabeledPatch> samples) {
    if (samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : samples) hits += model.predict(s.patch) == s.label ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double mean_cross_entropy(const CnnClassifier& model, std::span<const LabeledPatch> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += softmax_cross_entropy(model.logits(s.patch), s.label).loss;
    return total / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// LSTM forecaster

LstmForecaster LstmForecaster::init(const LstmArch& arch, Rng& rng) {
    if (arch.hidden == 0) throw std::invalid_argument("forecaster hidden size must be positive");
    LstmForecaster m;
    m.lstm = LstmParams::random(arch.hidden, 1, rng);
    m.head = DenseLayer::zeros(1, arch.hidden);
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.hidden));
    for (double& w : m.head.weights.values()) w = rng.uniform(-bound, bound);
    return m;
}

namespace {

std::vector<Tensor> as_inputs(std::span<const double> history) {
    std::vector<Tensor> xs;
    xs.reserve(history.size());
    for (double v : history) xs.push_back(Tensor({1}, std::vector<double>{v}));
    return xs;
}

}  // namespace

double LstmForecaster::predict(std::span<const double> history) const {
    const auto xs = as_inputs(history);
    const LstmSequence seq = lstm_sequence_forward(xs, LstmState::zeros(lstm.hidden_size()), lstm);
    return dense_forward(seq.states.back().hidden, head)[0];
}

std::vector<Tensor*> LstmForecaster::parameters() {
    std::vector<Tensor*> out = lstm.tensors();
    out.push_back(&head.weights);
    out.push_back(&head.bias);
    return out;
}

std::vector<const Tensor*> LstmForecaster::parameters() const {
    std::vector<const Tensor*> out = lstm.tensors();
    out.push_back(&head.weights);
    out.push_back(&head.bias);
    return out;
}

std::size_t LstmForecaster::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* p : parameters()) n += p->size();
    return n;
}

double mean_squared_error(const LstmForecaster& model, std::span<const SequenceSample> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) {
        const double r = s.target - model.predict(s.history);
        total += r * r;
    }
    return total / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Training loops

std::size_t convergence_epoch(std::span<const double> validation_loss, std::size_t window,
                              double threshold) {
    for (std::size_t i = window; i < validation_loss.size(); ++i) {
        if (validation_loss[i - window] - validation_loss[i] < threshold) return i + 1;
    }
    return validation_loss.size();
}

bool TrainReport::same_outcome(const TrainReport& other) const {
    return train_loss == other.train_loss && validation_loss == other.validation_loss &&
           train_accuracy == other.train_accuracy &&
           validation_accuracy == other.validation_accuracy &&
           test_accuracy == other.test_accuracy && convergence_epoch == other.convergence_epoch &&
           work_macs == other.work_macs;
}

TrainingDiverged::TrainingDiverged(std::size_t epoch_, std::size_t batch_, double loss)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) + ", batch " +
                         std::to_string(batch_) + " (loss " + std::to_string(loss) + ")"),
      epoch(epoch_),
      batch(batch_) {}

namespace {

std::vector<Tensor> zeros_like(const std::vector<Tensor*>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Tensor* p : params) out.emplace_back(p->shape());
    return out;
}

void scale(std::vector<Tensor>& grads, double factor) {
    for (Tensor& g : grads)
        for (double& v : g.values()) v *= factor;
}

void accumulate(Tensor& into, const Tensor& g) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

void shuffle(std::vector<std::size_t>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

/// Shared epoch/batch skeleton. `sample_step(index, grads, rng)` returns the
/// sample's data loss after adding its gradient into `grads`.
template <typename Model, typename SampleStep, typename ValidationLoss>
TrainReport run_epochs(Model& model, const HyperParams& hp, std::size_t train_size,
                       std::uint64_t seed, const TrainOptions& options, SampleStep&& sample_step,
                       ValidationLoss&& validation_loss) {
    if (train_size == 0) throw std::invalid_argument("training set is empty");
    TrainReport report;
    std::vector<Tensor*> params = model.parameters();
    Optimizer optimizer(hp.optimizer, hp.learning_rate, params, options.optimizer);
    const double lambda = hp.regularization == Regularization::None ? 0.0 : options.lambda;

    Rng shuffle_rng(derive_seed(seed, "shuffle"));
    Rng dropout_rng(derive_seed(seed, "dropout"));
    std::vector<std::size_t> order(train_size);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double data_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < train_size; start += hp.batch_size, ++batch_index) {
            const std::size_t stop = std::min(train_size, start + hp.batch_size);
            std::vector<Tensor> grads = zeros_like(params);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                batch_loss += sample_step(order[k], grads, dropout_rng);
            }
            if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, batch_index, batch_loss);
            data_loss += batch_loss;
            scale(grads, 1.0 / static_cast<double>(stop - start));
            if (hp.regularization != Regularization::None) {
                std::vector<const Tensor*> cparams(params.begin(), params.end());
                const RegularizationTerm reg =
                    regularization_term(cparams, hp.regularization, lambda);
                for (std::size_t i = 0; i < grads.size(); ++i) accumulate(grads[i], reg.gradients[i]);
            }
            optimizer.step(grads);
        }
        std::vector<const Tensor*> cparams(params.begin(), params.end());
        const double penalty = regularization_term(cparams, hp.regularization, lambda).penalty;
        const double epoch_loss = data_loss / static_cast<double>(train_size) + penalty;
        const double val_loss = validation_loss();
        if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) {
            throw TrainingDiverged(epoch, batch_index, std::isfinite(epoch_loss) ? val_loss : epoch_loss);
        }
        report.train_loss.push_back(epoch_loss);
        report.validation_loss.push_back(val_loss);
    }
    report.convergence_epoch =
        convergence_epoch(report.validation_loss, options.plateau_window, options.plateau_threshold);
    return report;
}

std::uint64_t cnn_forward_macs(const CnnArch& arch, const HyperParams& hp) {
    const std::uint64_t p2 = arch.patch_size * arch.patch_size;
    const std::uint64_t conv =
        hp.num_filters * arch.in_channels * hp.kernel_size * hp.kernel_size * p2;
    const std::uint64_t dense = arch.num_classes * hp.num_filters * p2 / 4;
    return conv + dense;
}

}  // namespace

TrainedCnn train_model(const CnnArch& arch, const HyperParams& hp, const Split<LabeledPatch>& data,
                       std::uint64_t seed, const TrainOptions& options) {
    hp.validate();
    const auto started = std::chrono::steady_clock::now();
    Rng init_rng(derive_seed(seed, "init"));
    TrainedCnn out{CnnClassifier::init(arch, hp, init_rng), {}};
    CnnClassifier& model = out.model;

    auto sample_step = [&](std::size_t index, std::vector<Tensor>& grads, Rng& rng) {
        const LabeledPatch& s = data.train[index];
        const Tensor conv_out = conv2d_forward(s.patch, model.conv);
        const Tensor act = relu_forward(conv_out);
        const MaxPoolResult pool = maxpool2d_forward(act);
        const DropoutResult drop = dropout_apply(pool.output, hp.dropout_rate, Mode::Train, rng);
        const Tensor z = dense_forward(drop.output, model.head);
        LossWithGradient ce = softmax_cross_entropy(z, s.label);

        DenseGradients dg = dense_backward(ce.grad, drop.output, model.head);
        for (std::size_t i = 0; i < dg.input.size(); ++i) dg.input[i] *= drop.mask[i];
        const Tensor dact = maxpool2d_backward(dg.input, pool);
        const Tensor dconv = relu_backward(dact, conv_out);
        const Conv2DGradients cg = conv2d_backward(dconv, s.patch, model.conv, false);
        accumulate(grads[0], cg.weights);
        accumulate(grads[1], cg.bias);
        accumulate(grads[2], dg.weights);
        accumulate(grads[3], dg.bias);
        return ce.loss;
    };
    auto validation_loss = [&] { return mean_cross_entropy(model, data.validation); };

    out.report = run_epochs(model, hp, data.train.size(), seed, options, sample_step, validation_loss);
    out.report.train_accuracy = accuracy(model, data.train);
    out.report.validation_accuracy = accuracy(model, data.validation);
    out.report.test_accuracy = accuracy(model, data.test);
    out.report.work_macs =
        3 * cnn_forward_macs(arch, hp) * data.train.size() * hp.epochs;
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

TrainedForecaster train_model(const LstmArch& arch, const HyperParams& hp,
                              const Split<SequenceSample>& data, std::uint64_t seed,
                              const TrainOptions& options) {
    hp.validate();
    const auto started = std::chrono::steady_clock::now();
    Rng init_rng(derive_seed(seed, "init"));
    TrainedForecaster out{LstmForecaster::init(arch, init_rng), {}};
    LstmForecaster& model = out.model;
    const std::size_t hidden = arch.hidden;

    auto sample_step = [&](std::size_t index, std::vector<Tensor>& grads, Rng& rng) {
        const SequenceSample& s = data.train[index];
        const auto xs = as_inputs(s.history);
        const LstmSequence seq = lstm_sequence_forward(xs, LstmState::zeros(hidden), model.lstm);
        const DropoutResult drop =
            dropout_apply(seq.states.back().hidden, hp.dropout_rate, Mode::Train, rng);
        const double pred = dense_forward(drop.output, model.head)[0];
        const double residual = pred - s.target;

        const Tensor dpred({1}, std::vector<double>{2.0 * residual});
        DenseGradients dg = dense_backward(dpred, drop.output, model.head);
        for (std::size_t i = 0; i < hidden; ++i) dg.input[i] *= drop.mask[i];
        std::vector<Tensor> grad_hidden(xs.size(), Tensor({hidden}));
        grad_hidden.back() = dg.input.reshaped({hidden});
        const LstmGradients lg = lstm_backward(grad_hidden, seq.caches, model.lstm);
        const auto lstm_grads = lg.params.tensors();
        for (std::size_t i = 0; i < lstm_grads.size(); ++i) accumulate(grads[i], *lstm_grads[i]);
        accumulate(grads[lstm_grads.size()], dg.weights);
        accumulate(grads[lstm_grads.size() + 1], dg.bias);
        return residual * residual;
    };
    auto validation_loss = [&] { return mean_squared_error(model, data.validation); };

    out.report = run_epochs(model, hp, data.train.size(), seed, options, sample_step, validation_loss);
    std::uint64_t steps = 0;
    for (const auto& s : data.train) steps += s.history.size();
    out.report.work_macs = 3 * 4 * hidden * (hidden + 1) * steps * hp.epochs;
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

}  // namespace geofuse

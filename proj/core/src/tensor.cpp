#include "geofuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace geofuse {

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

namespace {

void require_positive_dims(const Shape& shape) {
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape()) +
                         " does not match " + shape_string(b.shape()));
    }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    require_positive_dims(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    require_positive_dims(shape_);
    if (data_.size() != element_count(shape_)) {
        throw ShapeError("tensor of shape " + shape_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) + " values, got " +
                         std::to_string(data_.size()));
    }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
    if (element_count(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::squared_norm() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

// ---------------------------------------------------------------------------
// Convolution

Conv2DLayer Conv2DLayer::zeros(std::size_t out_channels, std::size_t in_channels,
                               std::size_t half_size) {
    const std::size_t extent = 2 * half_size + 1;
    return {Tensor({out_channels, in_channels, extent, extent}), Tensor({out_channels})};
}

void Conv2DLayer::validate() const {
    if (weights.rank() != 4) {
        throw ShapeError("conv weights must be [out, in, 2k+1, 2k+1], got " +
                         shape_string(weights.shape()));
    }
    if (weights.dim(2) != weights.dim(3) || weights.dim(2) % 2 == 0) {
        throw ShapeError("conv filter must be square with odd extent, got " +
                         shape_string(weights.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
        throw ShapeError("conv bias " + shape_string(bias.shape()) + " does not match " +
                         std::to_string(weights.dim(0)) + " output channels");
    }
}

namespace {

void check_conv_input(const Tensor& input, const Conv2DLayer& layer) {
    layer.validate();
    if (input.rank() != 3) {
        throw ShapeError("conv input must be [C, H, W], got " + shape_string(input.shape()));
    }
    if (input.dim(0) != layer.in_channels()) {
        throw ShapeError("conv input has " + std::to_string(input.dim(0)) +
                         " channels, layer expects " + std::to_string(layer.in_channels()));
    }
}

// Valid filter-offset range [lo, hi) so that 0 <= pos + offset - k < extent_limit.
struct OffsetRange {
    std::size_t lo;
    std::size_t hi;
};

OffsetRange filter_range(std::size_t pos, std::size_t k, std::size_t limit) {
    const std::size_t extent = 2 * k + 1;
    const std::size_t lo = pos >= k ? 0 : k - pos;
    const std::size_t hi = std::min(extent, limit + k - pos);
    return {lo, hi};
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Conv2DLayer& layer) {
    check_conv_input(input, layer);
    const std::size_t channels = input.dim(0);
    const std::size_t height = input.dim(1);
    const std::size_t width = input.dim(2);
    const std::size_t k = layer.half_size();
    const std::size_t extent = 2 * k + 1;
    const std::size_t outs = layer.out_channels();

    Tensor output({outs, height, width});
    const double* x = input.data();
    const double* w = layer.weights.data();
    double* y = output.data();

    for (std::size_t o = 0; o < outs; ++o) {
        for (std::size_t i = 0; i < height; ++i) {
            const auto rows = filter_range(i, k, height);
            for (std::size_t j = 0; j < width; ++j) {
                const auto cols = filter_range(j, k, width);
                double acc = 0.0;
                for (std::size_t c = 0; c < channels; ++c) {
                    const double* wc = w + (o * channels + c) * extent * extent;
                    const double* xc = x + c * height * width;
                    for (std::size_t m = rows.lo; m < rows.hi; ++m) {
                        const double* xrow = xc + (i + m - k) * width + (j - k);
                        const double* wrow = wc + m * extent;
                        for (std::size_t n = cols.lo; n < cols.hi; ++n) acc += wrow[n] * xrow[n];
                    }
                }
                y[(o * height + i) * width + j] = acc + layer.bias[o];
            }
        }
    }
    return output;
}

Conv2DGradients conv2d_backward(const Tensor& grad_out, const Tensor& input,
                                const Conv2DLayer& layer, bool input_gradient) {
    check_conv_input(input, layer);
    const std::size_t channels = input.dim(0);
    const std::size_t height = input.dim(1);
    const std::size_t width = input.dim(2);
    const std::size_t k = layer.half_size();
    const std::size_t extent = 2 * k + 1;
    const std::size_t outs = layer.out_channels();
    const Shape expected{outs, height, width};
    if (grad_out.shape() != expected) {
        throw ShapeError("conv grad_out shape " + shape_string(grad_out.shape()) +
                         " does not match forward output " + shape_string(expected));
    }

    Conv2DGradients grads{Tensor(input.shape()), Tensor(layer.weights.shape()),
                          Tensor(layer.bias.shape())};
    const double* x = input.data();
    const double* w = layer.weights.data();
    const double* g = grad_out.data();
    double* gx = grads.input.data();
    double* gw = grads.weights.data();

    for (std::size_t o = 0; o < outs; ++o) {
        double bias_acc = 0.0;
        for (std::size_t i = 0; i < height; ++i) {
            const auto rows = filter_range(i, k, height);
            for (std::size_t j = 0; j < width; ++j) {
                const double go = g[(o * height + i) * width + j];
                bias_acc += go;
                if (go == 0.0) continue;
                const auto cols = filter_range(j, k, width);
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t wbase = (o * channels + c) * extent * extent;
                    const std::size_t xbase = c * height * width;
                    for (std::size_t m = rows.lo; m < rows.hi; ++m) {
                        const std::size_t xrow = xbase + (i + m - k) * width + (j - k);
                        const std::size_t wrow = wbase + m * extent;
                        for (std::size_t n = cols.lo; n < cols.hi; ++n) {
                            gw[wrow + n] += go * x[xrow + n];
                        }
                        if (!input_gradient) continue;
                        for (std::size_t n = cols.lo; n < cols.hi; ++n) {
                            gx[xrow + n] += go * w[wrow + n];
                        }
                    }
                }
            }
        }
        grads.bias[o] = bias_acc;
    }
    return grads;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& x) {
    require_same_shape(grad_out, x, "relu_backward");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(x[i] > 0.0)) g[i] = 0.0;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Max pooling

MaxPoolResult maxpool2d_forward(const Tensor& input, std::size_t window) {
    if (input.rank() != 3) {
        throw ShapeError("maxpool input must be [C, H, W], got " + shape_string(input.shape()));
    }
    if (window == 0) throw ShapeError("maxpool window must be positive");
    const std::size_t channels = input.dim(0);
    const std::size_t height = input.dim(1);
    const std::size_t width = input.dim(2);
    if (height % window != 0 || width % window != 0) {
        throw ShapeError("maxpool needs H and W divisible by " + std::to_string(window) + ", got " +
                         shape_string(input.shape()));
    }
    const std::size_t oh = height / window;
    const std::size_t ow = width / window;
    MaxPoolResult result{Tensor({channels, oh, ow}), input.shape(), {}};
    result.argmax.resize(result.output.size());

    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                std::size_t best = (c * height + i * window) * width + j * window;
                for (std::size_t a = 0; a < window; ++a) {
                    for (std::size_t b = 0; b < window; ++b) {
                        const std::size_t idx = (c * height + i * window + a) * width + j * window + b;
                        if (input[idx] > input[best]) best = idx;
                    }
                }
                const std::size_t out = (c * oh + i) * ow + j;
                result.output[out] = input[best];
                result.argmax[out] = best;
            }
        }
    }
    return result;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const MaxPoolResult& cache) {
    if (grad_out.shape() != cache.output.shape()) {
        throw ShapeError("maxpool grad_out shape " + shape_string(grad_out.shape()) +
                         " does not match forward output " + shape_string(cache.output.shape()));
    }
    Tensor grad_in(cache.input_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[cache.argmax[i]] += grad_out[i];
    return grad_in;
}

// ---------------------------------------------------------------------------
// Dense

DenseLayer DenseLayer::zeros(std::size_t out, std::size_t in) {
    return {Tensor({out, in}), Tensor({out})};
}

void DenseLayer::validate() const {
    if (weights.rank() != 2) {
        throw ShapeError("dense weights must be [out, in], got " + shape_string(weights.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
        throw ShapeError("dense bias " + shape_string(bias.shape()) + " does not match " +
                         std::to_string(weights.dim(0)) + " weight rows");
    }
}

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
    layer.validate();
    const std::size_t in = layer.in_features();
    const std::size_t out = layer.out_features();
    if (x.size() != in) {
        throw ShapeError("dense input " + shape_string(x.shape()) + " has " +
                         std::to_string(x.size()) + " elements, layer expects " + std::to_string(in));
    }
    Tensor y({out});
    const double* w = layer.weights.data();
    for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc + layer.bias[o];
    }
    return y;
}

DenseGradients dense_backward(const Tensor& grad_out, const Tensor& x, const DenseLayer& layer) {
    layer.validate();
    const std::size_t in = layer.in_features();
    const std::size_t out = layer.out_features();
    if (x.size() != in) {
        throw ShapeError("dense input " + shape_string(x.shape()) + " does not match layer input " +
                         std::to_string(in));
    }
    if (grad_out.size() != out) {
        throw ShapeError("dense grad_out " + shape_string(grad_out.shape()) +
                         " does not match layer output " + std::to_string(out));
    }
    DenseGradients grads{Tensor(x.shape()), Tensor(layer.weights.shape()), grad_out.reshaped({out})};
    const double* w = layer.weights.data();
    double* gw = grads.weights.data();
    for (std::size_t o = 0; o < out; ++o) {
        const double go = grad_out[o];
        for (std::size_t i = 0; i < in; ++i) {
            gw[o * in + i] = go * x[i];
            grads.input[i] += go * w[o * in + i];
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Losses

Tensor softmax(const Tensor& logits) {
    if (logits.empty()) throw ShapeError("softmax of an empty tensor");
    const double peak = *std::max_element(logits.values().begin(), logits.values().end());
    Tensor p = logits;
    double total = 0.0;
    for (double& v : p.values()) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : p.values()) v /= total;
    return p;
}

LossWithGradient softmax_cross_entropy(const Tensor& logits, std::size_t target) {
    if (logits.rank() != 1 || logits.size() < 2) {
        throw ShapeError("cross entropy needs a rank-1 logit vector with at least 2 classes, got " +
                         shape_string(logits.shape()));
    }
    if (target >= logits.size()) {
        throw std::out_of_range("target class " + std::to_string(target) + " outside [0, " +
                                std::to_string(logits.size()) + ")");
    }
    const double peak = *std::max_element(logits.values().begin(), logits.values().end());
    double total = 0.0;
    for (double v : logits.values()) total += std::exp(v - peak);
    const double log_total = std::log(total);

    LossWithGradient out{log_total - (logits[target] - peak), Tensor(logits.shape())};
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.grad[i] = std::exp(logits[i] - peak - log_total);
    }
    out.grad[target] -= 1.0;
    if (out.loss < 0.0) out.loss = 0.0;  // rounding when the target dominates
    return out;
}

double mse_l2_loss(const Tensor& pred, const Tensor& truth, std::span<const Tensor> params,
                   double lambda) {
    if (pred.size() != truth.size()) {
        throw ShapeError("mse: prediction has " + std::to_string(pred.size()) +
                         " values, truth has " + std::to_string(truth.size()));
    }
    if (pred.empty()) throw std::invalid_argument("mse: no samples");
    if (!(lambda >= 0.0)) throw std::invalid_argument("mse: lambda must be >= 0");
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = truth[i] - pred[i];
        sse += r * r;
    }
    double penalty = 0.0;
    for (const Tensor& p : params) penalty += p.squared_norm();
    return sse / static_cast<double>(pred.size()) + lambda * penalty;
}

}  // namespace geofuse

#pragma once

// Dense real tensors and the feed-forward layers used by the classifiers:
// zero-padded stride-1 convolution, ReLU, 2-D max pooling, fully connected
// layers, and the two loss functions. Every layer has a hand-written
// backward pass; there is no autodiff graph.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geofuse {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Row-major dense array of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    /// Rank-1 tensor holding `values`.
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    void fill(double value);
    /// Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const noexcept;
    double squared_norm() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

/// Weights [out, in, 2k+1, 2k+1], bias [out].
struct Conv2DLayer {
    Tensor weights;
    Tensor bias;

    static Conv2DLayer zeros(std::size_t out_channels, std::size_t in_channels, std::size_t half_size);

    std::size_t out_channels() const { return weights.dim(0); }
    std::size_t in_channels() const { return weights.dim(1); }
    std::size_t half_size() const { return weights.dim(2) / 2; }
    /// Throws ShapeError unless the filter is square, odd, and matches the bias.
    void validate() const;
};

struct Conv2DGradients {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

/// output[o,i,j] = sum_c sum_m sum_n W[o,c,m+k,n+k] * X[c,i+m,j+n] + b[o],
/// zero padding of width k, stride 1. Summation runs channel-major, then
/// filter row, then filter column.
Tensor conv2d_forward(const Tensor& input, const Conv2DLayer& layer);
/// With `input_gradient` false the returned input gradient is all zeros.
Conv2DGradients conv2d_backward(const Tensor& grad_out, const Tensor& input,
                                const Conv2DLayer& layer, bool input_gradient = true);

Tensor relu_forward(const Tensor& x);
/// Subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& x);

struct MaxPoolResult {
    Tensor output;
    Shape input_shape;
    /// Flat input index chosen for every output element.
    std::vector<std::size_t> argmax;
};

/// Non-overlapping window x window max pooling over [C, H, W].
/// Ties resolve to the first element in row-major order.
MaxPoolResult maxpool2d_forward(const Tensor& input, std::size_t window = 2);
Tensor maxpool2d_backward(const Tensor& grad_out, const MaxPoolResult& cache);

/// Weights [out, in], bias [out].
struct DenseLayer {
    Tensor weights;
    Tensor bias;

    static DenseLayer zeros(std::size_t out, std::size_t in);
    std::size_t out_features() const { return weights.dim(0); }
    std::size_t in_features() const { return weights.dim(1); }
    void validate() const;
};

struct DenseGradients {
    Tensor input;  // same shape as the forward input
    Tensor weights;
    Tensor bias;
};

/// W x + b. `x` may have any shape whose element count equals in_features.
Tensor dense_forward(const Tensor& x, const DenseLayer& layer);
DenseGradients dense_backward(const Tensor& grad_out, const Tensor& x, const DenseLayer& layer);

Tensor softmax(const Tensor& logits);

struct LossWithGradient {
    double loss = 0.0;
    Tensor grad;
};

/// -log softmax(logits)[target] with gradient softmax - onehot.
LossWithGradient softmax_cross_entropy(const Tensor& logits, std::size_t target);

/// (1/N) sum (y - yhat)^2 + lambda * sum_j ||theta_j||^2.
double mse_l2_loss(const Tensor& pred, const Tensor& truth, std::span<const Tensor> params,
                   double lambda);

}  // namespace geofuse

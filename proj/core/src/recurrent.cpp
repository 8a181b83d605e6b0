#include "geofuse/recurrent.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace geofuse {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
    if (hidden == 0 || input == 0) throw ShapeError("lstm sizes must be positive");
    LstmParams p;
    for (std::size_t g = 0; g < kGateCount; ++g) {
        p.weights[g] = Tensor({hidden, hidden + input});
        p.biases[g] = Tensor({hidden});
    }
    return p;
}

LstmParams LstmParams::random(std::size_t hidden, std::size_t input, Rng& rng) {
    LstmParams p = zeros(hidden, input);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
    for (std::size_t g = 0; g < kGateCount; ++g) {
        for (double& w : p.weights[g].values()) w = rng.uniform(-bound, bound);
        for (double& b : p.biases[g].values()) b = rng.uniform(-bound, bound);
    }
    p.bias(Gate::Forget).fill(1.0);
    return p;
}

void LstmParams::validate() const {
    const Shape& ws = weights[0].shape();
    if (ws.size() != 2 || ws[1] <= ws[0]) {
        throw ShapeError("lstm weights must be [hidden, hidden + input], got " + shape_string(ws));
    }
    for (std::size_t g = 0; g < kGateCount; ++g) {
        if (weights[g].shape() != ws) {
            throw ShapeError("lstm gate " + std::to_string(g) + " weights " +
                             shape_string(weights[g].shape()) + " differ from " + shape_string(ws));
        }
        if (biases[g].shape() != Shape{ws[0]}) {
            throw ShapeError("lstm gate " + std::to_string(g) + " bias " +
                             shape_string(biases[g].shape()) + " does not match hidden size " +
                             std::to_string(ws[0]));
        }
    }
}

std::vector<Tensor*> LstmParams::tensors() {
    std::vector<Tensor*> out;
    for (auto& w : weights) out.push_back(&w);
    for (auto& b : biases) out.push_back(&b);
    return out;
}

std::vector<const Tensor*> LstmParams::tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& w : weights) out.push_back(&w);
    for (const auto& b : biases) out.push_back(&b);
    return out;
}

LstmState LstmState::zeros(std::size_t hidden) { return {Tensor({hidden}), Tensor({hidden})}; }

namespace {

Tensor gate_preactivation(const Tensor& weights, const Tensor& bias, const Tensor& concat) {
    const std::size_t rows = weights.dim(0);
    const std::size_t cols = weights.dim(1);
    Tensor z({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* w = weights.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += w[c] * concat[c];
        z[r] = acc + bias[r];
    }
    return z;
}

}  // namespace

LstmStep lstm_cell_step(const Tensor& x, const LstmState& prev, const LstmParams& params) {
    params.validate();
    const std::size_t hidden = params.hidden_size();
    const std::size_t input = params.input_size();
    if (x.size() != input) {
        throw ShapeError("lstm input has " + std::to_string(x.size()) + " values, params expect " +
                         std::to_string(input));
    }
    if (prev.cell.size() != hidden || prev.hidden.size() != hidden) {
        throw ShapeError("lstm state sizes (" + std::to_string(prev.cell.size()) + ", " +
                         std::to_string(prev.hidden.size()) + ") do not match hidden size " +
                         std::to_string(hidden));
    }

    LstmStep step;
    LstmStepCache& c = step.cache;
    c.concat = Tensor({hidden + input});
    for (std::size_t i = 0; i < hidden; ++i) c.concat[i] = prev.hidden[i];
    for (std::size_t i = 0; i < input; ++i) c.concat[hidden + i] = x[i];

    c.forget = gate_preactivation(params.weight(Gate::Forget), params.bias(Gate::Forget), c.concat);
    c.input = gate_preactivation(params.weight(Gate::Input), params.bias(Gate::Input), c.concat);
    c.output = gate_preactivation(params.weight(Gate::Output), params.bias(Gate::Output), c.concat);
    c.candidate =
        gate_preactivation(params.weight(Gate::Candidate), params.bias(Gate::Candidate), c.concat);
    for (std::size_t i = 0; i < hidden; ++i) {
        c.forget[i] = sigmoid(c.forget[i]);
        c.input[i] = sigmoid(c.input[i]);
        c.output[i] = sigmoid(c.output[i]);
        c.candidate[i] = std::tanh(c.candidate[i]);
    }
    c.prev_cell = prev.cell.reshaped({hidden});

    step.state = LstmState::zeros(hidden);
    c.tanh_cell = Tensor({hidden});
    for (std::size_t i = 0; i < hidden; ++i) {
        const double cell = c.forget[i] * c.prev_cell[i] + c.input[i] * c.candidate[i];
        step.state.cell[i] = cell;
        c.tanh_cell[i] = std::tanh(cell);
        step.state.hidden[i] = c.output[i] * c.tanh_cell[i];
    }
    return step;
}

LstmSequence lstm_sequence_forward(std::span<const Tensor> xs, const LstmState& initial,
                                   const LstmParams& params) {
    if (xs.empty()) throw std::invalid_argument("lstm sequence must not be empty");
    const std::size_t input = xs.front().size();
    LstmSequence seq;
    seq.states.reserve(xs.size());
    seq.caches.reserve(xs.size());
    const LstmState* prev = &initial;
    for (const Tensor& x : xs) {
        if (x.size() != input) {
            throw ShapeError("lstm sequence inputs must share one dimension (" +
                             std::to_string(input) + " vs " + std::to_string(x.size()) + ")");
        }
        LstmStep step = lstm_cell_step(x, *prev, params);
        seq.states.push_back(std::move(step.state));
        seq.caches.push_back(std::move(step.cache));
        prev = &seq.states.back();
    }
    return seq;
}

LstmGradients lstm_backward(std::span<const Tensor> grad_hidden,
                            std::span<const LstmStepCache> caches, const LstmParams& params,
                            const Tensor& grad_final_cell) {
    params.validate();
    if (grad_hidden.size() != caches.size()) {
        throw std::invalid_argument("lstm_backward: " + std::to_string(grad_hidden.size()) +
                                    " hidden gradients for " + std::to_string(caches.size()) +
                                    " cached steps");
    }
    if (caches.empty()) throw std::invalid_argument("lstm_backward: empty sequence");
    const std::size_t hidden = params.hidden_size();
    const std::size_t input = params.input_size();
    const std::size_t width = hidden + input;

    LstmGradients grads;
    grads.params = LstmParams::zeros(hidden, input);
    grads.inputs.assign(caches.size(), Tensor({input}));

    Tensor dh_next({hidden});
    Tensor dc_next({hidden});
    if (!grad_final_cell.empty()) {
        if (grad_final_cell.size() != hidden) {
            throw ShapeError("lstm_backward: final cell gradient size mismatch");
        }
        dc_next = grad_final_cell.reshaped({hidden});
    }

    std::array<Tensor, kGateCount> dz;
    for (auto& t : dz) t = Tensor({hidden});

    for (std::size_t step = caches.size(); step-- > 0;) {
        const LstmStepCache& c = caches[step];
        if (grad_hidden[step].size() != hidden) {
            throw ShapeError("lstm_backward: hidden gradient at step " + std::to_string(step) +
                             " has wrong size");
        }
        for (std::size_t i = 0; i < hidden; ++i) {
            const double dh = grad_hidden[step][i] + dh_next[i];
            const double dout = dh * c.tanh_cell[i];
            const double dc = dh * c.output[i] * (1.0 - c.tanh_cell[i] * c.tanh_cell[i]) + dc_next[i];
            const double df = dc * c.prev_cell[i];
            const double di = dc * c.candidate[i];
            const double dcand = dc * c.input[i];
            dc_next[i] = dc * c.forget[i];
            dz[0][i] = df * c.forget[i] * (1.0 - c.forget[i]);
            dz[1][i] = di * c.input[i] * (1.0 - c.input[i]);
            dz[2][i] = dout * c.output[i] * (1.0 - c.output[i]);
            dz[3][i] = dcand * (1.0 - c.candidate[i] * c.candidate[i]);
        }

        Tensor dconcat({width});
        for (std::size_t g = 0; g < kGateCount; ++g) {
            const double* w = params.weights[g].data();
            double* gw = grads.params.weights[g].data();
            for (std::size_t r = 0; r < hidden; ++r) {
                const double d = dz[g][r];
                grads.params.biases[g][r] += d;
                for (std::size_t col = 0; col < width; ++col) {
                    gw[r * width + col] += d * c.concat[col];
                    dconcat[col] += w[r * width + col] * d;
                }
            }
        }
        for (std::size_t i = 0; i < hidden; ++i) dh_next[i] = dconcat[i];
        for (std::size_t i = 0; i < input; ++i) grads.inputs[step][i] = dconcat[hidden + i];
    }
    grads.initial = {dc_next, dh_next};
    return grads;
}

}  // namespace geofuse

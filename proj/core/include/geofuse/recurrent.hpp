#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "geofuse/rng.hpp"
#include "geofuse/tensor.hpp"

namespace geofuse {

enum class Gate : std::size_t { Forget = 0, Input = 1, Output = 2, Candidate = 3 };

inline constexpr std::size_t kGateCount = 4;

/// Per-gate weights [hidden, hidden + input] applied to [h_{t-1}; x_t].
struct LstmParams {
    std::array<Tensor, kGateCount> weights;
    std::array<Tensor, kGateCount> biases;

    static LstmParams zeros(std::size_t hidden, std::size_t input);
    /// Uniform in +-1/sqrt(hidden + input); forget-gate bias starts at +1.
    static LstmParams random(std::size_t hidden, std::size_t input, Rng& rng);

    Tensor& weight(Gate g) { return weights[static_cast<std::size_t>(g)]; }
    const Tensor& weight(Gate g) const { return weights[static_cast<std::size_t>(g)]; }
    Tensor& bias(Gate g) { return biases[static_cast<std::size_t>(g)]; }
    const Tensor& bias(Gate g) const { return biases[static_cast<std::size_t>(g)]; }

    std::size_t hidden_size() const { return weights[0].dim(0); }
    std::size_t input_size() const { return weights[0].dim(1) - weights[0].dim(0); }
    void validate() const;

    /// Weights then biases, gate order F, I, O, C.
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
};

struct LstmState {
    Tensor cell;
    Tensor hidden;

    static LstmState zeros(std::size_t hidden);
};

struct LstmStepCache {
    Tensor concat;  // [h_{t-1}; x_t]
    Tensor forget, input, output, candidate;
    Tensor prev_cell;
    Tensor tanh_cell;
};

struct LstmStep {
    LstmState state;
    LstmStepCache cache;
};

/// C_t = f*C_{t-1} + i*C~_t, h_t = o*tanh(C_t), with sigmoid gates and a tanh
/// candidate computed from [h_{t-1}; x_t].
LstmStep lstm_cell_step(const Tensor& x, const LstmState& prev, const LstmParams& params);

struct LstmSequence {
    std::vector<LstmState> states;  // one per input, states[t] = (C_t, h_t)
    std::vector<LstmStepCache> caches;
};

LstmSequence lstm_sequence_forward(std::span<const Tensor> xs, const LstmState& initial,
                                   const LstmParams& params);

struct LstmGradients {
    LstmParams params;
    std::vector<Tensor> inputs;
    LstmState initial;
};

/// Backpropagation through time. `grad_hidden[t]` is dLoss/dh_t for every
/// timestep; `grad_final_cell`, when non-empty, is dLoss/dC_T.
LstmGradients lstm_backward(std::span<const Tensor> grad_hidden,
                            std::span<const LstmStepCache> caches, const LstmParams& params,
                            const Tensor& grad_final_cell = Tensor());

double sigmoid(double x);

}  // namespace geofuse

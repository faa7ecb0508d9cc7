#pragma once

#include <cstddef>

#include "recnet/autodiff.hpp"
#include "recnet/tensor.hpp"

namespace recnet {

// Cell memory m_t and hidden output of one LSTM layer.
struct LSTMState {
  Tensor memory;
  Tensor hidden;

  static LSTMState zeros(std::size_t hidden_size);
};

// The same state as nodes on a tape.
struct LSTMNodes {
  Var memory;
  Var hidden;

  LSTMState values() const { return {memory.value(), hidden.value()}; }
};

LSTMNodes constant_state(Tape& tape, const LSTMState& state);

// One step of a peephole-free LSTM with a single fused weight matrix over the
// concatenation [input; prev.hidden]. Gate blocks are stacked as i, f, o, g:
//
//   (i, f, o, g) = (σ, σ, σ, tanh)(W·[input; h_prev] + b)
//   m = f ⊙ m_prev + i ⊙ g
//   h = o ⊙ tanh(m)
//
// weights: (4·H, input_len + H); bias: (4·H).
LSTMNodes lstm_step(Var input, const LSTMNodes& prev, Var weights, Var bias);

LSTMState lstm_step(const Tensor& input, const LSTMState& prev, const Tensor& weights,
                    const Tensor& bias);

}  // namespace recnet

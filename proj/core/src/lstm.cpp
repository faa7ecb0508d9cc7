#include "recnet/lstm.hpp"

#include <string>

#include "recnet/errors.hpp"

namespace recnet {

LSTMState LSTMState::zeros(std::size_t hidden_size) {
  return {Tensor({hidden_size}), Tensor({hidden_size})};
}

LSTMNodes constant_state(Tape& tape, const LSTMState& state) {
  return {tape.constant(state.memory), tape.constant(state.hidden)};
}

namespace {

void check_cell_shapes(const Tensor& input, const Tensor& memory, const Tensor& hidden,
                       const Tensor& weights, const Tensor& bias) {
  const std::size_t h = hidden.size();
  if (hidden.rank() != 1) throw DimensionError("lstm_step: previous hidden has shape " + hidden.shape_string());
  if (memory.shape() != hidden.shape()) {
    throw DimensionError("lstm_step: previous memory has shape " + memory.shape_string() +
                         ", previous hidden has shape " + hidden.shape_string());
  }
  if (input.rank() != 1) throw DimensionError("lstm_step: input has shape " + input.shape_string());
  const Shape expected_w{4 * h, input.size() + h};
  if (weights.shape() != expected_w) {
    throw DimensionError("lstm_step: weights have shape " + weights.shape_string() + ", expected " +
                         shape_string(expected_w));
  }
  if (bias.shape() != Shape{4 * h}) {
    throw DimensionError("lstm_step: bias has shape " + bias.shape_string() + ", expected (" +
                         std::to_string(4 * h) + ")");
  }
}

}  // namespace

LSTMNodes lstm_step(Var input, const LSTMNodes& prev, Var weights, Var bias) {
  check_cell_shapes(input.value(), prev.memory.value(), prev.hidden.value(), weights.value(),
                    bias.value());
  const std::size_t h = prev.hidden.value().size();
  Var pre = ag::affine(weights, ag::concat({input, prev.hidden}), bias);
  Var in_gate = ag::sigmoid(ag::slice(pre, 0, h));
  Var forget_gate = ag::sigmoid(ag::slice(pre, h, h));
  Var out_gate = ag::sigmoid(ag::slice(pre, 2 * h, h));
  Var candidate = ag::tanh(ag::slice(pre, 3 * h, h));
  Var memory = ag::add(ag::mul(forget_gate, prev.memory), ag::mul(in_gate, candidate));
  Var hidden = ag::mul(out_gate, ag::tanh(memory));
  return {memory, hidden};
}

LSTMState lstm_step(const Tensor& input, const LSTMState& prev, const Tensor& weights,
                    const Tensor& bias) {
  Tape tape(false);
  LSTMNodes next = lstm_step(tape.constant(input), constant_state(tape, prev),
                             tape.constant(weights), tape.constant(bias));
  return next.values();
}

}  // namespace recnet

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "recnet/tensor.hpp"

namespace recnet {

// Non-owning named handle to a trainable tensor.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

struct AdaDeltaSlot {
  Tensor sq_grad;    // running average of g²
  Tensor sq_update;  // running average of Δx²
};

// Per-parameter AdaDelta accumulators. Slot k tracks parameter k of the list
// it was created for.
struct AdaDeltaState {
  double rho = 0.95;
  double eps = 1e-6;
  std::vector<AdaDeltaSlot> slots;

  static AdaDeltaState for_params(std::span<const ParamRef> params, double rho = 0.95,
                                  double eps = 1e-6);
};

// One AdaDelta step:
//   E[g²]  ← ρ·E[g²] + (1−ρ)·g²
//   Δx     ← −sqrt(E[Δx²] + ε) / sqrt(E[g²] + ε) · g
//   E[Δx²] ← ρ·E[Δx²] + (1−ρ)·Δx²
//   x      ← x + Δx
void adadelta_update(std::span<const ParamRef> params, std::span<const Tensor> grads,
                     AdaDeltaState& state);

double global_norm(std::span<const Tensor> grads);

// Rescales grads in place so their joint L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_by_global_norm(std::span<Tensor> grads, double max_norm);

// Loss evaluator for gradient checking. Must fill `grads` (one tensor per
// checked parameter, same order) when it is non-null.
using LossWithGradient = std::function<double(std::vector<Tensor>* grads)>;

struct TensorGradCheck {
  std::string name;
  double relative_error = 0.0;  // ‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖, 1e-12)
  double analytic_norm = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  // Worst TensorGradCheck::relative_error and the tensor it came from.
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::vector<TensorGradCheck> tensors;
  // Entry-level diagnostics: |a − n| / max(|a|, |n|, 1e-12) for the worst single entry.
  double max_entry_relative_error = 0.0;
  std::string worst_entry_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients with central differences of step `step` for
// every entry of every parameter tensor. Each tensor is scored by the L2 norm
// of its error relative to the larger of the two gradient norms.
GradCheckReport finite_diff_check(const LossWithGradient& loss, std::span<const ParamRef> params,
                                  double step);

}  // namespace recnet

#include "recnet/optim.hpp"

#include <algorithm>
#include <cmath>

#include "recnet/errors.hpp"

namespace recnet {

AdaDeltaState AdaDeltaState::for_params(std::span<const ParamRef> params, double rho, double eps) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("adadelta rho must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adadelta eps must be positive");
  AdaDeltaState state;
  state.rho = rho;
  state.eps = eps;
  state.slots.reserve(params.size());
  for (const ParamRef& p : params) {
    state.slots.push_back({Tensor::zeros_like(*p.tensor), Tensor::zeros_like(*p.tensor)});
  }
  return state;
}

void adadelta_update(std::span<const ParamRef> params, std::span<const Tensor> grads,
                     AdaDeltaState& state) {
  if (params.size() != grads.size() || params.size() != state.slots.size()) {
    throw DimensionError("adadelta_update: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " +
                         std::to_string(state.slots.size()) + " optimizer slots");
  }
  const double rho = state.rho;
  const double eps = state.eps;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& x = *params[k].tensor;
    const Tensor& g = grads[k];
    AdaDeltaSlot& slot = state.slots[k];
    require_shape(g, x.shape(), "gradient of " + params[k].name);
    require_shape(slot.sq_grad, x.shape(), "adadelta accumulator of " + params[k].name);
    for (std::size_t i = 0; i < x.size(); ++i) {
      slot.sq_grad[i] = rho * slot.sq_grad[i] + (1.0 - rho) * g[i] * g[i];
      const double delta = -std::sqrt(slot.sq_update[i] + eps) / std::sqrt(slot.sq_grad[i] + eps) * g[i];
      slot.sq_update[i] = rho * slot.sq_update[i] + (1.0 - rho) * delta * delta;
      x[i] += delta;
    }
  }
}

double global_norm(std::span<const Tensor> grads) {
  double total = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.values()) total += v * v;
  return std::sqrt(total);
}

double clip_by_global_norm(std::span<Tensor> grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.values()) v *= factor;
  }
  return norm;
}

GradCheckReport finite_diff_check(const LossWithGradient& loss, std::span<const ParamRef> params,
                                  double step) {
  if (!(step > 0.0)) throw ConfigError("finite_diff_check: step must be positive");
  std::vector<Tensor> analytic;
  loss(&analytic);
  if (analytic.size() != params.size()) {
    throw DimensionError("finite_diff_check: loss returned " + std::to_string(analytic.size()) +
                         " gradients for " + std::to_string(params.size()) + " parameters");
  }
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& x = *params[k].tensor;
    require_shape(analytic[k], x.shape(), "analytic gradient of " + params[k].name);
    TensorGradCheck t{params[k].name};
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double original = x[i];
      x[i] = original + step;
      const double plus = loss(nullptr);
      x[i] = original - step;
      const double minus = loss(nullptr);
      x[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double rel = std::abs(a - numeric) / denom;
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
      t.max_abs_error = std::max(t.max_abs_error, std::abs(a - numeric));
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, std::abs(a - numeric));
      if (rel > report.max_entry_relative_error) {
        report.max_entry_relative_error = rel;
        report.worst_entry_parameter = params[k].name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
    t.analytic_norm = std::sqrt(a_sq);
    t.relative_error = std::sqrt(diff_sq) / std::max({t.analytic_norm, std::sqrt(n_sq), 1e-12});
    if (t.relative_error > report.max_relative_error || report.worst_parameter.empty()) {
      report.max_relative_error = t.relative_error;
      report.worst_parameter = t.name;
    }
    report.tensors.push_back(std::move(t));
  }
  return report;
}

}  // namespace recnet

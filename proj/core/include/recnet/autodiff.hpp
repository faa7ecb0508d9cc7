#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "recnet/tensor.hpp"

namespace recnet {

class Tape;

// Boolean position mask; `true` marks a position that participates.
using Mask = std::vector<bool>;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Records operations in creation order (which is a topological order) and
// propagates adjoints in exact reverse order. A tape is single-threaded.
//
// A tape constructed with record = false keeps values only; every node it
// creates is a constant. Inference uses this mode.
class Tape {
 public:
  using BackwardFn =
      std::function<void(Tape& tape, const Tensor& out_value, std::span<const double> out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Leaf that never receives a gradient.
  Var constant(Tensor value);
  // Leaf whose adjoint is collected by backward().
  Var parameter(Tensor value);

  // Appends an op node. The node requires a gradient iff recording is on and
  // any parent requires one; otherwise `backward` is dropped.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.index()].value; }
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }

  // Adjoint of `v` after backward(); zeros for nodes the loss never reached.
  Tensor grad(Var v) const;

  // Adjoint buffer of a parent for accumulation inside a BackwardFn. Empty
  // when the parent does not require a gradient.
  std::span<double> accumulate(Var parent);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward function in
  // reverse creation order. `loss` must hold exactly one value.
  void backward(Var loss);

  // Clears adjoints so backward() can run again.
  void zero_grad();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool record_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

namespace ag {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sum(Var a);
// Sum of a list of same-shape nodes.
Var add_n(std::span<const Var> terms);
Var dot(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);

Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice(Var a, std::size_t offset, std::size_t length);

// W·x + bias, W of shape (rows, cols). `bias` may be an invalid Var.
Var affine(Var weights, Var x, Var bias = {});
// Row `index` of a matrix (embedding lookup).
Var row(Var matrix, std::size_t index);
// Stacks same-length vectors into an (n, len) matrix.
Var stack_rows(std::span<const Var> rows);
// X·Uᵀ for X (m, d) and U (a, d), giving (m, a).
Var project_rows(Var rows, Var projection);
// e_i = Σ_k w_k · tanh(query_k + keys_ik); keys (m, a), query and w (a).
Var additive_scores(Var query, Var keys, Var score_vector);
// Softmax restricted to positions where mask is true; others are exactly 0.
Var masked_softmax(Var logits, const Mask& mask);
// Σ_i weights_i · rows_i for rows (m, d).
Var weighted_rows(Var weights, Var rows);
// Mean of the rows selected by mask (all rows when mask is empty).
Var mean_rows(Var rows, const Mask& mask = {});
// −log softmax(logits)[target].
Var cross_entropy(Var logits, std::size_t target);
// sqrt(Σ (a − b)² + eps).
Var euclidean_distance(Var a, Var b, double eps);

}  // namespace ag

// Value-level softmax. Throws DataError("empty support") when every position
// is masked.
Tensor softmax(const Tensor& logits, const Mask& mask = {});

}  // namespace recnet

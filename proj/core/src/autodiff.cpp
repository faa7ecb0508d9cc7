#include "recnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "recnet/errors.hpp"

namespace recnet {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, nullptr, record_});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  if (record_) {
    for (const Var& p : parents) {
      if (!p.valid()) continue;
      if (p.tape_ != this) throw Error("operands recorded on different tapes");
      needs = needs || nodes_[p.index()].requires_grad;
    }
  }
  nodes_.push_back(Node{std::move(value), Tensor{}, needs ? std::move(backward) : nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.index()];
  if (n.grad.empty()) return Tensor::zeros_like(n.value);
  return n.grad;
}

std::span<double> Tape::accumulate(Var parent) {
  if (!parent.valid()) return {};
  Node& n = nodes_[parent.index()];
  if (!n.requires_grad) return {};
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad.values();
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw Error("backward: loss belongs to another tape");
  Node& root = nodes_[loss.index()];
  if (root.value.size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " + root.value.shape_string());
  }
  if (!root.requires_grad) return;
  if (root.grad.empty()) root.grad = Tensor::zeros_like(root.value);
  root.grad[0] += 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.value, n.grad.values());
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Tensor{};
}

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": right operand has shape " + b.shape_string() +
                         ", left operand has shape " + a.shape_string());
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_mask(const Mask& mask, std::size_t n, const char* op) {
  if (!mask.empty() && mask.size() != n) {
    throw DimensionError(std::string(op) + ": mask has length " + std::to_string(mask.size()) +
                         ", expected " + std::to_string(n));
  }
}

}  // namespace

Tensor softmax(const Tensor& logits, const Mask& mask) {
  const std::size_t n = logits.size();
  check_mask(mask, n, "softmax");
  auto live = [&](std::size_t i) { return mask.empty() || mask[i]; };
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!live(i)) continue;
    any = true;
    top = std::max(top, logits[i]);
  }
  if (!any) throw DataError("empty support");
  Tensor out = Tensor::zeros_like(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!live(i)) continue;
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
  return out;
}

namespace ag {

Var add(Var a, Var b) {
  require_same(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& t, const Tensor&, std::span<const double> g) {
                           for (Var p : {a, b}) {
                             auto gp = t.accumulate(p);
                             for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[i];
                           }
                         });
}

Var sub(Var a, Var b) {
  require_same(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& t, const Tensor&, std::span<const double> g) {
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                           auto gb = t.accumulate(b);
                           for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
                         });
}

Var mul(Var a, Var b) {
  require_same(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& t, const Tensor&, std::span<const double> g) {
                           const Tensor& av = t.value(a);
                           const Tensor& bv = t.value(b);
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
                           auto gb = t.accumulate(b);
                           for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
                         });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return a.tape().record(std::move(out), {a},
                         [a, factor](Tape& t, const Tensor&, std::span<const double> g) {
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * factor;
                         });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record(Tensor::scalar(total), {a},
                         [a](Tape& t, const Tensor&, std::span<const double> g) {
                           auto ga = t.accumulate(a);
                           for (double& v : ga) v += g[0];
                         });
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw DimensionError("add_n: no terms");
  Tensor out = terms[0].value();
  for (std::size_t k = 1; k < terms.size(); ++k) {
    require_same(out, terms[k].value(), "add_n");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += terms[k].value()[i];
  }
  std::vector<Var> parents(terms.begin(), terms.end());
  return terms[0].tape().record(
      std::move(out), parents,
      [parents](Tape& t, const Tensor&, std::span<const double> g) {
        for (Var p : parents) {
          auto gp = t.accumulate(p);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[i];
        }
      });
}

Var dot(Var a, Var b) {
  require_same(a.value(), b.value(), "dot");
  double total = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) total += a.value()[i] * b.value()[i];
  return a.tape().record(Tensor::scalar(total), {a, b},
                         [a, b](Tape& t, const Tensor&, std::span<const double> g) {
                           const Tensor& av = t.value(a);
                           const Tensor& bv = t.value(b);
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * bv[i];
                           auto gb = t.accumulate(b);
                           for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[0] * av[i];
                         });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = stable_sigmoid(v);
  return a.tape().record(std::move(out), {a},
                         [a](Tape& t, const Tensor& y, std::span<const double> g) {
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) {
                             ga[i] += g[i] * y[i] * (1.0 - y[i]);
                           }
                         });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  return a.tape().record(std::move(out), {a},
                         [a](Tape& t, const Tensor& y, std::span<const double> g) {
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) {
                             ga[i] += g[i] * (1.0 - y[i] * y[i]);
                           }
                         });
}

Var log(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::log(v);
  return a.tape().record(std::move(out), {a},
                         [a](Tape& t, const Tensor&, std::span<const double> g) {
                           const Tensor& av = t.value(a);
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] / av[i];
                         });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no parts");
  std::vector<double> values;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (p.value().rank() != 1) {
      throw DimensionError("concat: part has shape " + p.value().shape_string() +
                           ", expected a vector");
    }
    offsets.push_back(values.size());
    values.insert(values.end(), p.value().values().begin(), p.value().values().end());
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts[0].tape().record(
      Tensor::vector(std::move(values)), parents,
      [parents, offsets](Tape& t, const Tensor&, std::span<const double> g) {
        for (std::size_t k = 0; k < parents.size(); ++k) {
          auto gp = t.accumulate(parents[k]);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
        }
      });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& av = a.value();
  if (av.rank() != 1 || offset + length > av.size() || length == 0) {
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") invalid for operand of shape " +
                         av.shape_string());
  }
  std::vector<double> values(av.values().begin() + static_cast<std::ptrdiff_t>(offset),
                             av.values().begin() + static_cast<std::ptrdiff_t>(offset + length));
  return a.tape().record(Tensor::vector(std::move(values)), {a},
                         [a, offset](Tape& t, const Tensor&, std::span<const double> g) {
                           auto ga = t.accumulate(a);
                           if (ga.empty()) return;
                           for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
                         });
}

Var affine(Var weights, Var x, Var bias) {
  const Tensor& w = weights.value();
  const Tensor& xv = x.value();
  if (w.rank() != 2) throw DimensionError("affine: weights must be a matrix, got " + w.shape_string());
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  if (xv.rank() != 1 || xv.size() != cols) {
    throw DimensionError("affine: input has shape " + xv.shape_string() + ", weights expect " +
                         std::to_string(cols) + " columns");
  }
  if (bias.valid() && (bias.value().rank() != 1 || bias.value().size() != rows)) {
    throw DimensionError("affine: bias has shape " + bias.value().shape_string() + ", expected (" +
                         std::to_string(rows) + ")");
  }
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = &w.values()[r * cols];
    double acc = bias.valid() ? bias.value()[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * xv[c];
    out[r] = acc;
  }
  return weights.tape().record(
      std::move(out), {weights, x, bias},
      [weights, x, bias, rows, cols](Tape& t, const Tensor&, std::span<const double> g) {
        const Tensor& w = t.value(weights);
        const Tensor& xv = t.value(x);
        auto gw = t.accumulate(weights);
        if (!gw.empty()) {
          for (std::size_t r = 0; r < rows; ++r) {
            double* gr = &gw[r * cols];
            for (std::size_t c = 0; c < cols; ++c) gr[c] += g[r] * xv[c];
          }
        }
        auto gx = t.accumulate(x);
        if (!gx.empty()) {
          for (std::size_t r = 0; r < rows; ++r) {
            const double* wr = &w.values()[r * cols];
            for (std::size_t c = 0; c < cols; ++c) gx[c] += wr[c] * g[r];
          }
        }
        auto gb = t.accumulate(bias);
        for (std::size_t r = 0; r < gb.size(); ++r) gb[r] += g[r];
      });
}

Var row(Var matrix, std::size_t index) {
  const Tensor& m = matrix.value();
  if (m.rank() != 2 || index >= m.rows()) {
    throw DimensionError("row: index " + std::to_string(index) + " out of range for matrix " +
                         m.shape_string());
  }
  auto r = m.row(index);
  const std::size_t cols = m.cols();
  return matrix.tape().record(Tensor::vector({r.begin(), r.end()}), {matrix},
                              [matrix, index, cols](Tape& t, const Tensor&,
                                                    std::span<const double> g) {
                                auto gm = t.accumulate(matrix);
                                if (gm.empty()) return;
                                for (std::size_t c = 0; c < cols; ++c) gm[index * cols + c] += g[c];
                              });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  const std::size_t cols = rows[0].value().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const Var& r : rows) {
    if (r.value().rank() != 1 || r.value().size() != cols) {
      throw DimensionError("stack_rows: row has shape " + r.value().shape_string() +
                           ", expected (" + std::to_string(cols) + ")");
    }
    values.insert(values.end(), r.value().values().begin(), r.value().values().end());
  }
  std::vector<Var> parents(rows.begin(), rows.end());
  return rows[0].tape().record(
      Tensor::matrix(rows.size(), cols, std::move(values)), parents,
      [parents, cols](Tape& t, const Tensor&, std::span<const double> g) {
        for (std::size_t k = 0; k < parents.size(); ++k) {
          auto gp = t.accumulate(parents[k]);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[k * cols + i];
        }
      });
}

Var project_rows(Var rows, Var projection) {
  const Tensor& x = rows.value();
  const Tensor& u = projection.value();
  if (x.rank() != 2) throw DimensionError("project_rows: rows must be a matrix, got " + x.shape_string());
  if (u.rank() != 2 || u.cols() != x.cols()) {
    throw DimensionError("project_rows: projection has shape " + u.shape_string() +
                         ", expected (*x" + std::to_string(x.cols()) + ")");
  }
  const std::size_t m = x.rows();
  const std::size_t a = u.rows();
  const std::size_t d = x.cols();
  Tensor out({m, a});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < a; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += x.values()[i * d + k] * u.values()[j * d + k];
      out.values()[i * a + j] = acc;
    }
  }
  return rows.tape().record(
      std::move(out), {rows, projection},
      [rows, projection, m, a, d](Tape& t, const Tensor&, std::span<const double> g) {
        const Tensor& x = t.value(rows);
        const Tensor& u = t.value(projection);
        auto gx = t.accumulate(rows);
        if (!gx.empty()) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < a; ++j)
              for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += g[i * a + j] * u.values()[j * d + k];
        }
        auto gu = t.accumulate(projection);
        if (!gu.empty()) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < a; ++j)
              for (std::size_t k = 0; k < d; ++k) gu[j * d + k] += g[i * a + j] * x.values()[i * d + k];
        }
      });
}

Var additive_scores(Var query, Var keys, Var score_vector) {
  const Tensor& q = query.value();
  const Tensor& k = keys.value();
  const Tensor& w = score_vector.value();
  if (k.rank() != 2) throw DimensionError("additive_scores: keys must be a matrix, got " + k.shape_string());
  const std::size_t m = k.rows();
  const std::size_t a = k.cols();
  if (q.rank() != 1 || q.size() != a) {
    throw DimensionError("additive_scores: query has shape " + q.shape_string() + ", expected (" +
                         std::to_string(a) + ")");
  }
  if (w.rank() != 1 || w.size() != a) {
    throw DimensionError("additive_scores: score vector has shape " + w.shape_string() +
                         ", expected (" + std::to_string(a) + ")");
  }
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a; ++j) acc += w[j] * std::tanh(q[j] + k.values()[i * a + j]);
    out[i] = acc;
  }
  return query.tape().record(
      std::move(out), {query, keys, score_vector},
      [query, keys, score_vector, m, a](Tape& t, const Tensor&, std::span<const double> g) {
        const Tensor& q = t.value(query);
        const Tensor& k = t.value(keys);
        const Tensor& w = t.value(score_vector);
        auto gq = t.accumulate(query);
        auto gk = t.accumulate(keys);
        auto gw = t.accumulate(score_vector);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < a; ++j) {
            const double th = std::tanh(q[j] + k.values()[i * a + j]);
            if (!gw.empty()) gw[j] += g[i] * th;
            const double inner = g[i] * w[j] * (1.0 - th * th);
            if (!gq.empty()) gq[j] += inner;
            if (!gk.empty()) gk[i * a + j] += inner;
          }
        }
      });
}

Var masked_softmax(Var logits, const Mask& mask) {
  if (logits.value().rank() != 1) {
    throw DimensionError("masked_softmax: logits have shape " + logits.value().shape_string());
  }
  Tensor out = softmax(logits.value(), mask);
  return logits.tape().record(std::move(out), {logits},
                              [logits, mask](Tape& t, const Tensor& y, std::span<const double> g) {
                                auto gl = t.accumulate(logits);
                                double inner = 0.0;
                                for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * g[i];
                                for (std::size_t i = 0; i < gl.size(); ++i) {
                                  if (!mask.empty() && !mask[i]) continue;
                                  gl[i] += y[i] * (g[i] - inner);
                                }
                              });
}

Var weighted_rows(Var weights, Var rows) {
  const Tensor& p = weights.value();
  const Tensor& x = rows.value();
  if (x.rank() != 2) throw DimensionError("weighted_rows: rows must be a matrix, got " + x.shape_string());
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  if (p.rank() != 1 || p.size() != m) {
    throw DimensionError("weighted_rows: weights have shape " + p.shape_string() + ", expected (" +
                         std::to_string(m) + ")");
  }
  Tensor out({d});
  for (std::size_t i = 0; i < m; ++i) {
    if (p[i] == 0.0) continue;
    for (std::size_t k = 0; k < d; ++k) out[k] += p[i] * x.values()[i * d + k];
  }
  return weights.tape().record(
      std::move(out), {weights, rows},
      [weights, rows, m, d](Tape& t, const Tensor&, std::span<const double> g) {
        const Tensor& p = t.value(weights);
        const Tensor& x = t.value(rows);
        auto gp = t.accumulate(weights);
        if (!gp.empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += x.values()[i * d + k] * g[k];
            gp[i] += acc;
          }
        }
        auto gx = t.accumulate(rows);
        if (!gx.empty()) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += p[i] * g[k];
        }
      });
}

Var mean_rows(Var rows, const Mask& mask) {
  const Tensor& x = rows.value();
  if (x.rank() != 2) throw DimensionError("mean_rows: rows must be a matrix, got " + x.shape_string());
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  check_mask(mask, m, "mean_rows");
  std::size_t count = 0;
  for (std::size_t i = 0; i < m; ++i) count += (mask.empty() || mask[i]) ? 1 : 0;
  if (count == 0) throw DataError("mean_rows: every row is masked");
  Tensor out({d});
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    for (std::size_t k = 0; k < d; ++k) out[k] += x.values()[i * d + k];
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (double& v : out.values()) v *= inv;
  return rows.tape().record(std::move(out), {rows},
                            [rows, mask, m, d, inv](Tape& t, const Tensor&, std::span<const double> g) {
                              auto gx = t.accumulate(rows);
                              if (gx.empty()) return;
                              for (std::size_t i = 0; i < m; ++i) {
                                if (!mask.empty() && !mask[i]) continue;
                                for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += g[k] * inv;
                              }
                            });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& z = logits.value();
  if (z.rank() != 1 || target >= z.size()) {
    throw DimensionError("cross_entropy: target " + std::to_string(target) +
                         " out of range for logits " + z.shape_string());
  }
  double top = z[0];
  for (double v : z.values()) top = std::max(top, v);
  double total = 0.0;
  for (double v : z.values()) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  return logits.tape().record(
      Tensor::scalar(log_norm - z[target]), {logits},
      [logits, target, log_norm](Tape& t, const Tensor&, std::span<const double> g) {
        const Tensor& z = t.value(logits);
        auto gz = t.accumulate(logits);
        if (gz.empty()) return;
        for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += g[0] * std::exp(z[i] - log_norm);
        gz[target] -= g[0];
      });
}

Var euclidean_distance(Var a, Var b, double eps) {
  require_same(a.value(), b.value(), "euclidean_distance");
  double total = eps;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double diff = a.value()[i] - b.value()[i];
    total += diff * diff;
  }
  return a.tape().record(Tensor::scalar(std::sqrt(total)), {a, b},
                         [a, b](Tape& t, const Tensor& y, std::span<const double> g) {
                           const Tensor& av = t.value(a);
                           const Tensor& bv = t.value(b);
                           const double coef = g[0] / y[0];
                           auto ga = t.accumulate(a);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += coef * (av[i] - bv[i]);
                           auto gb = t.accumulate(b);
                           for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= coef * (av[i] - bv[i]);
                         });
}

}  // namespace ag
}  // namespace recnet

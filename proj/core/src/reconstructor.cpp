#include "recnet/reconstructor.hpp"

#include <cmath>
#include <string>

#include "recnet/errors.hpp"
#include "recnet/lstm.hpp"

namespace recnet {

std::string_view kind_name(ReconstructorKind kind) {
  return kind == ReconstructorKind::global ? "global" : "local";
}

ReconstructorParams ReconstructorParams::zeros(ReconstructorKind kind, const ModelDims& dims) {
  const std::size_t d = dims.feature_dim;
  const std::size_t h = dims.hidden_size;
  ReconstructorParams p;
  p.kind = kind;
  p.lstm_bias = Tensor({4 * d});
  if (kind == ReconstructorKind::global) {
    p.lstm_weights = Tensor({4 * d, 2 * h + d});
  } else {
    p.lstm_weights = Tensor({4 * d, h + d});
    p.att_state = Tensor({d, d});
    p.att_hidden = Tensor({d, h});
    p.att_score = Tensor({d});
    p.att_bias = Tensor({d});
  }
  return p;
}

ReconstructorParams ReconstructorParams::uniform(ReconstructorKind kind, const ModelDims& dims, Rng& rng,
                                                 double scale) {
  ReconstructorParams p = zeros(kind, dims);
  for (const ParamRef& r : p.refs())
    for (double& v : r.tensor->values()) v = rng.uniform(-scale, scale);
  return p;
}

std::vector<ParamRef> ReconstructorParams::refs() {
  std::vector<ParamRef> out = {{"reconstructor.lstm_weights", &lstm_weights},
                               {"reconstructor.lstm_bias", &lstm_bias}};
  if (kind == ReconstructorKind::local) {
    out.push_back({"reconstructor.att_state", &att_state});
    out.push_back({"reconstructor.att_hidden", &att_hidden});
    out.push_back({"reconstructor.att_score", &att_score});
    out.push_back({"reconstructor.att_bias", &att_bias});
  }
  return out;
}

void ReconstructorParams::validate(const ModelDims& dims) const {
  ReconstructorParams expected = zeros(kind, dims);
  auto mine = const_cast<ReconstructorParams*>(this)->refs();
  auto want = expected.refs();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    require_shape(*mine[k].tensor, want[k].tensor->shape(), mine[k].name);
    if (!all_finite(*mine[k].tensor)) throw DataError(mine[k].name + " contains non-finite values");
  }
}

ReconstructorNodes ReconstructorNodes::bind(Tape& tape, const ReconstructorParams& p, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  ReconstructorNodes n;
  n.kind = p.kind;
  n.lstm_weights = put(p.lstm_weights);
  n.lstm_bias = put(p.lstm_bias);
  if (p.kind == ReconstructorKind::local) {
    n.att_state = put(p.att_state);
    n.att_hidden = put(p.att_hidden);
    n.att_score = put(p.att_score);
    n.att_bias = put(p.att_bias);
  }
  return n;
}

std::vector<Var> ReconstructorNodes::all() const {
  if (kind == ReconstructorKind::global) return {lstm_weights, lstm_bias};
  return {lstm_weights, lstm_bias, att_state, att_hidden, att_score, att_bias};
}

namespace {

Tensor stack_values(const std::vector<Var>& vars) {
  if (vars.empty()) return Tensor{};
  const std::size_t cols = vars.front().value().size();
  std::vector<double> values;
  for (const Var& v : vars) values.insert(values.end(), v.value().values().begin(), v.value().values().end());
  return Tensor::matrix(vars.size(), cols, std::move(values));
}

std::size_t reconstructor_width(const ReconstructorNodes& params) {
  return params.lstm_bias.value().size() / 4;
}

}  // namespace

ReconstructionTrace ReconstructionGraph::trace() const {
  ReconstructionTrace t;
  t.states = stack_values(states);
  if (summary.valid()) t.summary = summary.value();
  t.attention = stack_values(attention);
  t.contexts = stack_values(contexts);
  return t;
}

Tensor mean_pool(std::span<const Tensor> vectors, const Mask& mask) {
  if (vectors.empty()) throw DataError("mean_pool: no vectors");
  Tape tape(false);
  std::vector<Var> rows;
  for (const Tensor& v : vectors) rows.push_back(tape.constant(v));
  return ag::mean_rows(ag::stack_rows(rows), mask).value();
}

double euclidean_distance(const Tensor& a, const Tensor& b) {
  Tape tape(false);
  return ag::euclidean_distance(tape.constant(a), tape.constant(b), kDistanceEps).value().item();
}

ReconstructionGraph reconstruct_global(std::span<const Var> hidden, const ReconstructorNodes& params) {
  if (hidden.empty()) throw DataError("reconstruct_global: decoder produced no hidden states");
  if (params.kind != ReconstructorKind::global) throw ConfigError("reconstruct_global needs global parameters");
  Tape& tape = params.lstm_weights.tape();
  ReconstructionGraph g;
  g.summary = ag::mean_rows(ag::stack_rows(hidden));
  LSTMNodes state = constant_state(tape, LSTMState::zeros(reconstructor_width(params)));
  for (const Var& h : hidden) {
    state = lstm_step(ag::concat({h, g.summary}), state, params.lstm_weights, params.lstm_bias);
    g.states.push_back(state.hidden);
  }
  return g;
}

ReconstructionGraph reconstruct_local(std::span<const Var> hidden, std::size_t frame_budget,
                                      const ReconstructorNodes& params) {
  if (hidden.empty()) throw DataError("reconstruct_local: decoder produced no hidden states");
  if (frame_budget == 0) throw ConfigError("reconstruct_local: frame budget must be at least 1");
  if (params.kind != ReconstructorKind::local) throw ConfigError("reconstruct_local needs local parameters");
  Tape& tape = params.lstm_weights.tape();
  ReconstructionGraph g;
  Var states = ag::stack_rows(hidden);
  Var keys = ag::project_rows(states, params.att_hidden);
  LSTMNodes state = constant_state(tape, LSTMState::zeros(reconstructor_width(params)));
  for (std::size_t t = 0; t < frame_budget; ++t) {
    Var query = ag::affine(params.att_state, state.hidden, params.att_bias);
    Var weights = ag::masked_softmax(ag::additive_scores(query, keys, params.att_score), {});
    Var context = ag::weighted_rows(weights, states);
    state = lstm_step(context, state, params.lstm_weights, params.lstm_bias);
    g.states.push_back(state.hidden);
    g.attention.push_back(weights);
    g.contexts.push_back(context);
  }
  return g;
}

Var global_loss(const FrameFeatureSequence& frames, const ReconstructionGraph& rec) {
  if (rec.states.empty()) throw DataError("global_loss: no reconstructed states");
  Tape& tape = rec.states.front().tape();
  const std::size_t d = rec.states.front().value().size();
  if (frames.dim() != d) {
    throw DimensionError("global_loss: frame features have dimension " + std::to_string(frames.dim()) +
                         ", reconstructed states have dimension " + std::to_string(d));
  }
  Var target = ag::mean_rows(tape.constant(frames.features), frames.mask);
  Var pooled = ag::mean_rows(ag::stack_rows(rec.states));
  return ag::euclidean_distance(pooled, target, kDistanceEps);
}

Var local_loss(const FrameFeatureSequence& frames, const ReconstructionGraph& rec) {
  if (rec.states.size() != frames.budget()) {
    throw DimensionError("local_loss: " + std::to_string(rec.states.size()) +
                         " reconstructed states for " + std::to_string(frames.budget()) + " frame slots");
  }
  Tape& tape = rec.states.front().tape();
  std::vector<Var> terms;
  for (std::size_t j = 0; j < frames.budget(); ++j) {
    if (!frames.mask[j]) continue;
    auto row = frames.features.row(j);
    Var target = tape.constant(Tensor::vector({row.begin(), row.end()}));
    if (rec.states[j].value().size() != row.size()) {
      throw DimensionError("local_loss: reconstructed state has dimension " +
                           std::to_string(rec.states[j].value().size()) + ", frame features have " +
                           std::to_string(row.size()));
    }
    terms.push_back(ag::euclidean_distance(rec.states[j], target, kDistanceEps));
  }
  if (terms.empty()) throw DataError("local_loss: every frame is masked");
  return ag::scale(ag::add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

namespace {

std::vector<Var> hidden_constants(Tape& tape, const DecoderTrace& trace) {
  std::vector<Var> out;
  for (std::size_t t = 0; t < trace.steps(); ++t) {
    auto r = trace.hidden.row(t);
    out.push_back(tape.constant(Tensor::vector({r.begin(), r.end()})));
  }
  return out;
}

ReconstructionGraph graph_from_states(Tape& tape, const ReconstructionTrace& rec) {
  ReconstructionGraph g;
  for (std::size_t t = 0; t < rec.steps(); ++t) {
    auto r = rec.states.row(t);
    g.states.push_back(tape.constant(Tensor::vector({r.begin(), r.end()})));
  }
  return g;
}

}  // namespace

ReconstructionTrace reconstruct_global(const DecoderTrace& trace, const ReconstructorParams& params) {
  Tape tape(false);
  auto nodes = ReconstructorNodes::bind(tape, params, false);
  auto hidden = hidden_constants(tape, trace);
  return reconstruct_global(hidden, nodes).trace();
}

ReconstructionTrace reconstruct_local(const DecoderTrace& trace, std::size_t frame_budget,
                                      const ReconstructorParams& params) {
  Tape tape(false);
  auto nodes = ReconstructorNodes::bind(tape, params, false);
  auto hidden = hidden_constants(tape, trace);
  return reconstruct_local(hidden, frame_budget, nodes).trace();
}

double global_loss(const FrameFeatureSequence& frames, const ReconstructionTrace& rec) {
  Tape tape(false);
  return global_loss(frames, graph_from_states(tape, rec)).value().item();
}

double local_loss(const FrameFeatureSequence& frames, const ReconstructionTrace& rec) {
  Tape tape(false);
  return local_loss(frames, graph_from_states(tape, rec)).value().item();
}

}  // namespace recnet

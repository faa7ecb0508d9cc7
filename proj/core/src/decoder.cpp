#include "recnet/decoder.hpp"

#include <cmath>
#include <string>

#include "recnet/errors.hpp"

namespace recnet {

void ModelDims::validate() const {
  if (vocab_size < kReservedTokens) {
    throw ConfigError("vocabulary must contain the " + std::to_string(kReservedTokens) + " reserved tokens");
  }
  if (embed_size == 0 || hidden_size == 0 || feature_dim == 0 || frame_budget == 0) {
    throw ConfigError("model dimensions must all be positive");
  }
}

DecoderParams DecoderParams::zeros(const ModelDims& d) {
  const std::size_t h = d.hidden_size;
  DecoderParams p;
  p.embedding = Tensor({d.vocab_size, d.embed_size});
  p.lstm_weights = Tensor({4 * h, d.embed_size + d.feature_dim + h});
  p.lstm_bias = Tensor({4 * h});
  p.att_hidden = Tensor({h, h});
  p.att_feature = Tensor({h, d.feature_dim});
  p.att_score = Tensor({h});
  p.att_bias = Tensor({h});
  p.out_weights = Tensor({d.vocab_size, h});
  p.out_bias = Tensor({d.vocab_size});
  return p;
}

DecoderParams DecoderParams::uniform(const ModelDims& dims, Rng& rng, double scale) {
  DecoderParams p = zeros(dims);
  for (const ParamRef& r : p.refs())
    for (double& v : r.tensor->values()) v = rng.uniform(-scale, scale);
  for (double& v : p.embedding.row(kPad)) v = 0.0;
  return p;
}

std::vector<ParamRef> DecoderParams::refs() {
  return {{"decoder.embedding", &embedding},     {"decoder.lstm_weights", &lstm_weights},
          {"decoder.lstm_bias", &lstm_bias},     {"decoder.att_hidden", &att_hidden},
          {"decoder.att_feature", &att_feature}, {"decoder.att_score", &att_score},
          {"decoder.att_bias", &att_bias},       {"decoder.out_weights", &out_weights},
          {"decoder.out_bias", &out_bias}};
}

void DecoderParams::validate(const ModelDims& dims) const {
  DecoderParams expected = zeros(dims);
  auto mine = const_cast<DecoderParams*>(this)->refs();
  auto want = expected.refs();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    require_shape(*mine[k].tensor, want[k].tensor->shape(), mine[k].name);
    if (!all_finite(*mine[k].tensor)) throw DataError(mine[k].name + " contains non-finite values");
  }
}

DecoderNodes DecoderNodes::bind(Tape& tape, const DecoderParams& p, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  return {put(p.embedding),   put(p.lstm_weights), put(p.lstm_bias),
          put(p.att_hidden),  put(p.att_feature),  put(p.att_score),
          put(p.att_bias),    put(p.out_weights),  put(p.out_bias)};
}

std::vector<Var> DecoderNodes::all() const {
  return {embedding, lstm_weights, lstm_bias, att_hidden, att_feature,
          att_score, att_bias,     out_weights, out_bias};
}

FrameNodes attach_frames(Tape& tape, const DecoderNodes& params, const FrameFeatureSequence& frames) {
  if (frames.features.rank() != 2) {
    throw DimensionError("frame features have shape " + frames.features.shape_string());
  }
  if (frames.mask.size() != frames.budget()) {
    throw DimensionError("frame mask has length " + std::to_string(frames.mask.size()) + ", expected " +
                         std::to_string(frames.budget()));
  }
  FrameNodes out;
  out.features = tape.constant(frames.features);
  out.keys = ag::project_rows(out.features, params.att_feature);
  out.mask = frames.mask;
  return out;
}

AttentionNodes attention_context(Var prev_hidden, const FrameNodes& frames, const DecoderNodes& params) {
  Var query = ag::affine(params.att_hidden, prev_hidden, params.att_bias);
  Var scores = ag::additive_scores(query, frames.keys, params.att_score);
  Var weights = ag::masked_softmax(scores, frames.mask);
  return {ag::weighted_rows(weights, frames.features), weights};
}

StepNodes decode_step(TokenId prev_token, const LSTMNodes& state, const FrameNodes& frames,
                      const DecoderNodes& params) {
  const std::size_t vocab = params.embedding.value().rows();
  if (prev_token >= vocab) {
    throw DataError("token id " + std::to_string(prev_token) + " out of range for vocabulary of size " +
                    std::to_string(vocab));
  }
  AttentionNodes att = attention_context(state.hidden, frames, params);
  Var input = ag::concat({ag::row(params.embedding, prev_token), att.context});
  LSTMNodes next = lstm_step(input, state, params.lstm_weights, params.lstm_bias);
  Var logits = ag::affine(params.out_weights, next.hidden, params.out_bias);
  return {logits, next, att.context, att.weights};
}

namespace {

Tensor stack_values(const std::vector<Var>& vars) {
  if (vars.empty()) return Tensor{};
  const std::size_t cols = vars.front().value().size();
  std::vector<double> values;
  values.reserve(vars.size() * cols);
  for (const Var& v : vars) values.insert(values.end(), v.value().values().begin(), v.value().values().end());
  return Tensor::matrix(vars.size(), cols, std::move(values));
}

}  // namespace

DecoderTrace DecoderGraph::trace() const {
  return {stack_values(hidden), stack_values(contexts), stack_values(attention), stack_values(logits)};
}

DecoderGraph teacher_forced(const DecoderNodes& params, const FrameNodes& frames,
                            std::span<const TokenId> caption_ids) {
  std::size_t end = caption_ids.size();
  while (end > 0 && caption_ids[end - 1] == kPad) --end;
  TokenSequence caption{{caption_ids.begin(), caption_ids.begin() + static_cast<std::ptrdiff_t>(end)}};
  caption.validate(params.embedding.value().rows());

  Tape& tape = params.embedding.tape();
  const std::size_t h = params.lstm_bias.value().size() / 4;
  LSTMNodes state = constant_state(tape, LSTMState::zeros(h));
  DecoderGraph g;
  std::vector<Var> losses;
  for (std::size_t t = 1; t < caption.ids.size(); ++t) {
    StepNodes step = decode_step(caption.ids[t - 1], state, frames, params);
    losses.push_back(ag::cross_entropy(step.logits, caption.ids[t]));
    g.hidden.push_back(step.state.hidden);
    g.contexts.push_back(step.context);
    g.attention.push_back(step.weights);
    g.logits.push_back(step.logits);
    g.targets.push_back(caption.ids[t]);
    state = step.state;
  }
  g.loss = ag::add_n(losses);
  return g;
}

AttentionResult attention_context(const Tensor& prev_hidden, const FrameFeatureSequence& frames,
                                  const DecoderParams& params) {
  Tape tape(false);
  DecoderNodes p = DecoderNodes::bind(tape, params, false);
  FrameNodes f = attach_frames(tape, p, frames);
  AttentionNodes a = attention_context(tape.constant(prev_hidden), f, p);
  return {a.context.value(), a.weights.value()};
}

DecodeStepResult decode_step(TokenId prev_token, const LSTMState& state,
                             const FrameFeatureSequence& frames, const DecoderParams& params) {
  Tape tape(false);
  DecoderNodes p = DecoderNodes::bind(tape, params, false);
  FrameNodes f = attach_frames(tape, p, frames);
  StepNodes s = decode_step(prev_token, constant_state(tape, state), f, p);
  return {s.logits.value(), s.state.values(), s.context.value(), s.weights.value()};
}

NllResult teacher_forced_nll(const FrameFeatureSequence& frames, const TokenSequence& caption,
                             const DecoderParams& params) {
  Tape tape(false);
  DecoderNodes p = DecoderNodes::bind(tape, params, false);
  FrameNodes f = attach_frames(tape, p, frames);
  DecoderGraph g = teacher_forced(p, f, caption.ids);
  return {g.loss.value().item(), g.trace()};
}

TokenAccuracy teacher_forced_accuracy(const FrameFeatureSequence& frames, const TokenSequence& caption,
                                      const DecoderParams& params) {
  NllResult r = teacher_forced_nll(frames, caption, params);
  TokenAccuracy acc;
  const std::size_t vocab = r.trace.logits.cols();
  for (std::size_t t = 0; t < r.trace.steps(); ++t) {
    TokenId best = kEos;
    for (TokenId c = kEos; c < vocab; ++c) {
      if (r.trace.logits.at(t, c) > r.trace.logits.at(t, best)) best = c;
    }
    acc.correct += best == caption.ids[t + 1] ? 1 : 0;
    ++acc.total;
  }
  return acc;
}

Tensor log_softmax(const Tensor& logits) {
  double top = logits[0];
  for (double v : logits.values()) top = std::max(top, v);
  double total = 0.0;
  for (double v : logits.values()) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  Tensor out = logits;
  for (double& v : out.values()) v -= log_norm;
  return out;
}

}  // namespace recnet

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recnet/autodiff.hpp"
#include "recnet/features.hpp"
#include "recnet/lstm.hpp"
#include "recnet/optim.hpp"
#include "recnet/random.hpp"
#include "recnet/tensor.hpp"
#include "recnet/text.hpp"

namespace recnet {

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embed_size = 0;
  std::size_t hidden_size = 0;
  std::size_t feature_dim = 0;
  std::size_t frame_budget = 0;

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Encoder-decoder parameters. The attention projection width equals the
// decoder hidden size.
struct DecoderParams {
  Tensor embedding;     // (V, E); row PAD stays zero
  Tensor lstm_weights;  // (4H, E + d + H) over [embedding; context; h_prev]
  Tensor lstm_bias;     // (4H)
  Tensor att_hidden;    // (H, H)  projects the query h_{t-1}
  Tensor att_feature;   // (H, d)  projects each frame feature
  Tensor att_score;     // (H)     score vector
  Tensor att_bias;      // (H)
  Tensor out_weights;   // (V, H)
  Tensor out_bias;      // (V)

  static DecoderParams zeros(const ModelDims& dims);
  // Every entry uniform in [−scale, scale] except the PAD embedding row.
  static DecoderParams uniform(const ModelDims& dims, Rng& rng, double scale);

  std::vector<ParamRef> refs();
  void validate(const ModelDims& dims) const;
};

// Decoder parameters placed on a tape.
struct DecoderNodes {
  Var embedding, lstm_weights, lstm_bias;
  Var att_hidden, att_feature, att_score, att_bias;
  Var out_weights, out_bias;

  // trainable = false records the parameters as constants.
  static DecoderNodes bind(Tape& tape, const DecoderParams& params, bool trainable);
  std::vector<Var> all() const;
};

// Frame features on a tape together with their (query-independent) key
// projections U_a·v_i.
struct FrameNodes {
  Var features;  // (m, d)
  Var keys;      // (m, H)
  Mask mask;
};

FrameNodes attach_frames(Tape& tape, const DecoderNodes& params, const FrameFeatureSequence& frames);

struct AttentionNodes {
  Var context;  // (d)
  Var weights;  // (m)
};

// e_i = wᵀ tanh(W_a·h_{t−1} + U_a·v_i + b), α = masked softmax(e), c = Σ α_i v_i.
AttentionNodes attention_context(Var prev_hidden, const FrameNodes& frames, const DecoderNodes& params);

struct StepNodes {
  Var logits;
  LSTMNodes state;
  Var context;
  Var weights;
};

// Attend with the previous hidden state, run the LSTM on
// [embedding(prev_token); context], project the new hidden state to logits.
StepNodes decode_step(TokenId prev_token, const LSTMNodes& state, const FrameNodes& frames,
                      const DecoderNodes& params);

// Per-step quantities of one teacher-forced pass, as plain values.
struct DecoderTrace {
  Tensor hidden;     // (n, H)
  Tensor contexts;   // (n, d)
  Tensor attention;  // (n, m)
  Tensor logits;     // (n, V)

  std::size_t steps() const { return hidden.rows(); }
};

struct DecoderGraph {
  Var loss;  // Σ −log P(s_t | s_<t, V)
  std::vector<Var> hidden;
  std::vector<Var> contexts;
  std::vector<Var> attention;
  std::vector<Var> logits;
  std::vector<TokenId> targets;

  std::size_t predicted() const { return targets.size(); }
  DecoderTrace trace() const;
};

// Teacher-forced pass over `caption_ids` (BOS ... EOS, optionally followed by
// PAD). One prediction per non-PAD token after BOS.
DecoderGraph teacher_forced(const DecoderNodes& params, const FrameNodes& frames,
                            std::span<const TokenId> caption_ids);

// Value-level wrappers over the graph functions above.
struct AttentionResult {
  Tensor context;
  Tensor weights;
};
AttentionResult attention_context(const Tensor& prev_hidden, const FrameFeatureSequence& frames,
                                  const DecoderParams& params);

struct DecodeStepResult {
  Tensor logits;
  LSTMState state;
  Tensor context;
  Tensor weights;
};
DecodeStepResult decode_step(TokenId prev_token, const LSTMState& state,
                             const FrameFeatureSequence& frames, const DecoderParams& params);

struct NllResult {
  double loss = 0.0;
  DecoderTrace trace;
};
NllResult teacher_forced_nll(const FrameFeatureSequence& frames, const TokenSequence& caption,
                             const DecoderParams& params);

// Fraction of predicted positions whose argmax over the inference candidates
// (every id except PAD and BOS) equals the reference token.
struct TokenAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};
TokenAccuracy teacher_forced_accuracy(const FrameFeatureSequence& frames, const TokenSequence& caption,
                                      const DecoderParams& params);

// Log-softmax of a logit vector.
Tensor log_softmax(const Tensor& logits);

}  // namespace recnet

#pragma once

#include <cstddef>

#include "recnet/decoder.hpp"
#include "recnet/features.hpp"
#include "recnet/text.hpp"

namespace recnet {

struct BeamSearchOptions {
  std::size_t beam = 5;
  // Maximum number of words before EOS is forced.
  std::size_t max_len = kMaxCaptionWords;
  // Rank finished hypotheses by score / (words + 1) instead of the raw sum.
  bool length_normalize = false;
};

struct BeamResult {
  TokenSequence caption;  // BOS words... EOS
  double score = 0.0;     // Σ log P over the words and the final EOS
};

// Beam search over the decoder. Every step ranks all one-token extensions of
// the live hypotheses (PAD and BOS are never candidates) and keeps the best
// `beam` of them; extensions ending in EOS become finished hypotheses and
// leave the live set. A hypothesis with max_len words can only emit EOS.
// Score ties are broken by the lexicographically smaller id sequence.
BeamResult beam_search(const FrameFeatureSequence& frames, const DecoderParams& params,
                       const BeamSearchOptions& options = {});

// Argmax decoding: at each step the highest-probability candidate (lowest id
// on ties) until EOS or max_len words.
BeamResult greedy_decode(const FrameFeatureSequence& frames, const DecoderParams& params,
                         std::size_t max_len = kMaxCaptionWords);

}  // namespace recnet

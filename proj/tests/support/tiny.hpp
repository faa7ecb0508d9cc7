#pragma once

#include <cstddef>
#include <vector>

#include "recnet/decoder.hpp"
#include "recnet/features.hpp"
#include "recnet/random.hpp"
#include "recnet/text.hpp"

namespace tiny {

using namespace recnet;

inline ModelDims dims(std::size_t vocab = 9, std::size_t budget = 5) { return {vocab, 4, 5, 3, budget}; }

// `real` frames of N(0,1) values, zero-padded to the budget.
inline FrameFeatureSequence frames(Rng& rng, std::size_t real, std::size_t budget, std::size_t d) {
  Tensor raw({real, d});
  for (double& v : raw.values()) v = rng.normal();
  return sample_frames(raw, budget);
}

inline TokenSequence caption(Rng& rng, std::size_t words, std::size_t vocab) {
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < words; ++i)
    ids.push_back(static_cast<TokenId>(kReservedTokens + rng.below(vocab - kReservedTokens)));
  return make_sequence(ids);
}

}  // namespace tiny

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "oracles/straight_line.hpp"
#include "recnet/beam_search.hpp"
#include "recnet/errors.hpp"
#include "recnet/optim.hpp"
#include "support/tiny.hpp"

using namespace recnet;

namespace {

struct Best {
  std::vector<TokenId> words;
  double score = -1e300;
};

// Every word sequence of length 0..max_len over the non-EOS candidates,
// scored by the straight-line chain of step log-probabilities.
Best exhaustive(const FrameFeatureSequence& f, const DecoderParams& p, std::size_t vocab, std::size_t max_len) {
  Best best;
  std::vector<TokenId> words;
  std::function<void()> visit = [&]() {
    const double s = oracle::sequence_log_prob(f, words, p);
    if (s > best.score) best = {words, s};
    if (words.size() == max_len) return;
    for (TokenId t = kEos + 1; t < vocab; ++t) {
      words.push_back(t);
      visit();
      words.pop_back();
    }
  };
  visit();
  return best;
}

}  // namespace

TEST(BeamSearch, WidthOneIsGreedy) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 1.5);
    FrameFeatureSequence f = tiny::frames(rng, 1 + rng.below(5), 5, 3);
    BeamResult b = beam_search(f, p, {1, 8, false});
    BeamResult g = greedy_decode(f, p, 8);
    EXPECT_EQ(b.caption, g.caption);
    EXPECT_DOUBLE_EQ(b.score, g.score);
  }
}

TEST(BeamSearch, FullWidthMatchesExhaustiveSearch) {
  Rng rng(2);
  for (std::size_t vocab : {5u, 7u}) {
    const std::size_t max_len = 4;
    const std::size_t width = static_cast<std::size_t>(std::pow(vocab, max_len));
    for (int trial = 0; trial < 8; ++trial) {
      DecoderParams p = DecoderParams::uniform(tiny::dims(vocab), rng, 2.0);
      FrameFeatureSequence f = tiny::frames(rng, 2 + rng.below(4), 5, 3);
      Best want = exhaustive(f, p, vocab, max_len);
      BeamResult got = beam_search(f, p, {width, max_len, false});
      EXPECT_EQ(got.caption, make_sequence(want.words)) << "vocab " << vocab << " trial " << trial;
      EXPECT_NEAR(got.score, want.score, 1e-10);
    }
  }
}

TEST(BeamSearch, ScoreIsSumOfLogProbabilities) {
  Rng rng(3);
  DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 1.0);
  FrameFeatureSequence f = tiny::frames(rng, 4, 5, 3);
  BeamResult r = beam_search(f, p, {5, 10, false});
  std::vector<TokenId> words(r.caption.words().begin(), r.caption.words().end());
  EXPECT_NEAR(r.score, oracle::sequence_log_prob(f, words, p), 1e-10);
  EXPECT_NO_THROW(r.caption.validate(9));
}

TEST(BeamSearch, WiderBeamNeverScoresLower) {
  Rng rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 1.5);
    FrameFeatureSequence f = tiny::frames(rng, 1 + rng.below(5), 5, 3);
    double prev = -1e300;
    for (std::size_t beam = 1; beam <= 10; ++beam) {
      const double s = beam_search(f, p, {beam, 6, false}).score;
      EXPECT_GE(s, prev - 1e-12) << "trial " << trial << " beam " << beam;
      prev = std::max(prev, s);
    }
  }
}

TEST(BeamSearch, RespectsMaxLength) {
  Rng rng(5);
  DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 0.5);
  // Make EOS very unlikely so only the length cap ends decoding.
  p.out_bias[kEos] = -50.0;
  FrameFeatureSequence f = tiny::frames(rng, 3, 5, 3);
  for (std::size_t max_len : {0u, 1u, 3u, 7u}) {
    BeamResult b = beam_search(f, p, {3, max_len, false});
    EXPECT_EQ(b.caption.words().size(), max_len);
    EXPECT_EQ(greedy_decode(f, p, max_len).caption.words().size(), max_len);
  }
}

TEST(BeamSearch, NeverEmitsPadOrBos) {
  Rng rng(6);
  DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 0.5);
  p.out_bias[kPad] = 40.0;
  p.out_bias[kBos] = 40.0;
  FrameFeatureSequence f = tiny::frames(rng, 3, 5, 3);
  BeamResult b = beam_search(f, p, {4, 5, false});
  for (TokenId t : b.caption.words()) {
    EXPECT_NE(t, kPad);
    EXPECT_NE(t, kBos);
  }
}

TEST(BeamSearch, TiesGoToSmallerIds) {
  const ModelDims d = tiny::dims();
  DecoderParams p = DecoderParams::zeros(d);
  Rng rng(7);
  FrameFeatureSequence f = tiny::frames(rng, 3, 5, 3);
  // Uniform logits: every one-step extension ties, EOS (lowest candidate id)
  // wins immediately.
  EXPECT_TRUE(beam_search(f, p, {5, 4, false}).caption.words().empty());
  p.out_bias[kEos] = -10.0;
  BeamResult b = beam_search(f, p, {5, 2, false});
  EXPECT_EQ(std::vector<TokenId>(b.caption.words().begin(), b.caption.words().end()), (std::vector<TokenId>{3, 3}));
}

TEST(BeamSearch, IsDeterministicAndValidatesWidth) {
  Rng rng(8);
  DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 1.0);
  FrameFeatureSequence f = tiny::frames(rng, 3, 5, 3);
  BeamResult a = beam_search(f, p), b = beam_search(f, p);
  EXPECT_EQ(a.caption, b.caption);
  EXPECT_EQ(a.score, b.score);
  EXPECT_THROW(beam_search(f, p, {0, 5, false}), ConfigError);
}

TEST(BeamSearch, LengthNormalizedScoreStillReportsRawSum) {
  Rng rng(9);
  DecoderParams p = DecoderParams::uniform(tiny::dims(), rng, 1.0);
  FrameFeatureSequence f = tiny::frames(rng, 3, 5, 3);
  BeamResult r = beam_search(f, p, {5, 8, true});
  std::vector<TokenId> words(r.caption.words().begin(), r.caption.words().end());
  EXPECT_NEAR(r.score, oracle::sequence_log_prob(f, words, p), 1e-10);
}

TEST(BeamSearch, OverfitModelReturnsItsCaption) {
  Rng rng(10);
  const ModelDims d = tiny::dims();
  DecoderParams p = DecoderParams::uniform(d, rng, 0.1);
  FrameFeatureSequence f = tiny::frames(rng, 4, 5, 3);
  const TokenSequence target = make_sequence(std::vector<TokenId>{5, 8, 4, 4, 7});
  auto refs = p.refs();
  AdaDeltaState opt = AdaDeltaState::for_params(refs);
  for (int step = 0; step < 1000; ++step) {
    Tape tape;
    DecoderNodes nodes = DecoderNodes::bind(tape, p, true);
    FrameNodes frames = attach_frames(tape, nodes, f);
    DecoderGraph g = teacher_forced(nodes, frames, target.ids);
    tape.backward(g.loss);
    std::vector<Tensor> grads;
    for (Var v : nodes.all()) grads.push_back(tape.grad(v));
    grads[0].row(kPad)[0] = 0.0;
    clip_by_global_norm(grads, 5.0);
    adadelta_update(refs, grads, opt);
  }
  EXPECT_LT(teacher_forced_nll(f, target, p).loss, 0.1);
  EXPECT_EQ(beam_search(f, p).caption, target);
  EXPECT_EQ(greedy_decode(f, p).caption, target);
}

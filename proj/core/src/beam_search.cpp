#include "recnet/beam_search.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "recnet/errors.hpp"

namespace recnet {

namespace {

struct Hypothesis {
  std::vector<TokenId> words;
  double score = 0.0;
  LSTMNodes state;
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
};

double ranking_score(double score, std::size_t words, bool normalize) {
  return normalize ? score / static_cast<double>(words + 1) : score;
}

}  // namespace

BeamResult beam_search(const FrameFeatureSequence& frames, const DecoderParams& params,
                       const BeamSearchOptions& options) {
  if (options.beam == 0) throw ConfigError("beam width must be at least 1");
  Tape tape(false);
  DecoderNodes p = DecoderNodes::bind(tape, params, false);
  FrameNodes f = attach_frames(tape, p, frames);
  const std::size_t vocab = params.out_bias.size();
  const std::size_t hidden = params.lstm_bias.size() / 4;

  std::vector<Hypothesis> live;
  live.push_back({{}, 0.0, constant_state(tape, LSTMState::zeros(hidden))});
  std::vector<BeamResult> finished;
  std::vector<double> finished_rank;

  auto prefix_less = [&](const Candidate& a, const Candidate& b) {
    const auto& wa = live[a.parent].words;
    const auto& wb = live[b.parent].words;
    if (wa != wb) return wa < wb;
    return a.token < b.token;
  };

  while (!live.empty()) {
    std::vector<Candidate> candidates;
    std::vector<LSTMNodes> next_states(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const Hypothesis& hyp = live[h];
      const TokenId prev = hyp.words.empty() ? kBos : hyp.words.back();
      StepNodes step = decode_step(prev, hyp.state, f, p);
      next_states[h] = step.state;
      const Tensor logp = log_softmax(step.logits.value());
      if (hyp.words.size() >= options.max_len) {
        candidates.push_back({h, kEos, hyp.score + logp[kEos]});
        continue;
      }
      for (TokenId c = kEos; c < vocab; ++c) candidates.push_back({h, c, hyp.score + logp[c]});
    }
    const std::size_t keep = std::min(options.beam, candidates.size());
    auto better = [&](const Candidate& a, const Candidate& b) {
      const double ra = ranking_score(a.score, live[a.parent].words.size() + (a.token == kEos ? 0 : 1),
                                      options.length_normalize);
      const double rb = ranking_score(b.score, live[b.parent].words.size() + (b.token == kEos ? 0 : 1),
                                      options.length_normalize);
      if (ra != rb) return ra > rb;
      return prefix_less(a, b);
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = candidates[i];
      const Hypothesis& parent = live[c.parent];
      if (c.token == kEos) {
        finished.push_back({make_sequence(parent.words), c.score});
        finished_rank.push_back(ranking_score(c.score, parent.words.size(), options.length_normalize));
        continue;
      }
      Hypothesis child{parent.words, c.score, next_states[c.parent]};
      child.words.push_back(c.token);
      next.push_back(std::move(child));
    }
    live = std::move(next);

    // Raw log-prob sums only decrease as hypotheses grow, so no live
    // hypothesis can overtake the best finished one.
    if (!options.length_normalize && !finished.empty() && !live.empty()) {
      const double best_finished = *std::max_element(finished_rank.begin(), finished_rank.end());
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, h.score);
      if (best_finished >= best_live) break;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (finished_rank[i] > finished_rank[best] ||
        (finished_rank[i] == finished_rank[best] && finished[i].caption.ids < finished[best].caption.ids)) {
      best = i;
    }
  }
  return finished[best];
}

BeamResult greedy_decode(const FrameFeatureSequence& frames, const DecoderParams& params,
                         std::size_t max_len) {
  Tape tape(false);
  DecoderNodes p = DecoderNodes::bind(tape, params, false);
  FrameNodes f = attach_frames(tape, p, frames);
  const std::size_t vocab = params.out_bias.size();
  LSTMNodes state = constant_state(tape, LSTMState::zeros(params.lstm_bias.size() / 4));
  std::vector<TokenId> words;
  double score = 0.0;
  TokenId prev = kBos;
  while (true) {
    StepNodes step = decode_step(prev, state, f, p);
    const Tensor logp = log_softmax(step.logits.value());
    TokenId best = kEos;
    if (words.size() < max_len) {
      for (TokenId c = kEos + 1; c < vocab; ++c)
        if (logp[c] > logp[best]) best = c;
    }
    score += logp[best];
    if (best == kEos) break;
    words.push_back(best);
    prev = best;
    state = step.state;
  }
  return {make_sequence(words), score};
}

}  // namespace recnet

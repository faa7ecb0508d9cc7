#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "recnet/dataset.hpp"
#include "recnet/tensor.hpp"
#include "recnet/text.hpp"

namespace recnet {

// Synthetic captioning task. Every concept owns a prototype feature vector, a
// noun and a verb. A video is a short ordered sequence of concepts; its frames
// are the prototypes of those concepts (one contiguous segment per concept)
// plus Gaussian noise, and its captions name the concepts in order:
//
//   caption  := clause ("then" clause)*
//   clause   := det noun verb
//   det      := "a" | "the" | "one"      (chosen by caption index)
//
// so the caption is fully determined by the frame content.
struct SyntheticConfig {
  std::size_t train_videos = 16;
  std::size_t validation_videos = 8;
  std::size_t test_videos = 8;
  std::size_t concepts = 4;
  std::size_t feature_dim = 10;
  std::size_t min_frames = 4;
  std::size_t max_frames = 12;
  std::size_t min_segments = 1;
  std::size_t max_segments = 2;
  std::size_t captions_per_video = 1;
  double noise = 0.1;

  void validate() const;
};

struct SyntheticVideo {
  std::string video_id;
  Tensor frames;                       // (k, d) raw frames, float-representable
  std::vector<std::size_t> concepts;   // segment order
  std::vector<std::string> captions;
};

struct SyntheticCorpus {
  std::uint64_t seed = 0;
  SyntheticConfig config;
  Tensor prototypes;  // (concepts, d)
  std::vector<SyntheticVideo> train;
  std::vector<SyntheticVideo> validation;
  std::vector<SyntheticVideo> test;

  const std::vector<SyntheticVideo>& split(Split s) const;
};

// Largest supported concept count (size of the built-in lexicon).
std::size_t synthetic_lexicon_size();
const std::string& concept_noun(std::size_t concept_index);
const std::string& concept_verb(std::size_t concept_index);

SyntheticCorpus generate_synthetic_dataset(std::uint64_t seed, const SyntheticConfig& config);

std::vector<CaptionRecord> caption_records(const std::vector<SyntheticVideo>& videos);

// Encodes one split with `vocab`, sampling frames to frame_budget.
CaptionDataset to_dataset(const std::vector<SyntheticVideo>& videos, const Vocabulary& vocab,
                          std::size_t frame_budget, Split split);

// Vocabulary over the training split's captions.
Vocabulary synthetic_vocabulary(const SyntheticCorpus& corpus, std::size_t min_count = 1);

// Dataset directory layout:
//   manifest.json, train.jsonl, validation.jsonl, test.jsonl,
//   features/<video_id>.recf
void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

}  // namespace recnet

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "recnet/autodiff.hpp"
#include "recnet/features.hpp"
#include "recnet/text.hpp"

namespace recnet {

enum class Split { train, validation, test };

std::string_view split_name(Split split);

struct VideoExample {
  std::string video_id;
  FrameFeatureSequence frames;
  std::vector<TokenSequence> captions;
};

struct CaptionDataset {
  Split split = Split::train;
  std::vector<VideoExample> videos;

  std::size_t pair_count() const;
  // Every video has >= 1 caption, ids are unique, frame budget and feature
  // dimension agree across videos and every caption is valid for vocab_size.
  void validate(std::size_t vocab_size) const;
};

// One line of a caption file: {"video_id": ..., "captions": [...]}.
struct CaptionRecord {
  std::string video_id;
  std::vector<std::string> captions;
};

std::vector<CaptionRecord> read_caption_file(const std::filesystem::path& path);
void write_caption_file(const std::filesystem::path& path, const std::vector<CaptionRecord>& records);

// Reads <features_dir>/<video_id>.recf for every record, samples frames to the
// budget and encodes captions with `vocab`.
CaptionDataset load_dataset(const std::filesystem::path& features_dir,
                            const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
                            std::size_t frame_budget, Split split);

// Tokenized captions of every record, for building a vocabulary.
std::vector<Tokens> tokenized_captions(const std::vector<CaptionRecord>& records);

struct TrainingPair {
  std::size_t video = 0;
  std::size_t caption = 0;
};

// Captions right-padded with PAD to the longest caption in the batch.
struct Batch {
  std::vector<TrainingPair> pairs;
  std::vector<std::vector<TokenId>> ids;  // (batch, max_length)
  std::vector<Mask> mask;                 // true on non-PAD positions
  std::size_t max_length = 0;

  std::size_t size() const { return pairs.size(); }
};

Batch make_batch(const CaptionDataset& dataset, std::vector<TrainingPair> pairs);

// All (video, caption) pairs, shuffled deterministically from
// (shuffle_seed, epoch), cut into consecutive batches.
std::vector<Batch> make_epoch_batches(const CaptionDataset& dataset, std::size_t batch_size,
                                      std::uint64_t shuffle_seed, std::size_t epoch);

}  // namespace recnet

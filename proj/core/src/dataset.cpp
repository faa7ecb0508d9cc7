#include "recnet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "recnet/errors.hpp"
#include "recnet/io.hpp"

namespace recnet {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "unknown";
}

std::size_t CaptionDataset::pair_count() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.captions.size();
  return n;
}

void CaptionDataset::validate(std::size_t vocab_size) const {
  std::set<std::string> seen;
  for (const auto& v : videos) {
    if (!seen.insert(v.video_id).second) throw DataError("duplicate video id '" + v.video_id + "'");
    if (v.captions.empty()) throw DataError("video '" + v.video_id + "' has no captions");
    if (v.frames.mask.size() != v.frames.budget()) {
      throw DataError("video '" + v.video_id + "' has a frame mask of the wrong length");
    }
    if (v.frames.budget() != videos.front().frames.budget() ||
        v.frames.dim() != videos.front().frames.dim()) {
      throw DataError("video '" + v.video_id + "' disagrees with the dataset's frame shape");
    }
    for (const auto& c : v.captions) c.validate(vocab_size);
  }
}

std::vector<CaptionRecord> read_caption_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open caption file " + path.string());
  std::vector<CaptionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      CaptionRecord r;
      r.video_id = j.at("video_id").get<std::string>();
      r.captions = j.at("captions").get<std::vector<std::string>>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_caption_file(const std::filesystem::path& path, const std::vector<CaptionRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    nlohmann::json j = {{"video_id", r.video_id}, {"captions", r.captions}};
    text += j.dump();
    text += '\n';
  }
  write_file_atomic(path, text);
}

std::vector<Tokens> tokenized_captions(const std::vector<CaptionRecord>& records) {
  std::vector<Tokens> out;
  for (const auto& r : records)
    for (const auto& c : r.captions) out.push_back(tokenize(c));
  return out;
}

CaptionDataset load_dataset(const std::filesystem::path& features_dir,
                            const std::vector<CaptionRecord>& records, const Vocabulary& vocab,
                            std::size_t frame_budget, Split split) {
  CaptionDataset ds;
  ds.split = split;
  for (const auto& r : records) {
    VideoExample v;
    v.video_id = r.video_id;
    v.frames = sample_frames(read_feature_file(features_dir / (r.video_id + ".recf")), frame_budget);
    for (const auto& c : r.captions) v.captions.push_back(vocab.encode_caption(tokenize(c)));
    ds.videos.push_back(std::move(v));
  }
  ds.validate(vocab.size());
  return ds;
}

Batch make_batch(const CaptionDataset& dataset, std::vector<TrainingPair> pairs) {
  Batch b;
  b.pairs = std::move(pairs);
  for (const auto& p : b.pairs) {
    b.max_length = std::max(b.max_length, dataset.videos[p.video].captions[p.caption].size());
  }
  for (const auto& p : b.pairs) {
    const auto& ids = dataset.videos[p.video].captions[p.caption].ids;
    std::vector<TokenId> padded(b.max_length, kPad);
    Mask mask(b.max_length, false);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      padded[i] = ids[i];
      mask[i] = true;
    }
    b.ids.push_back(std::move(padded));
    b.mask.push_back(std::move(mask));
  }
  return b;
}

std::vector<Batch> make_epoch_batches(const CaptionDataset& dataset, std::size_t batch_size,
                                      std::uint64_t shuffle_seed, std::size_t epoch) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<TrainingPair> pairs;
  for (std::size_t v = 0; v < dataset.videos.size(); ++v)
    for (std::size_t c = 0; c < dataset.videos[v].captions.size(); ++c) pairs.push_back({v, c});
  // Fisher-Yates with an explicit draw so the order is identical across
  // standard library implementations.
  std::mt19937_64 rng(mix_seed(shuffle_seed, epoch));
  for (std::size_t i = pairs.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(pairs[i - 1], pairs[j]);
  }
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
    const std::size_t end = std::min(pairs.size(), start + batch_size);
    batches.push_back(make_batch(dataset, {pairs.begin() + static_cast<std::ptrdiff_t>(start),
                                           pairs.begin() + static_cast<std::ptrdiff_t>(end)}));
  }
  return batches;
}

}  // namespace recnet

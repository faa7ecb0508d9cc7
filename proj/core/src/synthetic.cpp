#include "recnet/synthetic.hpp"

#include <array>
#include <cmath>
#include <nlohmann/json.hpp>

#include "recnet/errors.hpp"
#include "recnet/io.hpp"
#include "recnet/random.hpp"

namespace recnet {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  constexpr double two_pi = 6.283185307179586476925;
  spare_ = r * std::sin(two_pi * u2);
  has_spare_ = true;
  return r * std::cos(two_pi * u2);
}

namespace {

const std::array<std::string, 12> kNouns = {"dog",  "cat",   "man",  "woman", "car",  "bird",
                                            "horse", "boy",  "girl", "ball",  "robot", "fish"};
const std::array<std::string, 12> kVerbs = {"runs",  "jumps", "sings", "swims", "drives", "flies",
                                            "walks", "dances", "cooks", "plays", "sleeps", "reads"};
const std::array<std::string, 3> kDeterminers = {"a", "the", "one"};

std::string render_caption(const std::vector<std::size_t>& concepts, std::size_t template_index) {
  const std::string& det = kDeterminers[template_index % kDeterminers.size()];
  std::string out;
  for (std::size_t s = 0; s < concepts.size(); ++s) {
    if (s) out += " then ";
    out += det + " " + kNouns[concepts[s]] + " " + kVerbs[concepts[s]];
  }
  return out;
}

float to_float(double v) { return static_cast<float>(v); }

SyntheticVideo make_video(Rng& rng, const SyntheticConfig& cfg, const Tensor& prototypes,
                          std::string id) {
  SyntheticVideo v;
  v.video_id = std::move(id);
  const std::size_t segments =
      cfg.min_segments + rng.below(cfg.max_segments - cfg.min_segments + 1);
  for (std::size_t s = 0; s < segments; ++s) v.concepts.push_back(rng.below(cfg.concepts));
  std::size_t k = cfg.min_frames + rng.below(cfg.max_frames - cfg.min_frames + 1);
  k = std::max(k, segments);
  const std::size_t d = cfg.feature_dim;
  v.frames = Tensor({k, d});
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t concept_index = v.concepts[f * segments / k];
    for (std::size_t i = 0; i < d; ++i) {
      const double value = prototypes.at(concept_index, i) + cfg.noise * rng.normal();
      v.frames.at(f, i) = to_float(value);
    }
  }
  for (std::size_t c = 0; c < cfg.captions_per_video; ++c) v.captions.push_back(render_caption(v.concepts, c));
  return v;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (train_videos == 0) throw ConfigError("synthetic dataset needs at least one training video");
  if (concepts == 0 || concepts > kNouns.size()) {
    throw ConfigError("concept count must lie in [1, " + std::to_string(kNouns.size()) + "]");
  }
  if (feature_dim == 0) throw ConfigError("feature dimension must be at least 1");
  if (min_frames == 0 || min_frames > max_frames) throw ConfigError("invalid frame count range");
  if (min_segments == 0 || min_segments > max_segments) throw ConfigError("invalid segment count range");
  if (captions_per_video == 0) throw ConfigError("captions_per_video must be at least 1");
  if (!(noise >= 0.0)) throw ConfigError("noise scale must be nonnegative");
}

const std::vector<SyntheticVideo>& SyntheticCorpus::split(Split s) const {
  switch (s) {
    case Split::train:
      return train;
    case Split::validation:
      return validation;
    case Split::test:
      return test;
  }
  return train;
}

std::size_t synthetic_lexicon_size() { return kNouns.size(); }
const std::string& concept_noun(std::size_t concept_index) { return kNouns.at(concept_index); }
const std::string& concept_verb(std::size_t concept_index) { return kVerbs.at(concept_index); }

SyntheticCorpus generate_synthetic_dataset(std::uint64_t seed, const SyntheticConfig& config) {
  config.validate();
  SyntheticCorpus corpus;
  corpus.seed = seed;
  corpus.config = config;
  Rng rng(seed);
  corpus.prototypes = Tensor({config.concepts, config.feature_dim});
  for (double& v : corpus.prototypes.values()) v = to_float(rng.normal());
  auto fill = [&](std::vector<SyntheticVideo>& out, std::size_t count, const std::string& prefix) {
    for (std::size_t i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "%s%03zu", prefix.c_str(), i);
      out.push_back(make_video(rng, config, corpus.prototypes, id));
    }
  };
  fill(corpus.train, config.train_videos, "train");
  fill(corpus.validation, config.validation_videos, "val");
  fill(corpus.test, config.test_videos, "test");
  return corpus;
}

std::vector<CaptionRecord> caption_records(const std::vector<SyntheticVideo>& videos) {
  std::vector<CaptionRecord> records;
  for (const auto& v : videos) records.push_back({v.video_id, v.captions});
  return records;
}

CaptionDataset to_dataset(const std::vector<SyntheticVideo>& videos, const Vocabulary& vocab,
                          std::size_t frame_budget, Split split) {
  CaptionDataset ds;
  ds.split = split;
  for (const auto& v : videos) {
    VideoExample ex;
    ex.video_id = v.video_id;
    ex.frames = sample_frames(v.frames, frame_budget);
    for (const auto& c : v.captions) ex.captions.push_back(vocab.encode_caption(tokenize(c)));
    ds.videos.push_back(std::move(ex));
  }
  ds.validate(vocab.size());
  return ds;
}

Vocabulary synthetic_vocabulary(const SyntheticCorpus& corpus, std::size_t min_count) {
  return Vocabulary::build(tokenized_captions(caption_records(corpus.train)), min_count);
}

void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticCorpus& corpus) {
  const auto& cfg = corpus.config;
  nlohmann::json manifest = {
      {"format", "recnet-synthetic"},
      {"seed", corpus.seed},
      {"feature_dim", cfg.feature_dim},
      {"concepts", cfg.concepts},
      {"noise", cfg.noise},
      {"captions_per_video", cfg.captions_per_video},
      {"splits",
       {{"train", {{"captions", "train.jsonl"}, {"videos", corpus.train.size()}}},
        {"validation", {{"captions", "validation.jsonl"}, {"videos", corpus.validation.size()}}},
        {"test", {{"captions", "test.jsonl"}, {"videos", corpus.test.size()}}}}},
      {"features", "features"}};
  for (Split s : {Split::train, Split::validation, Split::test}) {
    const auto& videos = corpus.split(s);
    write_caption_file(dir / (std::string(split_name(s)) + ".jsonl"), caption_records(videos));
    for (const auto& v : videos) write_feature_file(dir / "features" / (v.video_id + ".recf"), v.frames);
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace recnet

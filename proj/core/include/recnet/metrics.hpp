#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "recnet/text.hpp"

namespace recnet {

struct EvaluationEntry {
  Tokens candidate;
  std::vector<Tokens> references;
};

// Keyed by video id.
using EvaluationCorpus = std::map<std::string, EvaluationEntry>;

struct MetricReport {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::map<std::string, double> per_video_cider;

  // {"bleu4": x, "rougeL": y, "cider": z, "per_video_cider": {...}}
  std::string to_json() const;
};

inline constexpr double kRougeBeta = 1.2;
inline constexpr double kCiderSigma = 6.0;

// Corpus BLEU with uniform weights over 1..4-grams, counts clipped per
// reference, brevity penalty against the closest reference length (ties go to
// the shorter one). No smoothing: a zero precision gives 0.
double bleu4(const EvaluationCorpus& corpus);

// Mean over videos of the best LCS F-measure (β = 1.2) across references.
double rouge_l(const EvaluationCorpus& corpus);

struct CiderResult {
  double corpus = 0.0;
  std::map<std::string, double> per_video;
};

// CIDEr-D: TF-IDF vectors over 1..4-grams with idf = log(N / (1 + df)) where
// df counts videos whose reference set contains the n-gram; clipped
// numerator min(c, r)·r; Gaussian length penalty σ = 6; averaged over
// references and n, scaled by 10. Needs at least two videos.
CiderResult cider_d(const EvaluationCorpus& corpus);
double cider(const EvaluationCorpus& corpus);

MetricReport evaluate(const EvaluationCorpus& corpus);

// candidates: JSON-lines {"video_id", "caption"}; references: caption file
// format. Both are tokenized with tokenize(). Mismatched ids raise DataError
// naming them.
EvaluationCorpus load_evaluation_corpus(const std::filesystem::path& candidates,
                                        const std::filesystem::path& references);

struct CandidateRecord {
  std::string video_id;
  std::string caption;
};
std::vector<CandidateRecord> read_candidate_file(const std::filesystem::path& path);
std::string candidate_jsonl(const std::vector<CandidateRecord>& records);

}  // namespace recnet

#include "recnet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "recnet/dataset.hpp"
#include "recnet/errors.hpp"

namespace recnet {

namespace {

constexpr std::size_t kMaxOrder = 4;

using NgramCounts = std::unordered_map<std::string, double>;

// Joins tokens with a unit separator so n-grams of different words never collide.
std::string ngram_key(const Tokens& tokens, std::size_t start, std::size_t n) {
  std::string key = tokens[start];
  for (std::size_t i = start + 1; i < start + n; ++i) {
    key += '\x1f';
    key += tokens[i];
  }
  return key;
}

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) counts[ngram_key(tokens, i, n)] += 1.0;
  return counts;
}

std::vector<Tokens> sorted_references(const EvaluationEntry& e) {
  std::vector<Tokens> refs = e.references;
  std::sort(refs.begin(), refs.end());
  return refs;
}

void require_nonempty(const EvaluationCorpus& corpus, const char* metric) {
  if (corpus.empty()) throw DataError(std::string(metric) + ": empty corpus");
  for (const auto& [id, e] : corpus) {
    if (e.references.empty()) throw DataError(std::string(metric) + ": video '" + id + "' has no references");
  }
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double bleu4(const EvaluationCorpus& corpus) {
  require_nonempty(corpus, "bleu4");
  std::array<double, kMaxOrder> clipped{}, total{};
  double cand_len = 0.0, ref_len = 0.0;
  for (const auto& [id, e] : corpus) {
    const auto refs = sorted_references(e);
    const double c = static_cast<double>(e.candidate.size());
    cand_len += c;
    double best = static_cast<double>(refs.front().size());
    for (const auto& r : refs) {
      const double rl = static_cast<double>(r.size());
      const double gap = std::abs(rl - c), best_gap = std::abs(best - c);
      if (gap < best_gap || (gap == best_gap && rl < best)) best = rl;
    }
    ref_len += best;
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const NgramCounts cand = count_ngrams(e.candidate, n);
      NgramCounts max_ref;
      for (const auto& r : refs)
        for (const auto& [g, cnt] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], cnt);
      for (const auto& [g, cnt] : cand) {
        total[n - 1] += cnt;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) clipped[n - 1] += std::min(cnt, it->second);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0.0 || clipped[n] == 0.0) return 0.0;
    log_sum += 0.25 * std::log(clipped[n] / total[n]);
  }
  const double brevity = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return brevity * std::exp(log_sum);
}

double rouge_l(const EvaluationCorpus& corpus) {
  require_nonempty(corpus, "rouge_l");
  const double beta2 = kRougeBeta * kRougeBeta;
  double total = 0.0;
  for (const auto& [id, e] : corpus) {
    double best = 0.0;
    for (const auto& r : sorted_references(e)) {
      const std::size_t lcs = lcs_length(e.candidate, r);
      if (lcs == 0) continue;
      const double p = static_cast<double>(lcs) / static_cast<double>(e.candidate.size());
      const double rec = static_cast<double>(lcs) / static_cast<double>(r.size());
      best = std::max(best, (1.0 + beta2) * p * rec / (rec + beta2 * p));
    }
    total += best;
  }
  return total / static_cast<double>(corpus.size());
}

namespace {

struct CiderVector {
  std::array<NgramCounts, kMaxOrder> weights;
  std::array<double, kMaxOrder> norms{};
  double length = 0.0;
};

CiderVector cider_vector(const Tokens& tokens, const std::unordered_map<std::string, double>& doc_freq,
                         double log_videos) {
  CiderVector v;
  v.length = static_cast<double>(tokens.size());
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    auto counts = count_ngrams(tokens, n);
    // Accumulate in key order so the norm is independent of hash layout.
    std::vector<std::pair<std::string, double>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end());
    double sq = 0.0;
    for (const auto& [g, tf] : ordered) {
      auto it = doc_freq.find(g);
      const double df = it == doc_freq.end() ? 0.0 : it->second;
      const double w = tf * (log_videos - std::log(1.0 + df));
      v.weights[n - 1][g] = w;
      sq += w * w;
    }
    v.norms[n - 1] = std::sqrt(sq);
  }
  return v;
}

double cider_similarity(const CiderVector& cand, const CiderVector& ref) {
  const double delta = cand.length - ref.length;
  const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
  double total = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    std::vector<std::pair<std::string, double>> ordered(cand.weights[n].begin(), cand.weights[n].end());
    std::sort(ordered.begin(), ordered.end());
    double val = 0.0;
    for (const auto& [g, w] : ordered) {
      auto it = ref.weights[n].find(g);
      if (it == ref.weights[n].end()) continue;
      val += std::min(w, it->second) * it->second;
    }
    if (cand.norms[n] != 0.0 && ref.norms[n] != 0.0) val /= cand.norms[n] * ref.norms[n];
    total += val * penalty;
  }
  return total / static_cast<double>(kMaxOrder);
}

}  // namespace

CiderResult cider_d(const EvaluationCorpus& corpus) {
  require_nonempty(corpus, "cider");
  if (corpus.size() < 2) throw DataError("IDF undefined: CIDEr needs at least two videos");
  std::unordered_map<std::string, double> doc_freq;
  for (const auto& [id, e] : corpus) {
    std::unordered_set<std::string> seen;
    for (const auto& r : e.references)
      for (std::size_t n = 1; n <= kMaxOrder; ++n)
        for (const auto& [g, cnt] : count_ngrams(r, n)) seen.insert(g);
    for (const auto& g : seen) doc_freq[g] += 1.0;
  }
  const double log_videos = std::log(static_cast<double>(corpus.size()));
  CiderResult result;
  double total = 0.0;
  for (const auto& [id, e] : corpus) {
    const CiderVector cand = cider_vector(e.candidate, doc_freq, log_videos);
    const auto refs = sorted_references(e);
    double score = 0.0;
    for (const auto& r : refs) score += cider_similarity(cand, cider_vector(r, doc_freq, log_videos));
    score = score / static_cast<double>(refs.size()) * 10.0;
    result.per_video[id] = score;
    total += score;
  }
  result.corpus = total / static_cast<double>(corpus.size());
  return result;
}

double cider(const EvaluationCorpus& corpus) { return cider_d(corpus).corpus; }

MetricReport evaluate(const EvaluationCorpus& corpus) {
  MetricReport report;
  report.bleu4 = bleu4(corpus);
  report.rouge_l = rouge_l(corpus);
  CiderResult c = cider_d(corpus);
  report.cider = c.corpus;
  report.per_video_cider = std::move(c.per_video);
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [id, v] : per_video_cider) per[id] = v;
  nlohmann::json j = {{"bleu4", bleu4}, {"rougeL", rouge_l}, {"cider", cider}, {"per_video_cider", per}};
  return j.dump(2);
}

std::vector<CandidateRecord> read_candidate_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open candidates file " + path.string());
  std::vector<CandidateRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("video_id").get<std::string>(), j.at("caption").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string candidate_jsonl(const std::vector<CandidateRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    text += nlohmann::json{{"video_id", r.video_id}, {"caption", r.caption}}.dump();
    text += '\n';
  }
  return text;
}

EvaluationCorpus load_evaluation_corpus(const std::filesystem::path& candidates,
                                        const std::filesystem::path& references) {
  std::map<std::string, Tokens> cands;
  for (const auto& c : read_candidate_file(candidates)) {
    if (!cands.emplace(c.video_id, tokenize(c.caption)).second) {
      throw DataError("duplicate candidate for video '" + c.video_id + "'");
    }
  }
  std::map<std::string, std::vector<Tokens>> refs;
  for (const auto& r : read_caption_file(references)) {
    auto& list = refs[r.video_id];
    for (const auto& s : r.captions) list.push_back(tokenize(s));
  }
  std::vector<std::string> missing_refs, missing_cands;
  for (const auto& [id, t] : cands)
    if (!refs.contains(id)) missing_refs.push_back(id);
  for (const auto& [id, r] : refs)
    if (!cands.contains(id)) missing_cands.push_back(id);
  if (!missing_refs.empty() || !missing_cands.empty()) {
    std::string msg = "video ids do not align;";
    if (!missing_cands.empty()) {
      msg += " missing candidates:";
      for (const auto& id : missing_cands) msg += " " + id;
      msg += ";";
    }
    if (!missing_refs.empty()) {
      msg += " missing references:";
      for (const auto& id : missing_refs) msg += " " + id;
    }
    throw DataError(msg);
  }
  EvaluationCorpus corpus;
  for (auto& [id, t] : cands) corpus[id] = {std::move(t), std::move(refs[id])};
  return corpus;
}

}  // namespace recnet

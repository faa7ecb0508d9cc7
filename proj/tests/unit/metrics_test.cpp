#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "oracles/metric_oracle.hpp"
#include "recnet/errors.hpp"
#include "recnet/io.hpp"
#include "recnet/metrics.hpp"
#include "recnet/random.hpp"

using namespace recnet;
namespace fs = std::filesystem;

namespace {

const fs::path kHand = fs::path(RECNET_FIXTURES) / "hand_corpus";

std::vector<oracle::Entry> as_oracle(const EvaluationCorpus& c) {
  std::vector<oracle::Entry> out;
  for (const auto& [id, e] : c) out.push_back({e.candidate, e.references});
  return out;
}

Tokens words(const std::string& s) { return tokenize(s); }

// Random corpus over a small lexicon so n-grams overlap often.
EvaluationCorpus random_corpus(Rng& rng, std::size_t videos) {
  const std::vector<std::string> lexicon{"a", "man", "dog", "runs", "the", "is", "on", "grass", "fast"};
  auto sentence = [&]() {
    Tokens t;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) t.push_back(lexicon[rng.below(lexicon.size())]);
    return t;
  };
  EvaluationCorpus c;
  for (std::size_t v = 0; v < videos; ++v) {
    EvaluationEntry e;
    e.candidate = sentence();
    const std::size_t refs = 1 + rng.below(3);
    for (std::size_t r = 0; r < refs; ++r) e.references.push_back(sentence());
    if (rng.uniform() < 0.3) e.references.push_back(e.candidate);
    c["v" + std::to_string(v)] = e;
  }
  return c;
}

}  // namespace

TEST(Bleu, PerfectMatchIsOne) {
  EvaluationCorpus c{{"a", {words("a man is riding a horse"), {words("a man is riding a horse"), words("x y")}}},
                     {"b", {words("the dog runs on grass"), {words("the dog runs on grass")}}}};
  EXPECT_DOUBLE_EQ(bleu4(c), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l(c), 1.0);
}

TEST(Bleu, NoFourGramOverlapIsZero) {
  EvaluationCorpus c{{"a", {words("a man is riding"), {words("a man was riding")}}}};
  EXPECT_EQ(bleu4(c), 0.0);
}

TEST(Bleu, ThreeSentenceCorpusMatchesOracle) {
  EvaluationCorpus c{
      {"a", {words("the cat sat on the mat today"), {words("the cat sat on the mat"), words("a cat is on the mat")}}},
      {"b", {words("a dog runs in the park"), {words("the dog runs in the park"), words("dog running in a park")}}},
      {"c", {words("he plays the guitar on stage"), {words("a man plays the guitar on stage")}}}};
  EXPECT_NEAR(bleu4(c), oracle::bleu4(as_oracle(c)), 1e-9);
  EXPECT_GT(bleu4(c), 0.0);
  EXPECT_THROW(bleu4(EvaluationCorpus{}), DataError);
}

TEST(Bleu, BrevityTieGoesToShorterReference) {
  // Candidate of 4 words, references of 3 and 5: tie, r = 3 so no penalty.
  EvaluationCorpus c{{"a", {words("w x y z"), {words("w x y"), words("w x y z q")}}}};
  EXPECT_NEAR(bleu4(c), oracle::bleu4(as_oracle(c)), 1e-12);
  EXPECT_DOUBLE_EQ(bleu4(c), 1.0);
}

TEST(Rouge, Examples) {
  EvaluationCorpus same{{"a", {words("a b c d"), {words("a b c d")}}}};
  EXPECT_DOUBLE_EQ(rouge_l(same), 1.0);
  EvaluationCorpus disjoint{{"a", {words("a b"), {words("c d")}}}};
  EXPECT_EQ(rouge_l(disjoint), 0.0);
  EvaluationCorpus swap{{"a", {words("a b c d"), {words("a c b d")}}}};
  EXPECT_EQ(oracle::lcs(words("a b c d"), words("a c b d")), 3u);
  const double p = 0.75, r = 0.75, b2 = 1.2 * 1.2;
  EXPECT_NEAR(rouge_l(swap), (1 + b2) * p * r / (r + b2 * p), 1e-15);
  EXPECT_NEAR(rouge_l(swap), oracle::rouge_l(as_oracle(swap)), 1e-15);
}

TEST(Rouge, AddingReferenceNeverLowersScore) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    EvaluationCorpus c = random_corpus(rng, 3);
    const double before = rouge_l(c);
    EvaluationCorpus more = c;
    more.begin()->second.references.push_back(random_corpus(rng, 1).begin()->second.candidate);
    EXPECT_GE(rouge_l(more), before);
  }
}

TEST(Cider, IdenticalCandidatesMatchOracle) {
  EvaluationCorpus c{{"a", {words("a man rides a horse"), {words("a man rides a horse")}}},
                     {"b", {words("the dog runs fast"), {words("the dog runs fast")}}},
                     {"c", {words("two small birds sing"), {words("two small birds sing")}}}};
  const CiderResult r = cider_d(c);
  const auto want = oracle::cider_per_video(as_oracle(c));
  std::size_t i = 0;
  for (const auto& [id, score] : r.per_video) EXPECT_NEAR(score, want[i++], 1e-12) << id;
  // With distinct sentences every candidate vector equals its reference
  // vector, so each per-n cosine is 1 and the score is 10 (every sentence
  // has at least one 4-gram).
  for (const auto& [id, score] : r.per_video) EXPECT_NEAR(score, 10.0, 1e-12);
}

TEST(Cider, NoOverlapIsZeroAndSingleVideoIsError) {
  EvaluationCorpus c{{"a", {words("x y z"), {words("a man rides")}}}, {"b", {words("q"), {words("the dog")}}}};
  const CiderResult r = cider_d(c);
  EXPECT_EQ(r.per_video.at("a"), 0.0);
  EXPECT_EQ(r.per_video.at("b"), 0.0);
  EvaluationCorpus one{{"a", {words("x"), {words("x")}}}};
  try {
    cider(one);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("IDF undefined"), std::string::npos);
  }
}

TEST(Cider, DuplicatedReferencesLeaveScoresUnchanged) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    EvaluationCorpus c = random_corpus(rng, 4);
    EvaluationCorpus doubled = c;
    for (auto& [id, e] : doubled) {
      auto refs = e.references;
      e.references.insert(e.references.end(), refs.begin(), refs.end());
    }
    const CiderResult a = cider_d(c), b = cider_d(doubled);
    for (const auto& [id, score] : a.per_video) EXPECT_NEAR(score, b.per_video.at(id), 1e-12);
  }
}

TEST(Metrics, RandomCorporaMatchOracles) {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    EvaluationCorpus c = random_corpus(rng, 2 + rng.below(5));
    const auto o = as_oracle(c);
    EXPECT_NEAR(bleu4(c), oracle::bleu4(o), 1e-9);
    EXPECT_NEAR(rouge_l(c), oracle::rouge_l(o), 1e-12);
    EXPECT_NEAR(cider(c), oracle::cider(o), 1e-9);
  }
}

TEST(Metrics, InvariantToPermutingReferences) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    EvaluationCorpus c = random_corpus(rng, 4);
    EvaluationCorpus p = c;
    for (auto& [id, e] : p) std::reverse(e.references.begin(), e.references.end());
    EXPECT_NEAR(bleu4(c), bleu4(p), 1e-12);
    EXPECT_NEAR(rouge_l(c), rouge_l(p), 1e-12);
    EXPECT_NEAR(cider(c), cider(p), 1e-12);
  }
}

TEST(Metrics, InvariantToPermutingEntries) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    EvaluationCorpus c = random_corpus(rng, 5);
    // Renaming ids reorders the map; scores attached to the same entries must agree.
    EvaluationCorpus renamed;
    std::size_t k = 0;
    std::map<std::string, std::string> names;
    for (const auto& [id, e] : c) {
      const std::string name = "z" + std::to_string(9 - k++);
      names[id] = name;
      renamed[name] = e;
    }
    EXPECT_NEAR(bleu4(c), bleu4(renamed), 1e-12);
    EXPECT_NEAR(rouge_l(c), rouge_l(renamed), 1e-12);
    const CiderResult a = cider_d(c), b = cider_d(renamed);
    EXPECT_NEAR(a.corpus, b.corpus, 1e-12);
    for (const auto& [id, s] : a.per_video) EXPECT_NEAR(s, b.per_video.at(names[id]), 1e-12);
  }
}

TEST(Metrics, BoundsHold) {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    EvaluationCorpus c = random_corpus(rng, 3 + rng.below(4));
    MetricReport r = evaluate(c);
    EXPECT_GE(r.bleu4, 0.0);
    EXPECT_LE(r.bleu4, 1.0 + 1e-12);
    EXPECT_GE(r.rouge_l, 0.0);
    EXPECT_LE(r.rouge_l, 1.0 + 1e-12);
  }
}

TEST(Evaluate, HandCorpusMatchesShippedOracle) {
  const auto expected = nlohmann::json::parse(read_file(kHand / "expected.json"));
  for (const auto& [key, file] : {std::pair<std::string, std::string>{"hand", "candidates.jsonl"},
                                  {"identity", "identity_candidates.jsonl"}}) {
    EvaluationCorpus c = load_evaluation_corpus(kHand / file, kHand / "references.jsonl");
    MetricReport r = evaluate(c);
    const auto& e = expected[key];
    EXPECT_NEAR(r.bleu4, e["bleu4"].get<double>(), 1e-9) << key;
    EXPECT_NEAR(r.rouge_l, e["rougeL"].get<double>(), 1e-9) << key;
    EXPECT_NEAR(r.cider, e["cider"].get<double>(), 1e-9) << key;
    for (const auto& [id, v] : e["per_video_cider"].items()) EXPECT_NEAR(r.per_video_cider.at(id), v.get<double>(), 1e-9);
    // Same numbers from the C++ oracle.
    EXPECT_NEAR(r.bleu4, oracle::bleu4(as_oracle(c)), 1e-9);
    EXPECT_NEAR(r.cider, oracle::cider(as_oracle(c)), 1e-9);
  }
}

TEST(Evaluate, SelfEvaluationIsPerfect) {
  EvaluationCorpus c = load_evaluation_corpus(kHand / "identity_candidates.jsonl", kHand / "references.jsonl");
  MetricReport r = evaluate(c);
  EXPECT_DOUBLE_EQ(r.bleu4, 1.0);
  EXPECT_DOUBLE_EQ(r.rouge_l, 1.0);
}

TEST(Evaluate, ReportSchemaIsExact) {
  EvaluationCorpus c = load_evaluation_corpus(kHand / "candidates.jsonl", kHand / "references.jsonl");
  auto j = nlohmann::json::parse(evaluate(c).to_json());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"bleu4", "cider", "per_video_cider", "rougeL"}));
  EXPECT_EQ(j["per_video_cider"].size(), 10u);
}

TEST(Evaluate, MissingIdsAreListed) {
  fs::path dir = fs::temp_directory_path() / "recnet_metrics_ids";
  fs::create_directories(dir);
  write_file_atomic(dir / "cand.jsonl", "{\"video_id\": \"v01\", \"caption\": \"a man\"}\n"
                                        "{\"video_id\": \"zz\", \"caption\": \"a man\"}\n");
  try {
    load_evaluation_corpus(dir / "cand.jsonl", kHand / "references.jsonl");
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("zz"), std::string::npos) << msg;
    EXPECT_NE(msg.find("v02"), std::string::npos) << msg;
  }
}

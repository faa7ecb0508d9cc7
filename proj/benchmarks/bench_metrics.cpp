#include <benchmark/benchmark.h>

#include "recnet/metrics.hpp"
#include "recnet/random.hpp"

using namespace recnet;

namespace {

EvaluationCorpus random_corpus(std::size_t videos) {
  static const std::vector<std::string> lexicon{"a",  "man", "woman", "dog",  "is",   "riding", "cutting",
                                                "an", "onion", "horse", "the", "field", "slowly", "on"};
  Rng rng(3);
  auto sentence = [&] {
    Tokens t;
    const std::size_t n = 4 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) t.push_back(lexicon[rng.below(lexicon.size())]);
    return t;
  };
  EvaluationCorpus c;
  for (std::size_t v = 0; v < videos; ++v) {
    EvaluationEntry e;
    e.candidate = sentence();
    for (int r = 0; r < 5; ++r) e.references.push_back(sentence());
    c["v" + std::to_string(v)] = e;
  }
  return c;
}

void BM_Bleu4(benchmark::State& state) {
  const EvaluationCorpus c = random_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bleu4(c));
}
BENCHMARK(BM_Bleu4)->Arg(100)->Arg(1000);

void BM_RougeL(benchmark::State& state) {
  const EvaluationCorpus c = random_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(c));
}
BENCHMARK(BM_RougeL)->Arg(100)->Arg(1000);

void BM_CiderD(benchmark::State& state) {
  const EvaluationCorpus c = random_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cider(c));
}
BENCHMARK(BM_CiderD)->Arg(100)->Arg(1000);

}  // namespace

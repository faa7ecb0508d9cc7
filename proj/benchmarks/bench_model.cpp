#include <benchmark/benchmark.h>

#include "recnet/beam_search.hpp"
#include "recnet/synthetic.hpp"
#include "recnet/training.hpp"

using namespace recnet;

namespace {

struct Fixture {
  ModelDims dims;
  RecNetModel model;
  CaptionDataset data;
  Batch batch;
};

// Desk-sized model over the default synthetic training split.
Fixture make_fixture(std::optional<ReconstructorKind> kind, std::size_t hidden = 16) {
  SyntheticCorpus corpus = generate_synthetic_dataset(7, SyntheticConfig{});
  Vocabulary vocab = synthetic_vocabulary(corpus);
  Fixture f;
  f.dims = {vocab.size(), 8, hidden, 10, 6};
  f.data = to_dataset(corpus.train, vocab, 6, Split::train);
  Rng rng(1);
  f.model.dims = f.dims;
  f.model.decoder = DecoderParams::uniform(f.dims, rng, 0.08);
  if (kind) f.model.reconstructor = ReconstructorParams::uniform(*kind, f.dims, rng, 0.08);
  f.batch = make_epoch_batches(f.data, 8, 1, 1).front();
  return f;
}

void BM_DecodeStep(benchmark::State& state) {
  Fixture f = make_fixture(std::nullopt, static_cast<std::size_t>(state.range(0)));
  const LSTMState s = LSTMState::zeros(f.dims.hidden_size);
  const FrameFeatureSequence& frames = f.data.videos.front().frames;
  for (auto _ : state) benchmark::DoNotOptimize(decode_step(kBos, s, frames, f.model.decoder));
}
BENCHMARK(BM_DecodeStep)->Arg(16)->Arg(64)->Arg(256);

void BM_BeamSearch(benchmark::State& state) {
  Fixture f = make_fixture(std::nullopt);
  const FrameFeatureSequence& frames = f.data.videos.front().frames;
  const BeamSearchOptions opts{static_cast<std::size_t>(state.range(0)), 20, false};
  for (auto _ : state) benchmark::DoNotOptimize(beam_search(frames, f.model.decoder, opts));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(5)->Arg(20);

void BM_BatchObjective(benchmark::State& state) {
  const int variant = static_cast<int>(state.range(0));
  std::optional<ReconstructorKind> kind;
  if (variant == 1) kind = ReconstructorKind::global;
  if (variant == 2) kind = ReconstructorKind::local;
  Fixture f = make_fixture(kind);
  for (auto _ : state) benchmark::DoNotOptimize(batch_objective(f.model, f.data, f.batch, 0.2, true).total);
  state.SetLabel(variant == 0 ? "none" : variant == 1 ? "global" : "local");
}
BENCHMARK(BM_BatchObjective)->Arg(0)->Arg(1)->Arg(2);

void BM_TrainEpoch(benchmark::State& state) {
  SyntheticCorpus corpus = generate_synthetic_dataset(7, SyntheticConfig{});
  Vocabulary vocab = synthetic_vocabulary(corpus);
  CaptionDataset train = to_dataset(corpus.train, vocab, 6, Split::train);
  TrainingConfig c;
  c.max_epochs = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(train_stage1({vocab.size(), 8, 16, 10, 6}, vocab, c, train, train).last.epoch);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

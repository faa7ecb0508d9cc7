#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recnet/cli/run_config.hpp"
#include "recnet/optim.hpp"
#include "recnet/training.hpp"

namespace recnet::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kCheckFailed = 3 };

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// Runs `body`, mapping library exceptions to exit codes: config errors to 1,
// data, dimension and checkpoint errors to 2.
int guarded(const Streams& io, const std::function<int()>& body);

struct SynthOptions {
  std::uint64_t seed = 7;
  std::filesystem::path out = "data";
  std::size_t videos = 16;  // training videos; validation and test get half each (at least 2)
  std::size_t concepts = 4;
  std::size_t dim = 10;
};
int cmd_synth(const SynthOptions& opts, const Streams& io);

enum class StageSelection { one, two, both };

struct TrainOptions {
  std::filesystem::path config;
  StageSelection stage = StageSelection::both;
  bool resume = false;
  // Test hook: stop each stage after this many epochs of this invocation; 0 = never.
  std::size_t halt_after = 0;
};
int cmd_train(const TrainOptions& opts, const Streams& io);

struct CaptionOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path features;  // a .recf file or a directory of them
  std::size_t beam = 5;
  std::filesystem::path out;       // empty: stdout only
};
int cmd_caption(const CaptionOptions& opts, const Streams& io);

struct EvalOptions {
  std::filesystem::path candidates;
  std::filesystem::path references;
  std::filesystem::path out;  // empty: stdout only
};
int cmd_eval(const EvalOptions& opts, const Streams& io);

struct SweepOptions {
  std::filesystem::path config;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds;
  std::size_t workers = 0;  // 0: hardware concurrency
};
int cmd_sweep(const SweepOptions& opts, const Streams& io);

struct GradcheckOptions {
  Variant variant = Variant::none;
  std::uint64_t seed = 1;
};
int cmd_gradcheck(const GradcheckOptions& opts, const Streams& io);

inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckStep = 1e-5;

// Finite-difference check of the full training loss of a tiny random model
// (vocab 20, embed 8, hidden 16, d 10, 6 frame slots, 5-word caption) over
// every decoder and reconstructor parameter.
GradCheckReport run_gradcheck(Variant variant, std::uint64_t seed);

// Datasets read from a data directory laid out like cmd_synth output.
struct LoadedData {
  Vocabulary vocab;
  CaptionDataset train;
  CaptionDataset validation;
  CaptionDataset test;  // may be empty
};
LoadedData load_data_dir(const std::filesystem::path& dir, std::size_t frame_budget, std::size_t min_count,
                         const Vocabulary* vocab = nullptr);

}  // namespace recnet::cli

#include "recnet/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <ostream>
#include <thread>

#include "recnet/beam_search.hpp"
#include "recnet/checkpoint.hpp"
#include "recnet/errors.hpp"
#include "recnet/features.hpp"
#include "recnet/io.hpp"
#include "recnet/metrics.hpp"
#include "recnet/random.hpp"
#include "recnet/synthetic.hpp"

namespace fs = std::filesystem;

namespace recnet::cli {

int guarded(const Streams& io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const CheckpointError& e) {
    io.err << "checkpoint error: " << e.what() << '\n';
    return kDataError;
  } catch (const DimensionError& e) {
    io.err << "dimension error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError& e) {
    io.err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

int cmd_synth(const SynthOptions& opts, const Streams& io) {
  if (opts.videos == 0) throw ConfigError("--videos must be at least 1");
  SyntheticConfig cfg;
  cfg.train_videos = opts.videos;
  cfg.validation_videos = std::max<std::size_t>(2, opts.videos / 2);
  cfg.test_videos = cfg.validation_videos;
  cfg.concepts = opts.concepts;
  cfg.feature_dim = opts.dim;
  cfg.validate();
  const SyntheticCorpus corpus = generate_synthetic_dataset(opts.seed, cfg);
  write_synthetic_dataset(opts.out, corpus);
  io.out << "wrote " << corpus.train.size() << " train, " << corpus.validation.size() << " validation, "
         << corpus.test.size() << " test videos to " << opts.out.string() << '\n';
  return kOk;
}

LoadedData load_data_dir(const fs::path& dir, std::size_t frame_budget, std::size_t min_count,
                         const Vocabulary* vocab) {
  const auto train_records = read_caption_file(dir / "train.jsonl");
  const auto val_records = read_caption_file(dir / "validation.jsonl");
  std::vector<CaptionRecord> test_records;
  if (fs::exists(dir / "test.jsonl")) test_records = read_caption_file(dir / "test.jsonl");

  LoadedData d;
  if (vocab) {
    d.vocab = *vocab;
  } else {
    const auto corpus = tokenized_captions(train_records);
    d.vocab = Vocabulary::build(corpus, min_count);
  }
  const fs::path features = dir / "features";
  d.train = load_dataset(features, train_records, d.vocab, frame_budget, Split::train);
  d.validation = load_dataset(features, val_records, d.vocab, frame_budget, Split::validation);
  if (!test_records.empty()) d.test = load_dataset(features, test_records, d.vocab, frame_budget, Split::test);
  return d;
}

namespace {

void require_feature_dim(const CaptionDataset& data, std::size_t expected) {
  for (const VideoExample& v : data.videos) {
    if (v.frames.dim() != expected) {
      throw DimensionError("video '" + v.video_id + "' has feature dimension " + std::to_string(v.frames.dim()) +
                           ", model expects " + std::to_string(expected));
    }
  }
}

struct StagePaths {
  fs::path best, last, csv;
};

StagePaths stage_paths(const RunConfig& cfg, int stage) {
  const std::string s = "stage" + std::to_string(stage);
  return {cfg.out_dir / (s + ".ckpt"), cfg.out_dir / (s + ".last.ckpt"), cfg.out_dir / (s + ".csv")};
}

TrainingHooks persisting_hooks(const StagePaths& paths, std::size_t halt_after, std::ostream& log, int stage) {
  TrainingHooks hooks;
  hooks.halt_after = halt_after;
  hooks.on_epoch = [&paths, &log, stage](const ModelCheckpoint& current, const ModelCheckpoint& best) {
    if (best.epoch == current.epoch) save_checkpoint(paths.best, best);
    save_checkpoint(paths.last, current);
    write_file_atomic(paths.csv, history_csv(current.history));
    const EpochRecord& r = current.history.back();
    log << "stage " << stage << " epoch " << r.epoch << " nll " << format_double(r.nll) << " rec "
        << format_double(r.rec_loss) << " val_cider " << format_double(r.val_cider) << '\n';
  };
  return hooks;
}

// Picks up `last`/`best` files from an earlier invocation when resuming.
TrainingRun run_stage(ModelCheckpoint fresh, const StagePaths& paths, bool resume, const TrainingHooks& hooks,
                      const LoadedData& data, std::ostream& log) {
  if (resume && fs::exists(paths.last)) {
    ModelCheckpoint last = load_checkpoint(paths.last);
    ModelCheckpoint best = fs::exists(paths.best) ? load_checkpoint(paths.best) : last;
    log << "resuming stage " << last.stage << " after epoch " << last.epoch << '\n';
    return run_training(std::move(last), std::move(best), data.train, data.validation, hooks);
  }
  return run_training(std::move(fresh), std::nullopt, data.train, data.validation, hooks);
}

void finish_stage(const TrainingRun& run, const StagePaths& paths, std::ostream& log) {
  save_checkpoint(paths.best, run.best);
  save_checkpoint(paths.last, run.last);
  write_file_atomic(paths.csv, history_csv(run.last.history));
  const double best_cider = run.best.history.empty() ? 0.0 : run.best.history.back().val_cider;
  log << "stage " << run.best.stage << (run.halted ? " halted" : " done") << ": best epoch " << run.best.epoch
      << " val_cider " << format_double(best_cider) << " -> " << paths.best.string() << '\n';
}

}  // namespace

int cmd_train(const TrainOptions& opts, const Streams& io) {
  const RunConfig cfg = load_run_config(opts.config);
  const bool run1 = opts.stage != StageSelection::two;
  const bool run2 = opts.stage != StageSelection::one;
  if (run2 && cfg.training.variant == Variant::none) {
    throw ConfigError("stage 2 needs variant global or local in the config");
  }

  if (run1) {
    const LoadedData data = load_data_dir(cfg.data_dir, cfg.frame_budget, cfg.min_count);
    require_feature_dim(data.train, cfg.feature_dim);
    require_feature_dim(data.validation, cfg.feature_dim);
    const StagePaths paths = stage_paths(cfg, 1);
    const TrainingHooks hooks = persisting_hooks(paths, opts.halt_after, io.out, 1);
    TrainingConfig t = cfg.training;
    t.variant = Variant::none;
    TrainingRun run = run_stage(init_stage1(cfg.dims(data.vocab.size()), data.vocab, t), paths, opts.resume, hooks,
                                data, io.out);
    finish_stage(run, paths, io.out);
    if (run.halted) return kOk;
  }

  if (run2) {
    const fs::path s1 = run1 ? stage_paths(cfg, 1).best : cfg.stage1_path();
    if (!fs::exists(s1)) throw CheckpointError("stage 2 needs a stage-1 checkpoint; " + s1.string() + " not found");
    const ModelCheckpoint stage1 = load_checkpoint(s1);
    if (stage1.stage != 1) throw CheckpointError(s1.string() + " is not a stage-1 checkpoint");
    const LoadedData data = load_data_dir(cfg.data_dir, stage1.model.dims.frame_budget, cfg.min_count, &stage1.vocab);
    require_feature_dim(data.train, stage1.model.dims.feature_dim);
    require_feature_dim(data.validation, stage1.model.dims.feature_dim);
    const StagePaths paths = stage_paths(cfg, 2);
    const TrainingHooks hooks = persisting_hooks(paths, opts.halt_after, io.out, 2);
    TrainingRun run = run_stage(init_stage2(stage1, cfg.training), paths, opts.resume, hooks, data, io.out);
    finish_stage(run, paths, io.out);
  }
  return kOk;
}

int cmd_caption(const CaptionOptions& opts, const Streams& io) {
  if (opts.beam == 0) throw ConfigError("--beam must be at least 1");
  const ModelCheckpoint ckpt = load_checkpoint(opts.checkpoint);
  std::vector<fs::path> files;
  if (fs::is_directory(opts.features)) {
    for (const auto& entry : fs::directory_iterator(opts.features))
      if (entry.path().extension() == ".recf") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .recf files in " + opts.features.string());
  } else {
    files.push_back(opts.features);
  }
  std::vector<CandidateRecord> records;
  BeamSearchOptions beam{opts.beam, ckpt.config.max_decode_len, ckpt.config.length_normalize};
  for (const fs::path& f : files) {
    const Tensor raw = read_feature_file(f);
    if (raw.cols() != ckpt.model.dims.feature_dim) {
      throw DimensionError(f.string() + " has feature dimension " + std::to_string(raw.cols()) +
                           ", checkpoint expects " + std::to_string(ckpt.model.dims.feature_dim));
    }
    const FrameFeatureSequence frames = sample_frames(raw, ckpt.model.dims.frame_budget);
    const BeamResult r = beam_search(frames, ckpt.model.decoder, beam);
    std::string text;
    for (const std::string& w : ckpt.vocab.caption_words(r.caption)) text += (text.empty() ? "" : " ") + w;
    records.push_back({f.stem().string(), text});
  }
  const std::string jsonl = candidate_jsonl(records);
  io.out << jsonl;
  if (!opts.out.empty()) write_file_atomic(opts.out, jsonl);
  return kOk;
}

int cmd_eval(const EvalOptions& opts, const Streams& io) {
  const EvaluationCorpus corpus = load_evaluation_corpus(opts.candidates, opts.references);
  const std::string json = evaluate(corpus).to_json();
  io.out << json << '\n';
  if (!opts.out.empty()) write_file_atomic(opts.out, json + "\n");
  return kOk;
}

int cmd_sweep(const SweepOptions& opts, const Streams& io) {
  if (opts.lambdas.empty()) throw ConfigError("--lambdas needs at least one value");
  if (opts.seeds.empty()) throw ConfigError("--seeds needs at least one value");
  const RunConfig cfg = load_run_config(opts.config);
  if (cfg.training.variant == Variant::none) throw ConfigError("sweep needs variant global or local in the config");

  const fs::path s1 = cfg.stage1_path();
  ModelCheckpoint stage1;
  if (fs::exists(s1)) {
    stage1 = load_checkpoint(s1);
  } else {
    io.out << "no stage-1 checkpoint at " << s1.string() << "; training one\n";
    const LoadedData data = load_data_dir(cfg.data_dir, cfg.frame_budget, cfg.min_count);
    require_feature_dim(data.train, cfg.feature_dim);
    TrainingConfig t = cfg.training;
    t.variant = Variant::none;
    stage1 = train_stage1(cfg.dims(data.vocab.size()), data.vocab, t, data.train, data.validation).best;
    save_checkpoint(s1, stage1);
  }
  const LoadedData data = load_data_dir(cfg.data_dir, stage1.model.dims.frame_budget, cfg.min_count, &stage1.vocab);
  require_feature_dim(data.train, stage1.model.dims.feature_dim);
  const CaptionDataset& evaluation = data.test.videos.empty() ? data.validation : data.test;
  const std::size_t workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  const auto rows = lambda_sweep(stage1, cfg.training, cfg.training.variant, opts.lambdas, opts.seeds, data.train,
                                 data.validation, evaluation, workers);
  const std::string csv = sweep_csv(rows);
  write_file_atomic(cfg.out_dir / "sweep.csv", csv);
  io.out << csv;
  return kOk;
}

GradCheckReport run_gradcheck(Variant variant, std::uint64_t seed) {
  const ModelDims dims{20, 8, 16, 10, 6};
  constexpr std::size_t kWords = 5;
  constexpr std::size_t kTrueFrames = 4;
  constexpr double kScale = 1.0;
  constexpr double kLambda = 1.0;
  Rng rng(seed);

  RecNetModel model;
  model.dims = dims;
  model.decoder = DecoderParams::uniform(dims, rng, kScale);
  if (auto kind = reconstructor_kind(variant)) model.reconstructor = ReconstructorParams::uniform(*kind, dims, rng, kScale);

  Tensor raw({kTrueFrames, dims.feature_dim});
  for (double& v : raw.values()) v = rng.normal();
  TokenSequence caption;
  caption.ids.push_back(kBos);
  for (std::size_t i = 0; i < kWords; ++i) caption.ids.push_back(static_cast<TokenId>(kReservedTokens + rng.below(dims.vocab_size - kReservedTokens)));
  caption.ids.push_back(kEos);

  CaptionDataset data;
  data.videos.push_back({"gradcheck", sample_frames(raw, dims.frame_budget), {caption}});
  const Batch batch = make_batch(data, {{0, 0}});

  auto refs = model.refs();
  const LossWithGradient loss = [&](std::vector<Tensor>* grads) {
    BatchObjective obj = batch_objective(model, data, batch, kLambda, grads != nullptr);
    if (grads) *grads = std::move(obj.grads);
    return obj.total;
  };
  return finite_diff_check(loss, refs, kGradcheckStep);
}

int cmd_gradcheck(const GradcheckOptions& opts, const Streams& io) {
  const auto start = std::chrono::steady_clock::now();
  const GradCheckReport r = run_gradcheck(opts.variant, opts.seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = r.max_relative_error < kGradcheckTolerance;
  io.out << "variant " << variant_name(opts.variant) << " seed " << opts.seed << ": checked " << r.checked
         << " entries, max relative error " << format_double(r.max_relative_error) << " (" << r.worst_parameter
         << "), max abs error " << format_double(r.max_abs_error) << ", worst entry "
         << format_double(r.max_entry_relative_error) << " at " << r.worst_entry_parameter << "[" << r.worst_index
         << "] (analytic " << format_double(r.worst_analytic) << ", numeric " << format_double(r.worst_numeric)
         << "), " << format_double(secs) << " s: " << (pass ? "PASS" : "FAIL") << '\n';
  for (const TensorGradCheck& t : r.tensors) {
    io.out << "  " << t.name << " relative " << format_double(t.relative_error) << " norm "
           << format_double(t.analytic_norm) << '\n';
  }
  return pass ? kOk : kCheckFailed;
}

}  // namespace recnet::cli

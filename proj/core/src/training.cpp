#include "recnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "recnet/autodiff.hpp"
#include "recnet/beam_search.hpp"
#include "recnet/errors.hpp"
#include "recnet/io.hpp"
#include "recnet/random.hpp"

namespace recnet {

namespace {

// Separates the reconstructor's init stream from everything seeded directly.
constexpr std::uint64_t kReconstructorStream = 0x7265636f6e737472ULL;

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::none: return "none";
    case Variant::global: return "global";
    case Variant::local: return "local";
  }
  return "none";
}

Variant parse_variant(std::string_view text) {
  if (text == "none") return Variant::none;
  if (text == "global") return Variant::global;
  if (text == "local") return Variant::local;
  throw ConfigError("unknown variant '" + std::string(text) + "' (expected none, global or local)");
}

std::optional<ReconstructorKind> reconstructor_kind(Variant v) {
  if (v == Variant::global) return ReconstructorKind::global;
  if (v == Variant::local) return ReconstructorKind::local;
  return std::nullopt;
}

double default_lambda(Variant v) {
  if (v == Variant::global) return 0.2;
  if (v == Variant::local) return 0.1;
  return 0.0;
}

void TrainingConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite value >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (beam_size == 0) throw ConfigError("beam_size must be at least 1");
  if (max_decode_len == 0) throw ConfigError("max_decode_len must be at least 1");
  if (!(adadelta_rho > 0.0 && adadelta_rho < 1.0)) throw ConfigError("adadelta_rho must lie in (0, 1)");
  if (!(adadelta_eps > 0.0)) throw ConfigError("adadelta_eps must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
  if (!std::isfinite(clip_norm)) throw ConfigError("clip_norm must be finite");
}

std::vector<ParamRef> RecNetModel::refs() {
  std::vector<ParamRef> out = decoder.refs();
  if (reconstructor) {
    auto rec = reconstructor->refs();
    out.insert(out.end(), rec.begin(), rec.end());
  }
  return out;
}

BatchObjective batch_objective(RecNetModel& model, const CaptionDataset& data, const Batch& batch,
                               double lambda, bool with_gradients) {
  if (batch.size() == 0) throw DataError("empty batch");
  Tape tape(with_gradients);
  DecoderNodes dec = DecoderNodes::bind(tape, model.decoder, with_gradients);
  std::optional<ReconstructorNodes> rec;
  if (model.reconstructor) rec = ReconstructorNodes::bind(tape, *model.reconstructor, with_gradients);

  BatchObjective out;
  out.samples = batch.size();
  std::vector<Var> sample_losses;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const VideoExample& video = data.videos.at(batch.pairs[b].video);
    FrameNodes frames = attach_frames(tape, dec, video.frames);
    DecoderGraph graph = teacher_forced(dec, frames, batch.ids[b]);
    out.nll_sum += graph.loss.value().item();
    if (!rec) {
      sample_losses.push_back(graph.loss);
      continue;
    }
    Var rec_loss = rec->kind == ReconstructorKind::global
                       ? global_loss(video.frames, reconstruct_global(graph.hidden, *rec))
                       : local_loss(video.frames, reconstruct_local(graph.hidden, video.frames.budget(), *rec));
    out.rec_sum += rec_loss.value().item();
    sample_losses.push_back(ag::add(graph.loss, ag::scale(rec_loss, lambda)));
  }
  Var total = ag::scale(ag::add_n(sample_losses), 1.0 / static_cast<double>(batch.size()));
  out.total = total.value().item();
  if (!with_gradients) return out;

  tape.backward(total);
  std::vector<Var> vars = dec.all();
  if (rec) {
    auto r = rec->all();
    vars.insert(vars.end(), r.begin(), r.end());
  }
  for (const Var& v : vars) out.grads.push_back(tape.grad(v));
  auto pad_row = out.grads.front().row(kPad);
  std::fill(pad_row.begin(), pad_row.end(), 0.0);
  return out;
}

bool EarlyStopping::update(std::size_t epoch, double metric) {
  if (!seen_ || metric > best_metric_) {
    seen_ = true;
    best_epoch_ = epoch;
    best_metric_ = metric;
    return true;
  }
  return false;
}

ModelCheckpoint init_stage1(const ModelDims& dims, const Vocabulary& vocab, TrainingConfig config) {
  dims.validate();
  config.variant = Variant::none;
  config.validate();
  if (dims.vocab_size != vocab.size()) {
    throw DimensionError("model vocab_size " + std::to_string(dims.vocab_size) + " does not match vocabulary of " +
                         std::to_string(vocab.size()) + " words");
  }
  ModelCheckpoint ckpt;
  ckpt.stage = 1;
  ckpt.config = config;
  ckpt.vocab = vocab;
  ckpt.model.dims = dims;
  Rng rng(config.seed);
  ckpt.model.decoder = DecoderParams::uniform(dims, rng, config.init_scale);
  ckpt.decoder_opt = AdaDeltaState::for_params(ckpt.model.decoder.refs(), config.adadelta_rho, config.adadelta_eps);
  return ckpt;
}

ModelCheckpoint init_stage2(const ModelCheckpoint& stage1, TrainingConfig config) {
  config.validate();
  auto kind = reconstructor_kind(config.variant);
  if (!kind) throw ConfigError("stage 2 needs variant global or local");
  ModelCheckpoint ckpt;
  ckpt.stage = 2;
  ckpt.config = config;
  ckpt.vocab = stage1.vocab;
  ckpt.model.dims = stage1.model.dims;
  ckpt.model.decoder = stage1.model.decoder;
  ckpt.decoder_opt = stage1.decoder_opt;
  Rng rng(mix_seed(config.seed, kReconstructorStream));
  ckpt.model.reconstructor = ReconstructorParams::uniform(*kind, ckpt.model.dims, rng, config.init_scale);
  ckpt.reconstructor_opt =
      AdaDeltaState::for_params(ckpt.model.reconstructor->refs(), config.adadelta_rho, config.adadelta_eps);
  return ckpt;
}

std::vector<TokenSequence> decode_all(const DecoderParams& decoder, const CaptionDataset& data, std::size_t beam,
                                      std::size_t max_len, bool length_normalize) {
  BeamSearchOptions opts{beam, max_len, length_normalize};
  std::vector<TokenSequence> out;
  out.reserve(data.videos.size());
  for (const VideoExample& v : data.videos) out.push_back(beam_search(v.frames, decoder, opts).caption);
  return out;
}

namespace {

EvaluationCorpus build_corpus(const Vocabulary& vocab, const CaptionDataset& data,
                              const std::vector<TokenSequence>& captions) {
  EvaluationCorpus corpus;
  for (std::size_t i = 0; i < data.videos.size(); ++i) {
    EvaluationEntry e;
    e.candidate = vocab.caption_words(captions[i]);
    for (const TokenSequence& ref : data.videos[i].captions) e.references.push_back(vocab.caption_words(ref));
    corpus[data.videos[i].video_id] = std::move(e);
  }
  return corpus;
}

}  // namespace

MetricReport evaluate_model(const ModelCheckpoint& checkpoint, const CaptionDataset& data, std::size_t beam,
                            std::size_t max_len, bool length_normalize) {
  auto captions = decode_all(checkpoint.model.decoder, data, beam, max_len, length_normalize);
  return evaluate(build_corpus(checkpoint.vocab, data, captions));
}

TokenAccuracy dataset_token_accuracy(const DecoderParams& decoder, const CaptionDataset& data) {
  TokenAccuracy acc;
  for (const VideoExample& v : data.videos) {
    for (const TokenSequence& c : v.captions) {
      TokenAccuracy a = teacher_forced_accuracy(v.frames, c, decoder);
      acc.correct += a.correct;
      acc.total += a.total;
    }
  }
  return acc;
}

TrainingRun run_training(ModelCheckpoint current, std::optional<ModelCheckpoint> best, const CaptionDataset& train,
                         const CaptionDataset& validation, const TrainingHooks& hooks) {
  const TrainingConfig& cfg = current.config;
  cfg.validate();
  if (train.videos.empty()) throw DataError("training split is empty");
  if (validation.videos.size() < 2) throw DataError("validation split needs at least two videos for CIDEr");
  train.validate(current.model.dims.vocab_size);
  validation.validate(current.model.dims.vocab_size);
  if (current.model.reconstructor.has_value() != current.reconstructor_opt.has_value()) {
    throw CheckpointError("reconstructor parameters and optimizer state disagree");
  }
  const double lambda = current.model.reconstructor ? cfg.lambda : 0.0;

  EarlyStopping stopper(cfg.patience);
  for (const EpochRecord& r : current.history) stopper.update(r.epoch, r.val_cider);
  if (!best) best = current;

  TrainingRun run;
  std::size_t done_here = 0;
  while (current.epoch < cfg.max_epochs && !(current.epoch > 0 && stopper.should_stop(current.epoch))) {
    if (hooks.halt_after && done_here >= hooks.halt_after) {
      run.halted = true;
      break;
    }
    const std::size_t epoch = current.epoch + 1;
    std::vector<ParamRef> dec_refs = current.model.decoder.refs();
    std::vector<ParamRef> rec_refs;
    if (current.model.reconstructor) rec_refs = current.model.reconstructor->refs();

    double nll = 0.0, rec = 0.0;
    std::size_t samples = 0;
    for (const Batch& batch : make_epoch_batches(train, cfg.batch_size, cfg.seed, epoch)) {
      BatchObjective obj = batch_objective(current.model, train, batch, lambda, true);
      nll += obj.nll_sum;
      rec += obj.rec_sum;
      samples += obj.samples;
      clip_by_global_norm(obj.grads, cfg.clip_norm);
      std::span<const Tensor> grads(obj.grads);
      adadelta_update(dec_refs, grads.first(dec_refs.size()), current.decoder_opt);
      if (!rec_refs.empty()) adadelta_update(rec_refs, grads.subspan(dec_refs.size()), *current.reconstructor_opt);
    }

    auto captions = decode_all(current.model.decoder, validation, cfg.beam_size, cfg.max_decode_len,
                               cfg.length_normalize);
    EpochRecord record;
    record.epoch = epoch;
    record.nll = nll / static_cast<double>(samples);
    record.rec_loss = rec / static_cast<double>(samples);
    record.val_cider = cider(build_corpus(current.vocab, validation, captions));
    current.history.push_back(record);
    current.epoch = epoch;
    ++done_here;

    if (stopper.update(epoch, record.val_cider)) best = current;
    if (hooks.on_epoch) hooks.on_epoch(current, *best);
  }
  run.best = std::move(*best);
  run.last = std::move(current);
  return run;
}

TrainingRun train_stage1(const ModelDims& dims, const Vocabulary& vocab, const TrainingConfig& config,
                         const CaptionDataset& train, const CaptionDataset& validation, const TrainingHooks& hooks) {
  return run_training(init_stage1(dims, vocab, config), std::nullopt, train, validation, hooks);
}

TrainingRun train_stage2(const ModelCheckpoint& stage1, const TrainingConfig& config, const CaptionDataset& train,
                         const CaptionDataset& validation, const TrainingHooks& hooks) {
  return run_training(init_stage2(stage1, config), std::nullopt, train, validation, hooks);
}

std::vector<SweepRow> lambda_sweep(const ModelCheckpoint& stage1, const TrainingConfig& base, Variant variant,
                                   const std::vector<double>& lambdas, const std::vector<std::uint64_t>& seeds,
                                   const CaptionDataset& train, const CaptionDataset& validation,
                                   const CaptionDataset& evaluation, std::size_t workers) {
  if (!reconstructor_kind(variant)) throw ConfigError("sweep needs variant global or local");
  if (lambdas.empty() || seeds.empty()) throw ConfigError("sweep needs at least one lambda and one seed");
  struct Job {
    double lambda;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double l : lambdas)
    for (std::uint64_t s : seeds) jobs.push_back({l, s});
  for (const Job& j : jobs) {
    TrainingConfig c = base;
    c.lambda = j.lambda;
    c.validate();
  }

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        TrainingConfig c = base;
        c.variant = variant;
        c.lambda = jobs[i].lambda;
        c.seed = jobs[i].seed;
        TrainingRun run = train_stage2(stage1, c, train, validation);
        MetricReport m = evaluate_model(run.best, evaluation, c.beam_size, c.max_decode_len, c.length_normalize);
        const EpochRecord& at_best = run.best.history.back();
        rows[i] = {c.lambda, c.seed, variant, m.bleu4, m.rouge_l, m.cider, at_best.nll, at_best.rec_loss};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(workers, 1, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,seed,variant,bleu4,rougeL,cider,nll,rec_loss\n";
  for (const SweepRow& r : rows) {
    out += format_double(r.lambda) + ',' + std::to_string(r.seed) + ',' + std::string(variant_name(r.variant)) + ',' +
           format_double(r.bleu4) + ',' + format_double(r.rouge_l) + ',' + format_double(r.cider) + ',' +
           format_double(r.nll) + ',' + format_double(r.rec_loss) + '\n';
  }
  return out;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,nll,rec_loss,val_cider\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + ',' + format_double(r.nll) + ',' + format_double(r.rec_loss) + ',' +
           format_double(r.val_cider) + '\n';
  }
  return out;
}

}  // namespace recnet

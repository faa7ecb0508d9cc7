#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recnet/dataset.hpp"
#include "recnet/decoder.hpp"
#include "recnet/metrics.hpp"
#include "recnet/optim.hpp"
#include "recnet/reconstructor.hpp"
#include "recnet/text.hpp"

namespace recnet {

enum class Variant { none, global, local };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view text);
std::optional<ReconstructorKind> reconstructor_kind(Variant v);

// λ shipped for each reconstructor: 0.2 global, 0.1 local.
double default_lambda(Variant v);

struct TrainingConfig {
  Variant variant = Variant::none;
  double lambda = 0.0;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 2000;
  std::size_t patience = 20;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  std::size_t beam_size = 5;
  std::size_t max_decode_len = kMaxCaptionWords;
  bool length_normalize = false;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  double init_scale = 0.08;

  void validate() const;
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct RecNetModel {
  ModelDims dims;
  DecoderParams decoder;
  std::optional<ReconstructorParams> reconstructor;

  // Decoder parameters followed by reconstructor parameters.
  std::vector<ParamRef> refs();
};

struct BatchObjective {
  double total = 0.0;     // mean over the batch of nll + λ·rec
  double nll_sum = 0.0;   // Σ over samples of the caption NLL
  double rec_sum = 0.0;   // Σ over samples of L_rec (0 without a reconstructor)
  std::size_t samples = 0;
  std::vector<Tensor> grads;  // d(total)/d(param), in RecNetModel::refs() order
};

// Builds one tape for the batch: per sample the teacher-forced NLL and, when
// the model carries a reconstructor, L_rec on the decoder's hidden states;
// the sample loss is nll + λ·L_rec and the batch loss their mean. The PAD
// embedding row receives no gradient.
BatchObjective batch_objective(RecNetModel& model, const CaptionDataset& data, const Batch& batch,
                               double lambda, bool with_gradients);

// Early stopping on a validation metric that should increase.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `metric` strictly improves on every earlier epoch.
  bool update(std::size_t epoch, double metric);
  bool should_stop(std::size_t epoch) const { return seen_ && epoch >= best_epoch_ + patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }

 private:
  std::size_t patience_;
  bool seen_ = false;
  std::size_t best_epoch_ = 0;
  double best_metric_ = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double nll = 0.0;        // mean per-caption NLL over the epoch
  double rec_loss = 0.0;   // mean per-caption L_rec over the epoch
  double val_cider = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct ModelCheckpoint {
  int stage = 1;
  TrainingConfig config;
  Vocabulary vocab;
  RecNetModel model;
  AdaDeltaState decoder_opt;
  std::optional<AdaDeltaState> reconstructor_opt;
  std::size_t epoch = 0;  // epochs completed in this stage
  std::vector<EpochRecord> history;
};

// Fresh stage-1 state: decoder uniform in [−init_scale, init_scale] from the
// config seed, zero optimizer accumulators, config.variant forced to none.
ModelCheckpoint init_stage1(const ModelDims& dims, const Vocabulary& vocab, TrainingConfig config);

// Stage-2 state from a stage-1 checkpoint: the decoder and its accumulators
// carry over, the reconstructor is drawn fresh from the config seed with
// fresh accumulators, the epoch counter and history restart.
ModelCheckpoint init_stage2(const ModelCheckpoint& stage1, TrainingConfig config);

struct TrainingHooks {
  // Called after every epoch with the current and best-so-far state.
  std::function<void(const ModelCheckpoint& current, const ModelCheckpoint& best)> on_epoch;
  // Stop (as if interrupted) once this many epochs of the stage are done; 0 = never.
  std::size_t halt_after = 0;
};

struct TrainingRun {
  ModelCheckpoint best;
  ModelCheckpoint last;
  bool halted = false;  // stopped by TrainingHooks::halt_after
};

// Runs epochs from `current.epoch + 1` until the early-stopping rule fires or
// config.max_epochs is reached. Each epoch shuffles with (seed, epoch), takes
// one AdaDelta step per batch after global-norm clipping, then decodes the
// validation split with beam search and scores CIDEr. `best` resumes an
// interrupted run; it defaults to `current`.
TrainingRun run_training(ModelCheckpoint current, std::optional<ModelCheckpoint> best,
                         const CaptionDataset& train, const CaptionDataset& validation,
                         const TrainingHooks& hooks = {});

TrainingRun train_stage1(const ModelDims& dims, const Vocabulary& vocab, const TrainingConfig& config,
                         const CaptionDataset& train, const CaptionDataset& validation,
                         const TrainingHooks& hooks = {});

TrainingRun train_stage2(const ModelCheckpoint& stage1, const TrainingConfig& config,
                         const CaptionDataset& train, const CaptionDataset& validation,
                         const TrainingHooks& hooks = {});

// Beam-decodes every video and scores the captions against all references.
MetricReport evaluate_model(const ModelCheckpoint& checkpoint, const CaptionDataset& data,
                            std::size_t beam, std::size_t max_len, bool length_normalize = false);

std::vector<TokenSequence> decode_all(const DecoderParams& decoder, const CaptionDataset& data,
                                      std::size_t beam, std::size_t max_len, bool length_normalize = false);

// Mean teacher-forced token accuracy over every caption of the dataset.
TokenAccuracy dataset_token_accuracy(const DecoderParams& decoder, const CaptionDataset& data);

struct SweepRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::none;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  double nll = 0.0;
  double rec_loss = 0.0;
};

// One stage-2 run per (λ, seed) from the shared stage-1 checkpoint, scored on
// `evaluation`. Runs execute on up to `workers` threads; rows come back in
// (λ, seed) input order.
std::vector<SweepRow> lambda_sweep(const ModelCheckpoint& stage1, const TrainingConfig& base,
                                   Variant variant, const std::vector<double>& lambdas,
                                   const std::vector<std::uint64_t>& seeds, const CaptionDataset& train,
                                   const CaptionDataset& validation, const CaptionDataset& evaluation,
                                   std::size_t workers = 1);

// Header `lambda,seed,variant,bleu4,rougeL,cider,nll,rec_loss`.
std::string sweep_csv(const std::vector<SweepRow>& rows);
// Header `epoch,nll,rec_loss,val_cider`.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace recnet

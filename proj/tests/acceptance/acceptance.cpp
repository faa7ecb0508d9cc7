// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "oracles/metric_oracle.hpp"
#include "oracles/straight_line.hpp"
#include "recnet/beam_search.hpp"
#include "recnet/checkpoint.hpp"
#include "recnet/cli/commands.hpp"
#include "recnet/io.hpp"
#include "recnet/metrics.hpp"
#include "recnet/synthetic.hpp"

using namespace recnet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail << " ["
            << std::fixed << std::setprecision(1) << seconds_since(start) << " s]" << std::defaultfloat << std::endl;
}

std::string num(double v) { return format_double(v); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("recnet_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Desk {
  Vocabulary vocab;
  CaptionDataset train, validation;
  ModelDims dims;
};

Desk desk_data(std::uint64_t seed, const SyntheticConfig& cfg = {}) {
  SyntheticCorpus corpus = generate_synthetic_dataset(seed, cfg);
  Desk d;
  d.vocab = synthetic_vocabulary(corpus);
  d.train = to_dataset(corpus.train, d.vocab, 6, Split::train);
  d.validation = to_dataset(corpus.validation, d.vocab, 6, Split::validation);
  d.dims = {d.vocab.size(), 8, 16, 10, 6};
  return d;
}

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  std::ostringstream detail;
  bool pass = true;
  for (Variant v : {Variant::none, Variant::global, Variant::local}) {
    const GradCheckReport r = cli::run_gradcheck(v, 1);
    pass = pass && r.max_relative_error < cli::kGradcheckTolerance;
    detail << variant_name(v) << " " << num(r.max_relative_error) << " over " << r.checked << " entries; ";
  }
  const double secs = seconds_since(start);
  pass = pass && secs < 60.0;
  detail << "total " << num(secs) << " s (limit 60)";
  return {pass, detail.str()};
}

Outcome overfit() {
  const auto start = Clock::now();
  Desk d = desk_data(7);
  TrainingConfig c;
  c.seed = 7;
  c.batch_size = 8;
  c.init_scale = 0.08;
  c.max_epochs = 500;
  c.patience = 500;
  const TrainingRun run = train_stage1(d.dims, d.vocab, c, d.train, d.train);
  const TokenAccuracy acc = dataset_token_accuracy(run.best.model.decoder, d.train);
  const auto decoded = decode_all(run.best.model.decoder, d.train, 1, c.max_decode_len);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < d.train.videos.size(); ++i) exact += decoded[i] == d.train.videos[i].captions.front();
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << d.train.videos.size() << " pairs, best epoch " << run.best.epoch << ", token accuracy " << num(acc.rate())
         << " (need 0.99), exact beam-1 captions " << exact << "/" << d.train.videos.size() << " (need 14), " << num(secs)
         << " s (limit 300)";
  return {d.train.videos.size() == 16 && acc.rate() >= 0.99 && exact >= 14 && secs < 300.0, detail.str()};
}

Outcome lambda_zero() {
  Desk d = desk_data(7);
  TrainingConfig c;
  c.max_epochs = 3;
  const ModelCheckpoint s1 = train_stage1(d.dims, d.vocab, c, d.train, d.validation).last;
  std::ostringstream detail;
  bool pass = true;
  for (Variant v : {Variant::global, Variant::local}) {
    TrainingConfig c2;
    c2.variant = v;
    c2.lambda = 0.0;
    c2.max_epochs = 10;
    c2.patience = 10;
    ModelCheckpoint joint = init_stage2(s1, c2);
    ModelCheckpoint plain = s1;
    plain.config = c2;
    plain.config.variant = Variant::none;
    plain.epoch = 0;
    plain.history.clear();
    std::vector<std::vector<Tensor>> a, b;
    auto snapshot = [](std::vector<std::vector<Tensor>>& into) {
      TrainingHooks h;
      h.on_epoch = [&into](const ModelCheckpoint& cur, const ModelCheckpoint&) {
        DecoderParams p = cur.model.decoder;
        std::vector<Tensor> ts;
        for (const ParamRef& r : p.refs()) ts.push_back(*r.tensor);
        into.push_back(std::move(ts));
      };
      return h;
    };
    run_training(joint, std::nullopt, d.train, d.validation, snapshot(a));
    run_training(plain, std::nullopt, d.train, d.validation, snapshot(b));
    std::size_t equal_epochs = 0;
    for (std::size_t e = 0; e < std::min(a.size(), b.size()); ++e) {
      bool same = a[e].size() == b[e].size();
      for (std::size_t k = 0; same && k < a[e].size(); ++k) same = bitwise_equal(a[e][k], b[e][k]);
      equal_epochs += same;
    }
    pass = pass && a.size() == 10 && b.size() == 10 && equal_epochs == 10;
    detail << variant_name(v) << " " << equal_epochs << "/10 epochs bitwise equal; ";
  }
  return {pass, detail.str()};
}

struct Best {
  std::vector<TokenId> words;
  double score = -1e300;
};

Outcome beam_oracle() {
  Rng rng(2024);
  const std::size_t vocab = 5, max_len = 4, width = 625;
  std::size_t exhaustive_ok = 0, greedy_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ModelDims dims{vocab, 4, 5, 3, 5};
    const DecoderParams p = DecoderParams::uniform(dims, rng, 2.0);
    Tensor raw({1 + rng.below(6), 3});
    for (double& v : raw.values()) v = rng.normal();
    const FrameFeatureSequence f = sample_frames(raw, 5);
    Best best;
    std::vector<TokenId> words;
    std::function<void()> visit = [&] {
      const double s = oracle::sequence_log_prob(f, words, p);
      if (s > best.score) best = {words, s};
      if (words.size() == max_len) return;
      for (TokenId t = kEos + 1; t < vocab; ++t) {
        words.push_back(t);
        visit();
        words.pop_back();
      }
    };
    visit();
    exhaustive_ok += beam_search(f, p, {width, max_len, false}).caption == make_sequence(best.words);
    greedy_ok += beam_search(f, p, {1, max_len, false}).caption == greedy_decode(f, p, max_len).caption;
  }
  std::ostringstream detail;
  detail << "beam " << width << " matches enumeration " << exhaustive_ok << "/20, beam 1 equals greedy " << greedy_ok
         << "/20";
  return {exhaustive_ok == 20 && greedy_ok == 20, detail.str()};
}

Outcome metric_oracles() {
  const fs::path hand = fs::path(RECNET_FIXTURES) / "hand_corpus";
  auto as_oracle = [](const EvaluationCorpus& c) {
    std::vector<oracle::Entry> out;
    for (const auto& [id, e] : c) out.push_back({e.candidate, e.references});
    return out;
  };
  const EvaluationCorpus c = load_evaluation_corpus(hand / "candidates.jsonl", hand / "references.jsonl");
  const MetricReport r = evaluate(c);
  const auto o = as_oracle(c);
  const double db = std::abs(r.bleu4 - oracle::bleu4(o));
  const double dr = std::abs(r.rouge_l - oracle::rouge_l(o));
  const double dc = std::abs(r.cider - oracle::cider(o));
  const EvaluationCorpus id = load_evaluation_corpus(hand / "identity_candidates.jsonl", hand / "references.jsonl");
  const MetricReport ri = evaluate(id);
  std::ostringstream detail;
  detail << c.size() << " entries, |diff| bleu4 " << num(db) << " rougeL " << num(dr) << " cider " << num(dc)
         << " (limit 1e-9); identity bleu4 " << num(ri.bleu4) << " rougeL " << num(ri.rouge_l);
  return {c.size() == 10 && db <= 1e-9 && dr <= 1e-9 && dc <= 1e-9 && ri.bleu4 == 1.0 && ri.rouge_l == 1.0,
          detail.str()};
}

ReconstructionTrace with_states(const std::vector<oracle::Vec>& z) {
  ReconstructionTrace t;
  t.states = Tensor({z.size(), z.front().size()});
  for (std::size_t r = 0; r < z.size(); ++r)
    for (std::size_t c = 0; c < z[r].size(); ++c) t.states.at(r, c) = z[r][c];
  return t;
}

Outcome reconstruction_identities() {
  Rng rng(6);
  double worst_self = 0.0, worst_global = 0.0, worst_local = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor a({1 + rng.below(20)});
    for (double& v : a.values()) v = rng.normal() * 10;
    worst_self = std::max(worst_self, euclidean_distance(a, a));

    const std::size_t d = 1 + rng.below(10), real = 1 + rng.below(8);
    Tensor raw({real, d});
    for (double& v : raw.values()) v = rng.normal();
    const FrameFeatureSequence f = sample_frames(raw, 8);
    auto rows = oracle::frame_rows(f);
    rows.resize(f.true_length);
    worst_global = std::max(worst_global, global_loss(f, with_states(rows)));

    Tensor raw3({3, d});
    for (double& v : raw3.values()) v = rng.normal();
    const FrameFeatureSequence f5 = sample_frames(raw3, 5);
    std::vector<oracle::Vec> z;
    for (int t = 0; t < 5; ++t) {
      oracle::Vec row(d);
      for (double& v : row) v = rng.normal();
      z.push_back(row);
    }
    const auto frames = oracle::frame_rows(f5);
    double direct = 0.0;
    for (std::size_t t = 0; t < 3; ++t) direct += oracle::distance(z[t], frames[t]);
    direct /= 3.0;
    worst_local = std::max(worst_local, std::abs(local_loss(f5, with_states(z)) - direct));
  }
  std::ostringstream detail;
  detail << "max psi(a,a) " << num(worst_self) << ", max global loss at frame states " << num(worst_global)
         << " (limit 1e-6), max local 3+2 deviation " << num(worst_local) << " (limit 1e-10)";
  return {worst_self <= 1e-6 && worst_global <= 1e-6 && worst_local <= 1e-10, detail.str()};
}

Outcome attention_normalization() {
  Rng rng(7);
  double worst_alpha = 0.0, worst_beta = 0.0, masked_mass = 0.0;
  std::size_t alpha_rows = 0, beta_rows = 0;
  for (int step = 0; step < 1000; ++step) {
    const std::size_t budget = 1 + rng.below(8), d = 1 + rng.below(5);
    const ModelDims dims{6, 3, 1 + rng.below(6), d, budget};
    const DecoderParams p = DecoderParams::uniform(dims, rng, 1.0 + 2.0 * rng.uniform());
    Tensor raw({1 + rng.below(12), d});
    for (double& v : raw.values()) v = rng.normal() * 3;
    const FrameFeatureSequence f = sample_frames(raw, budget);
    LSTMState state = LSTMState::zeros(dims.hidden_size);
    for (double& v : state.hidden.values()) v = rng.uniform(-1, 1);
    for (double& v : state.memory.values()) v = rng.normal();
    const DecodeStepResult r = decode_step(static_cast<TokenId>(rng.below(6)), state, f, p);
    double s = 0.0;
    for (std::size_t i = 0; i < budget; ++i) {
      s += r.weights[i];
      if (!f.mask[i]) masked_mass = std::max(masked_mass, std::abs(r.weights[i]));
    }
    worst_alpha = std::max(worst_alpha, std::abs(s - 1.0));
    ++alpha_rows;

    const ReconstructorParams rp = ReconstructorParams::uniform(ReconstructorKind::local, dims, rng, 1.0);
    DecoderTrace trace;
    trace.hidden = Tensor({1 + rng.below(7), dims.hidden_size});
    for (double& v : trace.hidden.values()) v = rng.uniform(-1, 1);
    const ReconstructionTrace rec = reconstruct_local(trace, budget, rp);
    for (std::size_t t = 0; t < rec.attention.rows(); ++t) {
      double b = 0.0;
      for (double v : rec.attention.row(t)) b += v;
      worst_beta = std::max(worst_beta, std::abs(b - 1.0));
      ++beta_rows;
    }
  }
  std::ostringstream detail;
  detail << alpha_rows << " alpha rows, max |sum-1| " << num(worst_alpha) << ", max masked weight " << num(masked_mass)
         << "; " << beta_rows << " beta rows from 1000 reconstructions, max |sum-1| " << num(worst_beta);
  return {worst_alpha <= 1e-12 && worst_beta <= 1e-12 && masked_mass == 0.0, detail.str()};
}

Outcome determinism_and_persistence() {
  using namespace recnet::cli;
  const fs::path root = scratch("persist");
  std::ostringstream sink;
  Streams io{sink, sink};
  SynthOptions so;
  so.out = root / "data";
  so.videos = 8;
  if (cmd_synth(so, io) != kOk) return {false, "synth failed"};
  auto run_dir = [&](const std::string& name) {
    const fs::path dir = root / name;
    fs::create_directories(dir);
    write_file_atomic(dir / "run.conf", "data_dir = " + (root / "data").string() + "\nout_dir = " +
                                            (dir / "runs").string() + "\nmax_epochs = 5\nvariant = local\nlambda = 0.1\n");
    return dir;
  };
  const fs::path a = run_dir("a"), b = run_dir("b"), r = run_dir("resumed");
  cmd_train({a / "run.conf", StageSelection::both, false, 0}, io);
  cmd_train({b / "run.conf", StageSelection::both, false, 0}, io);
  cmd_train({r / "run.conf", StageSelection::one, false, 2}, io);
  cmd_train({r / "run.conf", StageSelection::one, true, 0}, io);
  cmd_train({r / "run.conf", StageSelection::two, false, 3}, io);
  cmd_train({r / "run.conf", StageSelection::two, true, 0}, io);

  bool csv_same = true, resume_same = true, roundtrip = true;
  for (const char* f : {"stage1.csv", "stage2.csv"})
    csv_same = csv_same && read_file(a / "runs" / f) == read_file(b / "runs" / f);
  for (const char* f : {"stage1.csv", "stage2.csv", "stage1.ckpt", "stage1.last.ckpt", "stage2.ckpt", "stage2.last.ckpt"})
    resume_same = resume_same && read_file(a / "runs" / f) == read_file(r / "runs" / f);
  for (const char* f : {"stage1.last.ckpt", "stage2.last.ckpt"}) {
    const std::string bytes = read_file(a / "runs" / f);
    const ModelCheckpoint c = load_checkpoint(a / "runs" / f);
    save_checkpoint(root / "copy.ckpt", c);
    roundtrip = roundtrip && serialize_checkpoint(c) == bytes && read_file(root / "copy.ckpt") == bytes;
  }
  std::ostringstream detail;
  detail << "repeat-run CSVs identical " << (csv_same ? "yes" : "no") << ", checkpoint round trip bitwise "
         << (roundtrip ? "yes" : "no") << ", interrupted+resumed run identical " << (resume_same ? "yes" : "no");
  return {csv_same && resume_same && roundtrip, detail.str()};
}

Outcome benchmark_status() {
  SyntheticConfig cfg;
  cfg.noise = 0.5;
  cfg.validation_videos = 16;
  cfg.test_videos = 16;
  SyntheticCorpus corpus = generate_synthetic_dataset(7, cfg);
  Vocabulary vocab = synthetic_vocabulary(corpus);
  const CaptionDataset train = to_dataset(corpus.train, vocab, 6, Split::train);
  const CaptionDataset val = to_dataset(corpus.validation, vocab, 6, Split::validation);
  const CaptionDataset test = to_dataset(corpus.test, vocab, 6, Split::test);
  TrainingConfig c;
  c.max_epochs = 200;
  c.patience = 200;
  const ModelCheckpoint s1 = train_stage1({vocab.size(), 8, 16, 10, 6}, vocab, c, train, val).best;
  c.max_epochs = 60;
  c.patience = 20;
  const std::vector<double> lambdas{0.0, 0.1, 0.2};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::ostringstream detail;
  for (Variant v : {Variant::global, Variant::local}) {
    const auto rows = lambda_sweep(s1, c, v, lambdas, seeds, train, val, test, 1);
    const fs::path out = fs::path("lambda_sweep_") += std::string(variant_name(v)) + ".csv";
    write_file_atomic(out, sweep_csv(rows));
    std::map<double, double> mean;
    for (const SweepRow& r : rows) mean[r.lambda] += r.cider / static_cast<double>(seeds.size());
    detail << variant_name(v) << " mean test CIDEr";
    for (const auto& [l, m] : mean) detail << " l=" << l << ":" << num(m);
    detail << " -> " << fs::absolute(out).string() << "; ";
  }
  detail << "full-scale benchmark tables (e.g. BLEU-4 36.3 -> 39.1 on MSR-VTT) need MSR-VTT/MSVD features and are out of "
            "scope; sweep emitted as a trend report, not asserted";
  return {true, detail.str()};
}

}  // namespace

int main() {
  report(1, "gradient fidelity", gradient_fidelity);
  report(2, "overfit reproduction", overfit);
  report(3, "lambda=0 equivalence", lambda_zero);
  report(4, "beam search optimality", beam_oracle);
  report(5, "metric oracles", metric_oracles);
  report(6, "reconstruction identities", reconstruction_identities);
  report(7, "attention normalization", attention_normalization);
  report(8, "determinism and persistence", determinism_and_persistence);
  report(9, "benchmark-number status", benchmark_status);
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << 9 - failures << "/9" << std::endl;
  return failures ? 1 : 0;
}

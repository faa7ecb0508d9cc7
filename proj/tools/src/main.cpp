#include <CLI11.hpp>
#include <iostream>

#include "recnet/cli/commands.hpp"

using namespace recnet;
using namespace recnet::cli;

int main(int argc, char** argv) {
  CLI::App app{"recnet: attention LSTM video captioning with feature reconstruction"};
  app.require_subcommand(1);
  Streams io{std::cout, std::cerr};

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "write a synthetic captioning dataset");
  s->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  s->add_option("--out", synth.out, "output directory")->capture_default_str();
  s->add_option("--videos", synth.videos, "training videos")->capture_default_str();
  s->add_option("--concepts", synth.concepts, "distinct concepts")->capture_default_str();
  s->add_option("--dim", synth.dim, "feature dimension")->capture_default_str();

  TrainOptions train;
  std::string stage = "both";
  auto* t = app.add_subcommand("train", "run stage 1, stage 2 or both");
  t->add_option("--config", train.config, "run config file")->required();
  t->add_option("--stage", stage, "1, 2 or both")->check(CLI::IsMember({"1", "2", "both"}))->capture_default_str();
  t->add_flag("--resume", train.resume, "continue from the last checkpoints in out_dir");

  CaptionOptions caption;
  auto* c = app.add_subcommand("caption", "caption feature files with beam search");
  c->add_option("--checkpoint", caption.checkpoint, "model checkpoint")->required();
  c->add_option("--features", caption.features, ".recf file or directory")->required();
  c->add_option("--beam", caption.beam, "beam width")->capture_default_str();
  c->add_option("--out", caption.out, "also write the JSON lines here");

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "score candidate captions");
  e->add_option("--candidates", eval.candidates, "JSON lines {video_id, caption}")->required();
  e->add_option("--references", eval.references, "JSON lines {video_id, captions}")->required();
  e->add_option("--out", eval.out, "also write the report here");

  SweepOptions sweep;
  auto* w = app.add_subcommand("sweep", "stage-2 runs over lambda values and seeds");
  w->add_option("--config", sweep.config, "run config file")->required();
  w->add_option("--lambdas", sweep.lambdas, "comma separated lambda values")->required()->delimiter(',');
  w->add_option("--seeds", sweep.seeds, "comma separated seeds")->required()->delimiter(',');
  w->add_option("--workers", sweep.workers, "parallel runs (0 = all cores)")->capture_default_str();

  GradcheckOptions grad;
  std::string variant = "none";
  auto* g = app.add_subcommand("gradcheck", "finite-difference check of the training loss");
  g->add_option("--variant", variant, "none, global or local")
      ->check(CLI::IsMember({"none", "global", "local"}))
      ->capture_default_str();
  g->add_option("--seed", grad.seed, "random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  return guarded(io, [&]() -> int {
    if (*s) return cmd_synth(synth, io);
    if (*t) {
      train.stage = stage == "1" ? StageSelection::one : stage == "2" ? StageSelection::two : StageSelection::both;
      return cmd_train(train, io);
    }
    if (*c) return cmd_caption(caption, io);
    if (*e) return cmd_eval(eval, io);
    if (*w) return cmd_sweep(sweep, io);
    grad.variant = parse_variant(variant);
    return cmd_gradcheck(grad, io);
  });
}

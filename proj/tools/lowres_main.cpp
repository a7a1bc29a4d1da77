// Command-line front end for the privacy-preserving depth pipeline:
//   synth -> downsample -> train-sr -> enhance -> train-cls -> eval -> report
// Every error exits nonzero with a single machine-parsable line on stderr.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "lowres/pipeline.hpp"

using namespace lowres;

namespace {

struct GlobalArgs {
  uint64_t seed = 42;
  std::string config_path;
  std::string policy = "none";

  PipelineConfig load(bool seed_set, bool policy_set) const {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_pipeline_config(config_path);
    if (seed_set || config_path.empty()) cfg.seed = seed;
    if (policy_set || config_path.empty())
      cfg.policy = privacy_from_string(policy);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving low-resolution depth vision pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags are accepted after the subcommand too

  GlobalArgs global;
  auto* seed_opt = app.add_option("--seed", global.seed, "master seed");
  app.add_option("--config", global.config_path, "JSON run configuration");
  auto* policy_opt =
      app.add_option("--privacy-policy", global.policy,
                     "privacy policy for persisted frames")
          ->check(CLI::IsMember({"none", "weak", "strong"}));

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out;
  std::string synth_task;
  bool synth_sr_corpus = false;
  int synth_frames = -1, synth_train = -1, synth_test = -1;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--task", synth_task, "hand_hygiene or icu");
  synth->add_flag("--sr-corpus", synth_sr_corpus,
                  "emit an unlabeled HR corpus for SR training");
  synth->add_option("--frames", synth_frames, "total frames");
  synth->add_option("--train-frames", synth_train, "exact train frame count");
  synth->add_option("--test-frames", synth_test, "exact test frame count");

  // downsample
  auto* down = app.add_subcommand("downsample", "bicubic-degrade a dataset");
  std::string down_manifest, down_out;
  int down_scale = 16;
  down->add_option("--manifest", down_manifest, "source manifest")->required();
  down->add_option("--scale", down_scale, "integer downsampling factor")
      ->required();
  down->add_option("--out", down_out, "output directory")->required();

  // train-sr
  auto* tsr = app.add_subcommand("train-sr", "train a DCSCN model");
  std::string tsr_manifest, tsr_out, tsr_loss;
  int tsr_scale = -1, tsr_steps = -1;
  tsr->add_option("--manifest", tsr_manifest, "training corpus manifest")
      ->required();
  tsr->add_option("--out", tsr_out, "checkpoint path")->required();
  tsr->add_option("--scale", tsr_scale, "4 or 16");
  tsr->add_option("--steps", tsr_steps, "training steps");
  tsr->add_option("--loss-csv", tsr_loss, "per-step loss curve CSV");

  // enhance
  auto* enh = app.add_subcommand("enhance", "super-resolve a dataset");
  std::string enh_manifest, enh_ckpt, enh_out;
  enh->add_option("--manifest", enh_manifest, "low-res manifest")->required();
  enh->add_option("--checkpoint", enh_ckpt, "DCSCN checkpoint")->required();
  enh->add_option("--out", enh_out, "output directory")->required();

  // train-cls
  auto* tcl = app.add_subcommand("train-cls", "train a classifier cell");
  std::string tcl_manifest, tcl_sr, tcl_out, tcl_loss;
  int tcl_dim = 224, tcl_steps = -1;
  tcl->add_option("--manifest", tcl_manifest, "dataset manifest")->required();
  tcl->add_option("--dim", tcl_dim, "evaluation dimension (224/56/14)")
      ->required();
  tcl->add_option("--sr", tcl_sr, "optional DCSCN checkpoint for enhancement");
  tcl->add_option("--out", tcl_out, "classifier checkpoint path")->required();
  tcl->add_option("--steps", tcl_steps, "training steps");
  tcl->add_option("--loss-csv", tcl_loss, "per-step loss curve CSV");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a classifier cell");
  std::string ev_manifest, ev_ckpt, ev_sr, ev_out;
  int ev_dim = 224;
  ev->add_option("--manifest", ev_manifest, "dataset manifest")->required();
  ev->add_option("--checkpoint", ev_ckpt, "classifier checkpoint")->required();
  ev->add_option("--dim", ev_dim, "evaluation dimension")->required();
  ev->add_option("--sr", ev_sr, "optional DCSCN checkpoint");
  ev->add_option("--out", ev_out, "report JSON path")->required();

  // report
  auto* rep = app.add_subcommand("report", "aggregate reports into grids");
  std::string rep_dir, rep_prefix;
  rep->add_option("--reports", rep_dir, "directory of report JSONs")
      ->required();
  rep->add_option("--out-prefix", rep_prefix, "output prefix (.csv/.txt)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = global.load(seed_opt->count() > 0,
                                     policy_opt->count() > 0);
    if (synth->parsed()) {
      if (!synth_task.empty()) cfg.task = synth_task;
      if (synth_sr_corpus) cfg.synth.sr_corpus = true;
      if (synth_frames >= 0) cfg.synth.total_frames = synth_frames;
      if (synth_train >= 0) cfg.synth.train_frames = synth_train;
      if (synth_test >= 0) cfg.synth.test_frames = synth_test;
      auto path = cmd_synth(cfg, synth_out);
      std::printf("%s\n", path.string().c_str());
    } else if (down->parsed()) {
      auto path = cmd_downsample(down_manifest, down_scale, cfg.policy, down_out);
      std::printf("%s\n", path.string().c_str());
    } else if (tsr->parsed()) {
      if (tsr_scale > 0) {
        cfg.sr_config.scale = tsr_scale;
        if (tsr_scale == 16 && cfg.sr_config.patch_size % 16 != 0)
          cfg.sr_config.patch_size = 64;
      }
      if (tsr_steps >= 0) cfg.sr_hyper.steps = tsr_steps;
      auto result = cmd_train_sr(cfg, tsr_manifest, tsr_out, tsr_loss);
      std::printf("%s\n", result.checkpoint.string().c_str());
    } else if (enh->parsed()) {
      auto path = cmd_enhance(enh_manifest, enh_ckpt, cfg.policy, enh_out);
      std::printf("%s\n", path.string().c_str());
    } else if (tcl->parsed()) {
      if (tcl_steps >= 0) cfg.cls_hyper.steps = tcl_steps;
      auto result = cmd_train_cls(cfg, tcl_manifest, tcl_dim, tcl_sr, tcl_out,
                                  tcl_loss);
      std::printf("%s\n", result.checkpoint.string().c_str());
    } else if (ev->parsed()) {
      auto path = cmd_eval(ev_manifest, ev_ckpt, ev_dim, ev_sr, ev_out);
      std::printf("%s\n", path.string().c_str());
    } else if (rep->parsed()) {
      cmd_report(rep_dir, rep_prefix);
      std::printf("%s.csv\n%s.txt\n", rep_prefix.c_str(), rep_prefix.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: unexpected: %s\n", e.what());
    return 1;
  }
  return 0;
}

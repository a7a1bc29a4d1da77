#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowres/cls_train.hpp"
#include "lowres/sr_train.hpp"
#include "lowres/synth_dataset.hpp"

namespace lowres {

namespace detail {

inline void check_keys(const nlohmann::json& j,
                       const std::set<std::string>& allowed,
                       const std::string& context) {
  require(j.is_object(), "bad-config", context + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    require(allowed.count(key) != 0, "bad-config",
            "unknown key '" + key + "' in " + context);
}

}  // namespace detail

// Run configuration: JSON with strict unknown-key rejection. Every stage
// derives an independent substream from (master seed, stage name), so stages
// are reproducible in isolation.
struct PipelineConfig {
  std::string task = "hand_hygiene";
  uint64_t seed = 42;
  Privacy policy = Privacy::None;

  GenSpec synth;  // out_dir filled per command
  SrConfig sr_config;
  SrTrainHyper sr_hyper{5e-4, 16, 2000, 0};
  int sr_pairs_per_frame = 8;
  ClsConfig cls_config;
  ClsTrainHyper cls_hyper{1e-3, 16, 300, 0, true, {}};

  int num_classes() const { return task == "icu" ? kIcuClasses : 2; }
  Task task_enum() const {
    require(task == "hand_hygiene" || task == "icu", "bad-config",
            "task must be hand_hygiene or icu, got '" + task + "'");
    return task == "icu" ? Task::ICU : Task::HandHygiene;
  }
};

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
  detail::check_keys(j, {"task", "seed", "privacy_policy", "synth", "sr", "cls"},
                     "config");
  PipelineConfig cfg;
  if (j.contains("task")) cfg.task = j["task"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("privacy_policy"))
    cfg.policy = privacy_from_string(j["privacy_policy"].get<std::string>());
  cfg.task_enum();

  if (j.contains("synth")) {
    const auto& s = j["synth"];
    detail::check_keys(
        s,
        {"total_frames", "train_frames", "test_frames", "class_mix",
         "split_fraction", "frames_per_instance", "view", "noise_sigma_mm",
         "dropout_prob", "sr_corpus"},
        "config.synth");
    auto& g = cfg.synth;
    if (s.contains("total_frames")) g.total_frames = s["total_frames"].get<int>();
    if (s.contains("train_frames")) g.train_frames = s["train_frames"].get<int>();
    if (s.contains("test_frames")) g.test_frames = s["test_frames"].get<int>();
    if (s.contains("class_mix")) {
      if (s["class_mix"].is_string()) {
        const auto name = s["class_mix"].get<std::string>();
        if (name == "clinical_imbalance")
          g.class_mix = clinical_imbalance_mix();
        else
          require(name == "uniform", "bad-config",
                  "class_mix must be uniform, clinical_imbalance or a weight array");
      } else {
        g.class_mix = s["class_mix"].get<std::vector<double>>();
      }
    }
    if (s.contains("split_fraction"))
      g.split_fraction = s["split_fraction"].get<double>();
    if (s.contains("frames_per_instance"))
      g.frames_per_instance = s["frames_per_instance"].get<int>();
    if (s.contains("view")) {
      const auto v = s["view"].get<std::string>();
      require(v == "side" || v == "top_down", "bad-config",
              "view must be side or top_down");
      g.view = v == "side" ? View::Side : View::TopDown;
    }
    if (s.contains("noise_sigma_mm"))
      g.noise_sigma_mm = s["noise_sigma_mm"].get<double>();
    if (s.contains("dropout_prob"))
      g.dropout_prob = s["dropout_prob"].get<double>();
    if (s.contains("sr_corpus")) g.sr_corpus = s["sr_corpus"].get<bool>();
  }

  if (j.contains("sr")) {
    const auto& s = j["sr"];
    detail::check_keys(s,
                       {"scale", "steps", "batch", "learning_rate",
                        "patch_size", "pairs_per_frame"},
                       "config.sr");
    if (s.contains("scale")) cfg.sr_config.scale = s["scale"].get<int>();
    if (s.contains("patch_size"))
      cfg.sr_config.patch_size = s["patch_size"].get<int>();
    if (s.contains("steps")) cfg.sr_hyper.steps = s["steps"].get<int>();
    if (s.contains("batch")) cfg.sr_hyper.batch = s["batch"].get<int>();
    if (s.contains("learning_rate"))
      cfg.sr_hyper.learning_rate = s["learning_rate"].get<double>();
    if (s.contains("pairs_per_frame"))
      cfg.sr_pairs_per_frame = s["pairs_per_frame"].get<int>();
  }

  if (j.contains("cls")) {
    const auto& s = j["cls"];
    detail::check_keys(s,
                       {"steps", "batch", "learning_rate", "blocks", "groups",
                        "input_side", "augment"},
                       "config.cls");
    if (s.contains("blocks"))
      cfg.cls_config.blocks = s["blocks"].get<std::vector<int>>();
    if (s.contains("groups")) cfg.cls_config.groups = s["groups"].get<int>();
    if (s.contains("input_side"))
      cfg.cls_config.input_side = s["input_side"].get<int>();
    if (s.contains("steps")) cfg.cls_hyper.steps = s["steps"].get<int>();
    if (s.contains("batch")) cfg.cls_hyper.batch = s["batch"].get<int>();
    if (s.contains("learning_rate"))
      cfg.cls_hyper.learning_rate = s["learning_rate"].get<double>();
    if (s.contains("augment")) cfg.cls_hyper.augment = s["augment"].get<bool>();
  }
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(bool(f), "io-error", "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    fail("bad-config", path.string() + ": " + e.what());
  }
  return parse_pipeline_config(j);
}

// ---- commands ----

inline std::filesystem::path cmd_synth(const PipelineConfig& cfg,
                                       const std::filesystem::path& out_dir) {
  GenSpec spec = cfg.synth;
  spec.task = cfg.task_enum();
  spec.out_dir = out_dir;
  spec.seed = derive_seed(cfg.seed, "synth");
  auto manifest = gen_dataset(spec);
  return manifest.file;
}

// Writes downsampled copies of every frame; refuses to write anything if the
// target resolution violates the policy. scale 1 copies frames byte for byte.
inline std::filesystem::path cmd_downsample(
    const std::filesystem::path& manifest_path, int scale, Privacy policy,
    const std::filesystem::path& out_dir) {
  require(scale >= 1, "bad-config", "downsample scale must be >= 1");
  auto parent = load_manifest(manifest_path);

  // gate first: no file is written when any target frame would violate
  for (const auto& e : parent.entries) {
    const auto hdr = read_frame_header(parent.resolve(e));
    const int ow = std::max(1, hdr.width / scale);
    const int oh = std::max(1, hdr.height / scale);
    DepthFrame probe;
    probe.width = ow;
    probe.height = oh;
    probe.privacy = privacy_level(ow, oh);
    privacy_gate(probe, policy);
  }

  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "frames");
  DatasetManifest derived = parent;
  derived.origin = "derived";
  derived.params = {{"stage", "downsample"},
                    {"scale", scale},
                    {"policy", to_string(policy)},
                    {"parent_hash", file_hash_hex(manifest_path)}};
  derived.spec_hash = hex64(fnv1a64(derived.params.dump()));

  for (auto& e : derived.entries) {
    const auto src = parent.resolve(e);
    const auto dst = out_dir / e.path;
    if (scale == 1) {
      fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
      continue;
    }
    auto frame = read_frame(src, parent.range, e.provenance);
    auto norm = normalize_depth(frame);
    auto small = resample_bicubic(norm, std::max(1, frame.width / scale),
                                  std::max(1, frame.height / scale));
    privacy_gate(small, policy);
    write_frame(dst, denormalize_depth(small));
  }
  const auto mpath = out_dir / "manifest.jsonl";
  save_manifest(derived, mpath);
  return mpath;
}

struct SrTrainResult {
  std::filesystem::path checkpoint;
  std::vector<double> curve;
};

inline SrTrainResult cmd_train_sr(const PipelineConfig& cfg,
                                  const std::filesystem::path& manifest_path,
                                  const std::filesystem::path& checkpoint_out,
                                  const std::filesystem::path& loss_csv = {}) {
  auto manifest = load_manifest(manifest_path);
  check_provenance(manifest);
  SrConfig model_cfg = cfg.sr_config;
  model_cfg.validate();
  auto pairs = extract_patch_pairs(manifest, model_cfg, cfg.sr_pairs_per_frame,
                                   derive_seed(cfg.seed, "sr-patches"));
  auto model = build_dcscn(model_cfg, derive_seed(cfg.seed, "sr-init",
                                                  uint64_t(model_cfg.scale)));
  SrTrainHyper hyper = cfg.sr_hyper;
  hyper.seed = derive_seed(cfg.seed, "sr-train", uint64_t(model_cfg.scale));
  auto curve = train_sr(model, pairs, hyper);
  sr_save_checkpoint(checkpoint_out, model);
  if (!loss_csv.empty()) write_loss_csv(loss_csv, curve);
  return {checkpoint_out, std::move(curve)};
}

// Enhances every frame with a trained SR model; output frames are gated
// before anything is written.
inline std::filesystem::path cmd_enhance(
    const std::filesystem::path& manifest_path,
    const std::filesystem::path& sr_checkpoint, Privacy policy,
    const std::filesystem::path& out_dir) {
  auto parent = load_manifest(manifest_path);
  auto model = sr_load_checkpoint(sr_checkpoint);

  for (const auto& e : parent.entries) {
    const auto hdr = read_frame_header(parent.resolve(e));
    DepthFrame probe;
    probe.width = hdr.width * model.config.scale;
    probe.height = hdr.height * model.config.scale;
    probe.privacy = privacy_level(probe.width, probe.height);
    privacy_gate(probe, policy);
  }

  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "frames");
  DatasetManifest derived = parent;
  derived.origin = "derived";
  derived.params = {{"stage", "enhance"},
                    {"scale", model.config.scale},
                    {"policy", to_string(policy)},
                    {"parent_hash", file_hash_hex(manifest_path)},
                    {"checkpoint_hash", file_hash_hex(sr_checkpoint)}};
  derived.spec_hash = hex64(fnv1a64(derived.params.dump()));

  for (auto& e : derived.entries) {
    auto frame = read_frame(parent.resolve(e), parent.range, e.provenance);
    auto enhanced = sr_forward(model, normalize_depth(frame));
    privacy_gate(enhanced, policy);
    write_frame(out_dir / e.path, denormalize_depth(enhanced));
  }
  const auto mpath = out_dir / "manifest.jsonl";
  save_manifest(derived, mpath);
  return mpath;
}

struct ClsTrainResult {
  std::filesystem::path checkpoint;
  std::vector<double> curve;
};

inline ClsTrainResult cmd_train_cls(
    const PipelineConfig& cfg, const std::filesystem::path& manifest_path,
    int dim, const std::filesystem::path& sr_checkpoint,
    const std::filesystem::path& checkpoint_out,
    const std::filesystem::path& loss_csv = {}) {
  auto manifest = load_manifest(manifest_path);
  ClsConfig model_cfg = cfg.cls_config;
  model_cfg.num_classes = cfg.num_classes();
  require(manifest.task == cfg.task, "bad-config",
          "manifest task '" + manifest.task + "' does not match config task '" +
              cfg.task + "'");
  SrModel sr;
  Preproc pre{dim, nullptr};
  if (!sr_checkpoint.empty()) {
    sr = sr_load_checkpoint(sr_checkpoint);
    pre.sr = &sr;
  }
  auto model = build_classifier(
      model_cfg, derive_seed(cfg.seed, "cls-init",
                             uint64_t(dim) << 1 | (pre.sr ? 1 : 0)));
  ClsTrainHyper hyper = cfg.cls_hyper;
  hyper.seed = derive_seed(cfg.seed, "cls-train",
                           uint64_t(dim) << 1 | (pre.sr ? 1 : 0));
  auto curve = train_cls(model, manifest, pre, hyper);
  cls_save_checkpoint(checkpoint_out, model);
  if (!loss_csv.empty()) write_loss_csv(loss_csv, curve);
  return {checkpoint_out, std::move(curve)};
}

inline std::filesystem::path cmd_eval(
    const std::filesystem::path& manifest_path,
    const std::filesystem::path& cls_checkpoint, int dim,
    const std::filesystem::path& sr_checkpoint,
    const std::filesystem::path& report_out) {
  auto manifest = load_manifest(manifest_path);
  auto model = cls_load_checkpoint(cls_checkpoint);
  SrModel sr;
  Preproc pre{dim, nullptr};
  if (!sr_checkpoint.empty()) {
    sr = sr_load_checkpoint(sr_checkpoint);
    pre.sr = &sr;
  }
  auto report = evaluate(model, manifest, pre);
  if (report_out.has_parent_path())
    std::filesystem::create_directories(report_out.parent_path());
  std::ofstream f(report_out, std::ios::binary);
  require(bool(f), "io-error", "cannot open " + report_out.string());
  f << report.to_json().dump(2) << "\n";
  return report_out;
}

// ---- report grids ----

// Rows ordered 224/no, 56/no, 56/yes, 14/no, 14/yes (dim descending, then
// unenhanced before enhanced); any other dims sort into the same scheme.
inline std::vector<EvalReport> collect_reports(
    const std::filesystem::path& reports_dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(reports_dir), "io-error",
          "reports dir " + reports_dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(reports_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no-reports",
          "no .json reports under " + reports_dir.string());

  std::vector<EvalReport> reports;
  for (const auto& p : files) {
    std::ifstream f(p);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const std::exception& e) {
      fail("bad-report", p.string() + ": " + e.what());
    }
    reports.push_back(EvalReport::from_json(j));
  }
  for (const auto& r : reports)
    require(r.task == reports.front().task, "mixed-tasks",
            "reports mix tasks '" + reports.front().task + "' and '" + r.task +
                "'");
  std::stable_sort(reports.begin(), reports.end(),
                   [](const EvalReport& a, const EvalReport& b) {
                     if (a.dim != b.dim) return a.dim > b.dim;
                     return int(a.dcscn) < int(b.dcscn);
                   });
  return reports;
}

inline std::string format_report_csv(const std::vector<EvalReport>& reports) {
  const int k = reports.front().num_classes;
  std::string out = "dim,dcscn,test_acc";
  for (int c = 0; c < k; ++c) out += ",auc_" + std::to_string(c);
  out += "\n";
  for (const auto& r : reports) out += r.csv_row() + "\n";
  return out;
}

inline std::string format_report_grid(const std::vector<EvalReport>& reports) {
  const int k = reports.front().num_classes;
  const bool binary = k == 2;
  char buf[64];
  std::string out;
  out += "task: " + reports.front().task + "\n";
  out += "original_dim  dcscn  test_acc ";
  if (binary) {
    out += "     auc";
  } else {
    for (int c = 0; c < k; ++c) {
      std::snprintf(buf, sizeof buf, "  auc_%d", c);
      out += buf;
    }
  }
  out += "\n";
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%4dx%-8d %-6s", r.dim, r.dim,
                  r.dcscn ? "yes" : "no");
    out += buf;
    std::snprintf(buf, sizeof buf, "%7.2f%% ", 100.0 * r.test_acc);
    out += buf;
    if (binary) {
      // one-vs-rest AUC of the positive class (its complement is identical)
      if (r.auc.size() > 1 && r.auc[1])
        std::snprintf(buf, sizeof buf, "%8.4f", *r.auc[1]);
      else
        std::snprintf(buf, sizeof buf, "%8s", "undef");
      out += buf;
    } else {
      for (const auto& a : r.auc) {
        if (a)
          std::snprintf(buf, sizeof buf, " %6.4f", *a);
        else
          std::snprintf(buf, sizeof buf, " %6s", "undef");
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

inline void cmd_report(const std::filesystem::path& reports_dir,
                       const std::filesystem::path& out_prefix) {
  auto reports = collect_reports(reports_dir);
  {
    std::ofstream f(out_prefix.string() + ".csv", std::ios::binary);
    require(bool(f), "io-error", "cannot write report CSV");
    f << format_report_csv(reports);
  }
  {
    std::ofstream f(out_prefix.string() + ".txt", std::ios::binary);
    require(bool(f), "io-error", "cannot write report grid");
    f << format_report_grid(reports);
  }
}

// ---- privacy audit ----

struct PrivacyViolation {
  std::filesystem::path path;
  int width = 0, height = 0;
};

// Scans every persisted frame under root. Frames listed by a capture-sim
// manifest are the simulated pre-capture source (real high-res frames would
// never exist on disk) and are exempt; everything else must meet the policy.
inline std::vector<PrivacyViolation> audit_privacy(
    const std::filesystem::path& root, Privacy policy) {
  namespace fs = std::filesystem;
  std::set<std::string> exempt;
  std::vector<fs::path> frame_files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".jsonl") {
      auto m = load_manifest(entry.path(), /*check_frames=*/false);
      if (m.origin == "capture-sim")
        for (const auto& e : m.entries)
          exempt.insert(fs::weakly_canonical(m.resolve(e)).string());
    } else if (ext == ".pgm" || ext == ".png") {
      frame_files.push_back(entry.path());
    }
  }
  std::sort(frame_files.begin(), frame_files.end());
  std::vector<PrivacyViolation> violations;
  for (const auto& p : frame_files) {
    if (exempt.count(fs::weakly_canonical(p).string())) continue;
    const auto hdr = read_frame_header(p);
    if (!meets_policy(privacy_level(hdr.width, hdr.height), policy))
      violations.push_back({p, hdr.width, hdr.height});
  }
  return violations;
}

}  // namespace lowres

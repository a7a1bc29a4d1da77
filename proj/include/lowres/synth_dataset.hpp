#pragma once

#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "lowres/synth.hpp"

namespace lowres {

// Dataset generation: scene instances (one actor setup each) emit
// frames_per_instance lightly jittered frames. Splits are assigned per
// instance, never per frame, so no instance leaks across the train/test
// boundary.

struct GenSpec {
  Task task = Task::HandHygiene;
  bool sr_corpus = false;      // unlabeled HR corpus for SR training
  int total_frames = 0;        // used with split_fraction
  int train_frames = -1;       // explicit per-split counts override
  int test_frames = -1;
  std::vector<double> class_mix;  // empty -> uniform
  double split_fraction = 0.9;
  int frames_per_instance = 4;
  View view = View::Side;
  double noise_sigma_mm = 15.0;
  double dropout_prob = 0.004;  // sensor no-return speckle
  std::filesystem::path out_dir;
  uint64_t seed = 0;

  int num_classes() const {
    if (sr_corpus) return 1;
    return task == Task::HandHygiene ? 2 : kIcuClasses;
  }
  bool explicit_counts() const { return train_frames >= 0 && test_frames >= 0; }
};

inline std::vector<double> clinical_imbalance_mix() {
  return {1.0 - kClinicalPositiveRate, kClinicalPositiveRate};
}

// round(fraction * n) train instances, remainder test
inline std::pair<int, int> instance_split_counts(int n_instances,
                                                 double fraction) {
  require(fraction > 0.0 && fraction < 1.0, "bad-genspec",
          "split fraction must be in (0,1)");
  const int train = int(std::lround(fraction * n_instances));
  return {train, n_instances - train};
}

namespace detail {

// exact largest-remainder allocation of n over weights
inline std::vector<int> allocate_counts(int n, const std::vector<double>& mix) {
  const double total = std::accumulate(mix.begin(), mix.end(), 0.0);
  require(total > 0.0, "bad-genspec", "class mixture must have positive mass");
  std::vector<int> counts(mix.size());
  std::vector<std::pair<double, size_t>> fracs;
  int used = 0;
  for (size_t i = 0; i < mix.size(); ++i) {
    const double want = double(n) * mix[i] / total;
    counts[i] = int(std::floor(want));
    used += counts[i];
    fracs.emplace_back(want - std::floor(want), i);
  }
  std::sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; i < n - used; ++i) counts[fracs[size_t(i)].second] += 1;
  return counts;
}

struct InstancePlan {
  int label = 0;
  int frames = 0;
  std::string split;
};

inline std::vector<InstancePlan> plan_instances(const GenSpec& spec) {
  const int k = spec.num_classes();
  std::vector<double> mix = spec.class_mix;
  if (mix.empty()) mix.assign(size_t(k), 1.0);
  require(int(mix.size()) == k, "bad-genspec",
          "class_mix has " + std::to_string(mix.size()) + " weights for " +
              std::to_string(k) + " classes");
  const int fpi = spec.frames_per_instance;
  require(fpi >= 1, "bad-genspec", "frames_per_instance must be >= 1");

  std::vector<InstancePlan> plan;
  auto emit_class_split = [&](int label, int frames, const std::string& split) {
    int left = frames;
    while (left > 0) {
      const int take = std::min(left, fpi);
      plan.push_back({label, take, split});
      left -= take;
    }
  };

  if (spec.explicit_counts()) {
    for (const auto& [split, n] :
         {std::pair{std::string("train"), spec.train_frames},
          std::pair{std::string("test"), spec.test_frames}}) {
      const auto counts = allocate_counts(n, mix);
      for (int c = 0; c < k; ++c) emit_class_split(c, counts[c], split);
    }
    return plan;
  }

  require(spec.total_frames > 0, "bad-genspec", "total_frames must be > 0");
  const auto counts = allocate_counts(spec.total_frames, mix);
  // instances per class, then a global round(fraction * total) train quota
  // distributed per class by largest remainder
  std::vector<int> inst_per_class(static_cast<size_t>(k), 0);
  int total_inst = 0;
  for (int c = 0; c < k; ++c) {
    inst_per_class[c] = (counts[c] + fpi - 1) / fpi;
    total_inst += inst_per_class[c];
  }
  const auto [train_inst, test_inst] =
      instance_split_counts(total_inst, spec.split_fraction);
  (void)test_inst;
  std::vector<double> inst_weights(inst_per_class.begin(), inst_per_class.end());
  const auto train_per_class = allocate_counts(train_inst, inst_weights);

  for (int c = 0; c < k; ++c) {
    int left = counts[c];
    for (int i = 0; i < inst_per_class[c]; ++i) {
      const int take = std::min(left, fpi);
      plan.push_back(
          {c, take, i < train_per_class[c] ? "train" : "test"});
      left -= take;
    }
  }
  return plan;
}

inline nlohmann::json genspec_json(const GenSpec& spec) {
  nlohmann::json j;
  j["task"] = spec.sr_corpus ? "sr_corpus" : to_string(spec.task);
  j["total_frames"] = spec.total_frames;
  j["train_frames"] = spec.train_frames;
  j["test_frames"] = spec.test_frames;
  j["class_mix"] = spec.class_mix;
  j["split_fraction"] = spec.split_fraction;
  j["frames_per_instance"] = spec.frames_per_instance;
  j["view"] = spec.view == View::Side ? "side" : "top_down";
  j["noise_sigma_mm"] = spec.noise_sigma_mm;
  j["dropout_prob"] = spec.dropout_prob;
  j["seed"] = spec.seed;
  return j;
}

}  // namespace detail

// Renders the whole dataset and writes frames + manifest under spec.out_dir.
// A pure function of GenSpec: same spec, same bytes.
inline DatasetManifest gen_dataset(const GenSpec& spec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.out_dir / "frames", ec);
  require(!ec && fs::is_directory(spec.out_dir / "frames"), "io-error",
          "cannot create output dir " + (spec.out_dir / "frames").string());

  const auto plan = detail::plan_instances(spec);
  const std::string task_name =
      spec.sr_corpus ? "sr_corpus" : to_string(spec.task);

  DatasetManifest m;
  m.task = task_name;
  m.provenance = Provenance::Synthetic;
  m.origin = "capture-sim";
  m.seed = spec.seed;
  m.params = detail::genspec_json(spec);
  m.spec_hash = hex64(fnv1a64(m.params.dump()));
  m.range = {0.8, 4.0};

  int frame_idx = 0;
  for (size_t inst = 0; inst < plan.size(); ++inst) {
    const auto& p = plan[inst];
    Rng inst_rng(derive_seed(spec.seed, "instance", inst));

    SceneSpec base;
    base.view = spec.view;
    base.noise_sigma_mm = spec.noise_sigma_mm;
    base.dropout_prob = spec.dropout_prob;
    if (spec.sr_corpus) {
      // mixed rooms and poses for SR training variety
      base.task = inst_rng.bernoulli(0.5) ? Task::HandHygiene : Task::ICU;
      const int k = base.task == Task::HandHygiene ? 2 : kIcuClasses;
      base.label = int(inst_rng.index(size_t(k)));
    } else {
      base.task = spec.task;
      base.label = p.label;
    }
    base.actor = sample_actor(base.task, base.label, inst_rng);

    for (int fi = 0; fi < p.frames; ++fi) {
      Rng frame_rng(derive_seed(spec.seed, "frame-jitter",
                                uint64_t(inst) << 16 | uint64_t(fi)));
      SceneSpec s = base;
      s.actor = jitter_actor(base.actor, frame_rng);
      s.seed = derive_seed(spec.seed, "scene", uint64_t(frame_idx));
      const DepthFrame frame = gen_scene(s);

      char name[64];
      std::snprintf(name, sizeof name, "frames/%s_%06d.pgm", task_name.c_str(),
                    frame_idx);
      write_pgm16(spec.out_dir / name, frame);

      ManifestEntry e;
      e.path = name;
      if (!spec.sr_corpus) e.label = p.label;
      e.split = p.split;
      e.task = task_name;
      e.provenance = Provenance::Synthetic;
      m.entries.push_back(std::move(e));
      ++frame_idx;
    }
  }

  const auto mpath = spec.out_dir / "manifest.jsonl";
  save_manifest(m, mpath);
  m.file = mpath;
  return m;
}

// ---- built-in separability oracles (not the CNN) ----

namespace detail {

inline std::vector<float> frame_vec_at(const DatasetManifest& m,
                                       const ManifestEntry& e, int side) {
  auto f = load_norm_frame(m, e);
  if (f.width != side || f.height != side)
    f = resample_bicubic(f, side, side);
  return f.norm;
}

}  // namespace detail

// Nearest-centroid classifier on raw pixels at the given evaluation side:
// class means from the train split, L2 matching on the test split.
inline double centroid_accuracy(const DatasetManifest& m, int side) {
  std::map<int, std::vector<double>> centroids;
  std::map<int, int> counts;
  for (const auto& e : m.entries) {
    if (e.split != "train" || !e.label) continue;
    const auto v = detail::frame_vec_at(m, e, side);
    auto& c = centroids[*e.label];
    if (c.empty()) c.assign(v.size(), 0.0);
    for (size_t i = 0; i < v.size(); ++i) c[i] += double(v[i]);
    counts[*e.label] += 1;
  }
  require(!centroids.empty(), "bad-manifest",
          "centroid_accuracy: no labeled train entries");
  for (auto& [label, c] : centroids)
    for (auto& x : c) x /= double(counts[label]);

  int correct = 0, total = 0;
  for (const auto& e : m.entries) {
    if (e.split != "test" || !e.label) continue;
    const auto v = detail::frame_vec_at(m, e, side);
    double best = 1e300;
    int best_label = -1;
    for (const auto& [label, c] : centroids) {
      double d2 = 0.0;
      for (size_t i = 0; i < v.size(); ++i) {
        const double d = double(v[i]) - c[i];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        best_label = label;
      }
    }
    correct += best_label == *e.label ? 1 : 0;
    total += 1;
  }
  require(total > 0, "bad-manifest", "centroid_accuracy: empty test split");
  return double(correct) / double(total);
}

struct SilhouetteStats {
  double mean_centroid_dist = 0.0;  // mean pairwise distance between class means
  double mean_within_std = 0.0;     // within-class std along the discriminants
};

// Measures class separation at the given side (e.g. 14 for the 16x privacy
// tier). Within-class spread is measured along each class pair's
// between-centroid direction: that is the axis that decides whether the task
// survives downsampling, and it ignores variance orthogonal to the decision
// (an absent-vs-walking negative varies a lot without getting any closer to
// the positive class).
inline SilhouetteStats silhouette_stats(const DatasetManifest& m, int side) {
  std::map<int, std::vector<std::vector<float>>> by_class;
  for (const auto& e : m.entries) {
    if (!e.label) continue;
    by_class[*e.label].push_back(detail::frame_vec_at(m, e, side));
  }
  require(by_class.size() >= 2, "bad-manifest",
          "silhouette_stats: need at least two classes");

  std::map<int, std::vector<double>> centroids;
  for (const auto& [label, frames] : by_class) {
    std::vector<double> c(frames[0].size(), 0.0);
    for (const auto& f : frames)
      for (size_t i = 0; i < f.size(); ++i) c[i] += double(f[i]);
    for (auto& x : c) x /= double(frames.size());
    centroids[label] = std::move(c);
  }

  SilhouetteStats st;
  int pairs = 0;
  for (auto it = centroids.begin(); it != centroids.end(); ++it)
    for (auto jt = std::next(it); jt != centroids.end(); ++jt) {
      const auto& mu1 = it->second;
      const auto& mu2 = jt->second;
      double d2 = 0.0;
      std::vector<double> dir(mu1.size());
      for (size_t i = 0; i < mu1.size(); ++i) {
        dir[i] = mu1[i] - mu2[i];
        d2 += dir[i] * dir[i];
      }
      const double dist = std::sqrt(d2);
      for (auto& x : dir) x /= dist;

      double var = 0.0;
      size_t n = 0;
      for (int label : {it->first, jt->first}) {
        const auto& mu = centroids[label];
        for (const auto& f : by_class[label]) {
          double proj = 0.0;
          for (size_t i = 0; i < f.size(); ++i)
            proj += (double(f[i]) - mu[i]) * dir[i];
          var += proj * proj;
          ++n;
        }
      }
      st.mean_centroid_dist += dist;
      st.mean_within_std += std::sqrt(var / double(n));
      ++pairs;
    }
  st.mean_centroid_dist /= double(pairs);
  st.mean_within_std /= double(pairs);
  return st;
}

}  // namespace lowres

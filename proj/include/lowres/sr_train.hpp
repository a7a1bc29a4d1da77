#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "lowres/adam.hpp"
#include "lowres/dcscn.hpp"
#include "lowres/loss.hpp"
#include "lowres/manifest.hpp"

namespace lowres {

// Provenance disjointness: the SR model must never learn from the private
// deployment data, so the trainer hard-fails on Private manifests.
inline void check_provenance(const DatasetManifest& m) {
  if (m.provenance == Provenance::Private)
    fail("provenance-private",
         "SR training on a private-tagged manifest is forbidden: the "
         "super-resolution model may only learn from data disjoint from the "
         "deployment dataset (manifest " +
             m.file.string() + ")");
}

struct PatchPair {
  std::vector<float> lr, hr;
};

struct PatchPairSet {
  int lr_side = 0, hr_side = 0;
  std::vector<PatchPair> pairs;
  Provenance provenance = Provenance::Synthetic;
  std::string source_hash;
};

// Random HR crops from the manifest's train split; LR is the bicubic
// downsample of the crop, so pairs are definitionally consistent with the
// degradation model. Deterministic per seed.
inline PatchPairSet extract_patch_pairs(const DatasetManifest& m,
                                        const SrConfig& config,
                                        int pairs_per_frame, uint64_t seed) {
  config.validate();
  check_provenance(m);
  require(pairs_per_frame >= 1, "bad-srconfig", "pairs_per_frame must be >= 1");

  PatchPairSet set;
  set.hr_side = config.patch_size;
  set.lr_side = config.patch_size / config.scale;
  set.provenance = m.provenance;
  set.source_hash = m.spec_hash;

  Rng rng(derive_seed(seed, "patch-extract"));
  const auto train = m.split_indices("train");
  require(!train.empty(), "bad-manifest",
          "extract_patch_pairs: manifest has no train split");
  for (size_t idx : train) {
    const auto frame = load_norm_frame(m, m.entries[idx]);
    require(frame.width >= set.hr_side && frame.height >= set.hr_side,
            "bad-dimension", "frame smaller than patch size");
    for (int k = 0; k < pairs_per_frame; ++k) {
      const int x0 = int(rng.index(size_t(frame.width - set.hr_side + 1)));
      const int y0 = int(rng.index(size_t(frame.height - set.hr_side + 1)));
      std::vector<float> hr(size_t(set.hr_side) * set.hr_side);
      for (int y = 0; y < set.hr_side; ++y)
        for (int x = 0; x < set.hr_side; ++x)
          hr[size_t(y) * set.hr_side + x] =
              frame.norm[size_t(y0 + y) * frame.width + (x0 + x)];
      auto hr_frame = make_norm_frame(set.hr_side, set.hr_side, hr);
      // single-shot degradation, same as the capture pipeline's downsample
      auto lr_frame = resample_bicubic(hr_frame, set.lr_side, set.lr_side);
      set.pairs.push_back({std::move(lr_frame.norm), std::move(hr)});
    }
  }
  return set;
}

struct SrTrainHyper {
  double learning_rate = 5e-4;
  int batch = 16;
  int steps = 0;
  uint64_t seed = 0;
};

// Adam on mse(sr(LR), HR) over all stages jointly; returns the per-step loss
// curve. Deterministic per seed. Aborts with the step index if the loss goes
// non-finite.
inline std::vector<double> train_sr(SrModel& model, const PatchPairSet& pairs,
                                    const SrTrainHyper& hyper) {
  require(pairs.provenance != Provenance::Private, "provenance-private",
          "train_sr: patch set is private-tagged");
  require(!pairs.pairs.empty(), "bad-srconfig", "train_sr: no patch pairs");
  require(hyper.batch >= 1, "bad-srconfig", "train_sr: batch must be >= 1");

  auto params = model.params();
  AdamHyper ah;
  ah.lr = hyper.learning_rate;
  AdamT<float> opt(params, ah);

  // one seeded shuffle, then sequential cycling: deterministic, uniform
  // coverage, and batch == set size degenerates to full-batch training
  std::vector<size_t> order(pairs.pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(hyper.seed, "sr-batches"));
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.index(i)]);

  std::vector<double> curve;
  curve.reserve(size_t(std::max(hyper.steps, 0)));
  const int ls = pairs.lr_side, hs = pairs.hr_side;
  size_t cursor = 0;
  for (int step = 0; step < hyper.steps; ++step) {
    const int b = hyper.batch;
    auto lr_batch = zeros<float>({b, 1, ls, ls});
    auto hr_batch = zeros<float>({b, 1, hs, hs});
    for (int i = 0; i < b; ++i) {
      const auto& p = pairs.pairs[order[cursor]];
      cursor = (cursor + 1) % order.size();
      std::copy(p.lr.begin(), p.lr.end(),
                lr_batch->v.begin() + size_t(i) * p.lr.size());
      std::copy(p.hr.begin(), p.hr.end(),
                hr_batch->v.begin() + size_t(i) * p.hr.size());
    }
    double loss_value = 0.0;
    try {
      Graph g;
      auto out = sr_forward_tensor(g, model, lr_batch);
      auto loss = mse_loss(g, out, hr_batch);
      loss_value = double(loss->v[0]);
      for (auto& p : params) p->zero_grad();
      g.backward(loss);
      opt.step(params);
    } catch (const Error& e) {
      if (e.slug() == "non-finite")
        fail("nan-loss",
             "train_sr: non-finite loss at step " + std::to_string(step));
      throw;
    }
    if (!std::isfinite(loss_value))
      fail("nan-loss", "train_sr: non-finite loss at step " + std::to_string(step));
    curve.push_back(loss_value);
  }
  return curve;
}

inline void write_loss_csv(const std::filesystem::path& path,
                           const std::vector<double>& curve) {
  std::ofstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open " + path.string() + " for write");
  f << "step,loss\n";
  char buf[64];
  for (size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, curve[i]);
    f << buf;
  }
}

// PSNR in dB for range-[0,1] data; identical inputs give +inf.
inline double psnr(const std::vector<float>& a, const std::vector<float>& b) {
  require(a.size() == b.size(), "bad-dimension", "psnr: size mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    mse += d * d;
  }
  mse /= double(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

inline double psnr(const DepthFrame& a, const DepthFrame& b) {
  require(a.is_normalized() && b.is_normalized(), "bad-frame",
          "psnr: frames must be normalized");
  require(a.width == b.width && a.height == b.height, "bad-dimension",
          "psnr: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
              " vs " + std::to_string(b.width) + "x" +
              std::to_string(b.height));
  return psnr(a.norm, b.norm);
}

}  // namespace lowres

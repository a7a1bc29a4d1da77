#pragma once

#include <cmath>
#include <vector>

#include "lowres/adam.hpp"
#include "lowres/augment.hpp"
#include "lowres/batches.hpp"
#include "lowres/bicubic.hpp"
#include "lowres/classifier.hpp"
#include "lowres/dcscn.hpp"
#include "lowres/loss.hpp"
#include "lowres/manifest.hpp"
#include "lowres/metrics.hpp"

namespace lowres {

// The (dimension x enhancement) cell: frames are degraded to `dim`, then
// either DCSCN-enhanced back to 224 or bicubic-resized to 224. The model
// always sees 224x224, which isolates information loss from architecture
// differences.
struct Preproc {
  int dim = 224;
  const SrModel* sr = nullptr;

  void validate(int target_side = kFullResSide) const {
    require(dim >= 1 && dim <= target_side, "bad-preproc",
            "dim must be in [1," + std::to_string(target_side) + "]");
    if (sr != nullptr) {
      require(dim * sr->config.scale == target_side, "bad-preproc",
              "SR scale " + std::to_string(sr->config.scale) +
                  " does not map dim " + std::to_string(dim) + " to " +
                  std::to_string(target_side));
    }
  }
};

inline DepthFrame preprocess_frame(const DepthFrame& norm_frame,
                                   const Preproc& pre,
                                   int target_side = kFullResSide) {
  pre.validate(target_side);
  DepthFrame f = norm_frame;
  if (f.width != pre.dim || f.height != pre.dim)
    f = resample_bicubic(f, pre.dim, pre.dim);
  if (pre.sr != nullptr)
    f = sr_forward(*pre.sr, f);
  else if (f.width != target_side || f.height != target_side)
    f = resample_bicubic(f, target_side, target_side);
  return f;
}

struct ClsTrainHyper {
  double learning_rate = 1e-3;
  int batch = 16;
  int steps = 0;
  uint64_t seed = 0;
  bool augment = true;
  AugmentParams augment_params;
};

// Adam on softmax cross-entropy over balanced, augmented batches.
// Deterministic per seed; aborts with the step index on non-finite loss.
inline std::vector<double> train_cls(ClsModel& model,
                                     const DatasetManifest& manifest,
                                     const Preproc& pre,
                                     const ClsTrainHyper& hyper) {
  pre.validate(model.config.input_side);
  const auto train = manifest.split_indices("train");
  require(!train.empty(), "empty-split",
          "train_cls: manifest has no train split");
  std::vector<int> labels;
  labels.reserve(train.size());
  for (size_t idx : train) {
    require(bool(manifest.entries[idx].label), "bad-manifest",
            "train_cls: unlabeled entry in train split");
    labels.push_back(*manifest.entries[idx].label);
  }

  BalancedBatcher batcher(labels, model.config.num_classes, hyper.batch,
                          derive_seed(hyper.seed, "cls-batches"));
  Rng aug_rng(derive_seed(hyper.seed, "cls-augment"));
  auto params = model.params();
  AdamHyper ah;
  ah.lr = hyper.learning_rate;
  AdamT<float> opt(params, ah);

  const int side = model.config.input_side;
  std::vector<double> curve;
  curve.reserve(size_t(std::max(hyper.steps, 0)));
  for (int step = 0; step < hyper.steps; ++step) {
    const auto picks = batcher.next();
    const int b = int(picks.size());
    auto x = zeros<float>({b, 1, side, side});
    std::vector<int> y(static_cast<size_t>(b), 0);
    for (int i = 0; i < b; ++i) {
      const auto& entry = manifest.entries[train[picks[size_t(i)]]];
      DepthFrame f = load_norm_frame(manifest, entry);
      if (hyper.augment) f = augment(f, aug_rng, hyper.augment_params);
      f = preprocess_frame(f, pre, side);
      std::copy(f.norm.begin(), f.norm.end(),
                x->v.begin() + size_t(i) * f.norm.size());
      y[size_t(i)] = *entry.label;
    }
    double loss_value = 0.0;
    try {
      Graph g;
      auto loss = softmax_cross_entropy(g, cls_forward(g, model, x), y);
      loss_value = double(loss->v[0]);
      for (auto& p : params) p->zero_grad();
      g.backward(loss);
      opt.step(params);
    } catch (const Error& e) {
      if (e.slug() == "non-finite")
        fail("nan-loss",
             "train_cls: non-finite loss at step " + std::to_string(step));
      throw;
    }
    if (!std::isfinite(loss_value))
      fail("nan-loss",
           "train_cls: non-finite loss at step " + std::to_string(step));
    curve.push_back(loss_value);
  }
  return curve;
}

// Builds the report from per-class scores: accuracy by argmax (ties to the
// lowest class index), per-class one-vs-rest AUC, confusion matrix. Classes
// absent from the test split get an undefined AUC, never a silent 0.
inline EvalReport report_from_scores(
    const std::string& task, int dim, bool dcscn,
    const std::vector<std::vector<double>>& scores,  // [class][sample]
    const std::vector<int>& truth) {
  const int k = int(scores.size());
  require(k >= 2, "bad-dimension", "report_from_scores: need >= 2 classes");
  const size_t n = truth.size();
  for (const auto& s : scores)
    require(s.size() == n, "bad-dimension",
            "report_from_scores: score rows must match sample count");
  require(n > 0, "empty-split", "report_from_scores: no samples");

  EvalReport report;
  report.task = task;
  report.dim = dim;
  report.dcscn = dcscn;
  report.num_classes = k;
  report.n_test = int(n);
  report.confusion.assign(size_t(k), std::vector<int>(size_t(k), 0));

  for (size_t i = 0; i < n; ++i) {
    int pred = 0;
    for (int j = 1; j < k; ++j)
      if (scores[size_t(j)][i] > scores[size_t(pred)][i]) pred = j;
    require(truth[i] >= 0 && truth[i] < k, "bad-label",
            "report_from_scores: label " + std::to_string(truth[i]) +
                " out of range");
    report.confusion[size_t(truth[i])][size_t(pred)] += 1;
  }
  int correct = 0;
  for (int c = 0; c < k; ++c) correct += report.confusion[size_t(c)][size_t(c)];
  report.test_acc = double(correct) / double(n);

  for (int c = 0; c < k; ++c) {
    std::vector<int> onevs(n);
    int npos = 0;
    for (size_t i = 0; i < n; ++i) {
      onevs[i] = truth[i] == c ? 1 : 0;
      npos += onevs[i];
    }
    if (npos == 0 || npos == int(n))
      report.auc.emplace_back();  // undefined
    else
      report.auc.emplace_back(auc_binary(scores[size_t(c)], onevs));
  }
  return report;
}

inline EvalReport evaluate(const ClsModel& model,
                           const DatasetManifest& manifest, const Preproc& pre,
                           int eval_batch = 16) {
  pre.validate(model.config.input_side);
  const auto test = manifest.split_indices("test");
  require(!test.empty(), "empty-split", "evaluate: manifest has no test split");
  const int k = model.config.num_classes;
  const int side = model.config.input_side;

  std::vector<std::vector<double>> scores{static_cast<size_t>(k), std::vector<double>{}};  // [class][sample]
  std::vector<int> truth;
  truth.reserve(test.size());

  for (size_t start = 0; start < test.size(); start += size_t(eval_batch)) {
    const size_t end = std::min(test.size(), start + size_t(eval_batch));
    const int b = int(end - start);
    auto x = zeros<float>({b, 1, side, side});
    for (int i = 0; i < b; ++i) {
      const auto& entry = manifest.entries[test[start + size_t(i)]];
      require(bool(entry.label), "bad-manifest",
              "evaluate: unlabeled entry in test split");
      DepthFrame f = preprocess_frame(load_norm_frame(manifest, entry), pre, side);
      std::copy(f.norm.begin(), f.norm.end(),
                x->v.begin() + size_t(i) * f.norm.size());
    }
    Graph g(false);
    auto logits = cls_forward(g, model, x);
    for (int i = 0; i < b; ++i) {
      const float* row = logits->v.data() + size_t(i) * k;
      // stable softmax in double
      double m = double(row[0]);
      for (int j = 1; j < k; ++j) m = std::max(m, double(row[j]));
      double denom = 0.0;
      for (int j = 0; j < k; ++j) denom += std::exp(double(row[j]) - m);
      truth.push_back(*manifest.entries[test[start + size_t(i)]].label);
      for (int j = 0; j < k; ++j)
        scores[size_t(j)].push_back(std::exp(double(row[j]) - m) / denom);
    }
  }
  return report_from_scores(manifest.task, pre.dim, pre.sr != nullptr, scores,
                            truth);
}

}  // namespace lowres

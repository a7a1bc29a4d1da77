#include <catch2/catch.hpp>

#include <cmath>
#include <map>

#include "lowres/cls_train.hpp"
#include "lowres/synth_dataset.hpp"

using namespace lowres;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "lowres-test-cls" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// O(n^2) pairwise brute force: P(pos > neg) + 0.5 P(tie)
double auc_pairwise(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  double wins = 0.0;
  size_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    for (size_t j = 0; j < scores.size(); ++j) {
      if (!labels[i] || labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  return wins / double(pairs);
}

// trapezoidal area under the ROC curve traced over score thresholds
double auc_trapezoid(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  double npos = 0, nneg = 0;
  for (int l : labels) (l ? npos : nneg) += 1;
  double area = 0.0, tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (size_t t = i; t <= j; ++t) (labels[order[t]] ? tp : fp) += 1;
    area += (fp - prev_fp) / nneg * ((tp + prev_tp) / (2.0 * npos));
    prev_tp = tp;
    prev_fp = fp;
    i = j + 1;
  }
  return area;
}

}  // namespace

TEST_CASE("auc_binary frozen examples", "[metrics]") {
  CHECK(auc_binary({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(auc_binary({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  CHECK(auc_binary({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
  CHECK_THROWS_AS(auc_binary({0.1, 0.2}, {1, 1}), Error);
  CHECK_THROWS_AS(auc_binary({0.1, 0.2}, {0, 0}), Error);
}

TEST_CASE("auc_binary equals pairwise brute force and trapezoid, with ties",
          "[metrics]") {
  Rng rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + int(rng.index(199));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    // coarse quantization forces plenty of ties
    const int levels = 1 + int(rng.index(12));
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      scores[size_t(i)] = double(rng.index(size_t(levels))) / levels;
      labels[size_t(i)] = rng.bernoulli(0.4) ? 1 : 0;
      (labels[size_t(i)] ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[size_t(n - 1)] = 0;

    const double rank = auc_binary(scores, labels);
    CHECK(rank == auc_pairwise(scores, labels));
    CHECK(std::fabs(rank - auc_trapezoid(scores, labels)) < 1e-12);

    // strictly increasing transform leaves the rank statistic unchanged
    auto transformed = scores;
    for (auto& s : transformed) s = std::exp(2.5 * s) + 7.0;
    CHECK(auc_binary(transformed, labels) == rank);
  }
}

TEST_CASE("balanced batches: exact per-class quotas", "[batches]") {
  // 100 positives, 900 negatives, batch 32 -> 16/16 every batch
  std::vector<int> labels(1000, 0);
  for (int i = 0; i < 100; ++i) labels[size_t(i)] = 1;
  BalancedBatcher b(labels, 2, 32, 5);
  for (int step = 0; step < 20; ++step) {
    auto picks = b.next();
    REQUIRE(picks.size() == 32);
    int pos = 0;
    for (size_t idx : picks) pos += labels[idx];
    CHECK(pos == 16);
  }
}

TEST_CASE("balanced batches: 5 classes, batch 20 -> 4 each", "[batches]") {
  std::vector<int> labels;
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 10 + c * 30; ++i) labels.push_back(c);
  BalancedBatcher b(labels, 5, 20, 6);
  for (int step = 0; step < 10; ++step) {
    auto picks = b.next();
    std::map<int, int> counts;
    for (size_t idx : picks) counts[labels[idx]] += 1;
    for (int c = 0; c < 5; ++c) CHECK(counts[c] == 4);
  }
}

TEST_CASE("balanced batches at the clinical imbalance; remainder round-robin",
          "[batches]") {
  // 11994 positive of 113379 total, batch 30 with remainder 0; batch 7 with
  // remainder 1 rotates the extra slot
  std::vector<int> labels(113379, 0);
  for (int i = 0; i < 11994; ++i) labels[size_t(i)] = 1;
  BalancedBatcher b(labels, 2, 30, 7);
  auto picks = b.next();
  int pos = 0;
  for (size_t idx : picks) pos += labels[idx];
  CHECK(pos == 15);

  BalancedBatcher b7(labels, 2, 7, 8);
  std::vector<int> pos_counts;
  std::map<int, int> epoch_counts;
  for (int step = 0; step < 2; ++step) {
    auto p = b7.next();
    int np = 0;
    for (size_t idx : p) np += labels[idx];
    pos_counts.push_back(np);
    epoch_counts[0] += int(p.size()) - np;
    epoch_counts[1] += np;
  }
  // 7 = 3 + 3 + 1 extra rotating between the classes
  CHECK(pos_counts[0] + pos_counts[1] == 7);
  CHECK(std::abs(pos_counts[0] - pos_counts[1]) == 1);
  CHECK(std::abs(epoch_counts[0] - epoch_counts[1]) <= 1);
}

TEST_CASE("balanced batches: empty class is an error naming it", "[batches]") {
  std::vector<int> labels(50, 0);
  try {
    BalancedBatcher b(labels, 2, 8, 1);
    FAIL("expected empty-class");
  } catch (const Error& e) {
    CHECK(e.slug() == "empty-class");
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
}

TEST_CASE("augment: identity, involution, invariants", "[augment]") {
  Rng rng(17);
  GenSpec spec;
  spec.task = Task::HandHygiene;
  spec.total_frames = 4;
  spec.frames_per_instance = 1;
  spec.out_dir = fresh_dir("aug");
  spec.seed = 2;
  auto m = gen_dataset(spec);
  auto f = load_norm_frame(m, m.entries[0]);

  AugmentParams off{0.0, 0.0, 0.0};
  auto same = augment(f, rng, off);
  CHECK(same.norm == f.norm);

  AugmentParams fliponly{1.0, 0.0, 0.0};
  auto once = augment(f, rng, fliponly);
  CHECK(once.norm != f.norm);
  auto twice = augment(once, rng, fliponly);
  CHECK(twice.norm == f.norm);

  AugmentParams full;
  for (int i = 0; i < 1000; ++i) {
    auto a = augment(f, rng, full);
    REQUIRE(a.width == f.width);
    REQUIRE(a.height == f.height);
  }
}

TEST_CASE("report_from_scores: perfect, constant, shift-invariant",
          "[metrics]") {
  // perfect one-hot scores
  std::vector<int> truth = {0, 1, 2, 1, 0, 2, 2, 1};
  std::vector<std::vector<double>> perfect(3, std::vector<double>(truth.size(), 0.0));
  for (size_t i = 0; i < truth.size(); ++i) perfect[size_t(truth[i])][i] = 1.0;
  auto r = report_from_scores("icu", 224, false, perfect, truth);
  CHECK(r.test_acc == 1.0);
  for (const auto& a : r.auc) {
    REQUIRE(a.has_value());
    CHECK(*a == 1.0);
  }
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(r.confusion[i][j] == 0);

  // constant scores on a balanced binary set: ties predict class 0,
  // accuracy exactly 0.5, AUC exactly 0.5
  std::vector<int> bal = {0, 1, 0, 1, 0, 1};
  std::vector<std::vector<double>> constant(2, std::vector<double>(bal.size(), 0.5));
  auto rc = report_from_scores("hand_hygiene", 224, false, constant, bal);
  CHECK(rc.test_acc == 0.5);
  CHECK(*rc.auc[0] == 0.5);
  CHECK(*rc.auc[1] == 0.5);

  // adding a constant to all of a sample's scores never changes argmax
  std::vector<std::vector<double>> shifted = perfect;
  for (size_t i = 0; i < truth.size(); ++i)
    for (auto& row : shifted) row[i] += 17.5;
  auto rs = report_from_scores("icu", 224, false, shifted, truth);
  CHECK(rs.test_acc == r.test_acc);
  CHECK(rs.confusion == r.confusion);

  // accuracy recomputed from the confusion matrix matches exactly
  int diag = 0, total = 0;
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) {
      total += r.confusion[i][j];
      if (i == j) diag += r.confusion[i][j];
    }
  CHECK(r.test_acc == double(diag) / double(total));
}

TEST_CASE("report_from_scores: absent class gets undefined AUC, not zero",
          "[metrics]") {
  std::vector<int> truth = {0, 1, 0, 1};  // class 2 absent
  std::vector<std::vector<double>> scores(3, std::vector<double>(4, 0.2));
  scores[0] = {0.9, 0.1, 0.8, 0.2};
  scores[1] = {0.1, 0.9, 0.2, 0.8};
  auto r = report_from_scores("icu", 14, true, scores, truth);
  CHECK(r.auc[0].has_value());
  CHECK(r.auc[1].has_value());
  CHECK_FALSE(r.auc[2].has_value());
  CHECK(r.csv_row().find("undefined") != std::string::npos);
}

TEST_CASE("eval report JSON round-trip", "[metrics]") {
  std::vector<int> truth = {0, 1, 0, 1};
  std::vector<std::vector<double>> scores(2);
  scores[0] = {0.9, 0.1, 0.8, 0.45};
  scores[1] = {0.1, 0.9, 0.2, 0.55};
  auto r = report_from_scores("hand_hygiene", 56, true, scores, truth);
  auto j = r.to_json();
  auto back = EvalReport::from_json(j);
  CHECK(back.task == r.task);
  CHECK(back.dim == r.dim);
  CHECK(back.dcscn == r.dcscn);
  CHECK(back.test_acc == r.test_acc);
  CHECK(back.auc == r.auc);
  CHECK(back.confusion == r.confusion);
}

TEST_CASE("classifier: build determinism, checkpoint round-trip, zero head",
          "[classifier]") {
  ClsConfig cfg;
  cfg.num_classes = 2;
  cfg.input_side = 56;
  auto a = build_classifier(cfg, 3);
  auto b = build_classifier(cfg, 3);
  auto pa = a.named_params(), pb = b.named_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second->v == pb[i].second->v);

  // zero head -> exactly uniform logits -> loss exactly ln k
  Rng rng(4);
  auto x = zeros<float>({2, 1, 56, 56});
  for (auto& v : x->v) v = float(rng.uniform());
  Graph g(false);
  auto logits = cls_forward(g, a, x);
  for (float v : logits->v) CHECK(v == 0.0f);

  auto dir = fresh_dir("ckpt");
  cls_save_checkpoint(dir / "c.pvst", a);
  auto loaded = cls_load_checkpoint(dir / "c.pvst");
  auto pl = loaded.named_params();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pl[i].second->v == pa[i].second->v);
}

TEST_CASE("preprocess_frame covers the dimension x enhancement grid",
          "[clstrain]") {
  Rng rng(5);
  std::vector<float> data(size_t(224) * 224);
  for (auto& v : data) v = float(rng.uniform());
  auto f = make_norm_frame(224, 224, std::move(data));

  Preproc p224{224, nullptr};
  auto a = preprocess_frame(f, p224);
  CHECK(a.width == 224);
  CHECK(a.norm == f.norm);  // untouched

  Preproc p56{56, nullptr};
  auto b = preprocess_frame(f, p56);
  CHECK(b.width == 224);  // bicubic back up

  SrConfig c16;
  c16.scale = 16;
  c16.patch_size = 64;
  auto sr16 = build_dcscn(c16, 1);
  Preproc p14{14, &sr16};
  auto c = preprocess_frame(f, p14);
  CHECK(c.width == 224);
  // zero-init SR == bicubic ladder: degrade to 14, two bicubic 4x hops
  auto manual = resample_bicubic(
      resample_bicubic(resample_bicubic(f, 14, 14), 56, 56), 224, 224);
  CHECK(c.norm == manual.norm);

  Preproc bad{56, &sr16};  // 56*16 != 224
  CHECK_THROWS_AS(preprocess_frame(f, bad), Error);
}

TEST_CASE("train_cls: learns, zero steps identity, deterministic, errors",
          "[clstrain]") {
  GenSpec spec;
  spec.task = Task::HandHygiene;
  spec.total_frames = 80;
  spec.frames_per_instance = 2;
  spec.out_dir = fresh_dir("train");
  spec.seed = 12;
  auto m = gen_dataset(spec);

  ClsConfig cfg;
  cfg.num_classes = 2;
  cfg.input_side = 56;
  ClsTrainHyper hyper;
  hyper.steps = 0;
  auto m0 = build_classifier(cfg, 1);
  const auto before =
      serialize_checkpoint("classifier", cfg.to_json(), m0.named_params());
  Preproc pre{56, nullptr};
  auto curve0 = train_cls(m0, m, pre, hyper);
  CHECK(curve0.empty());
  CHECK(serialize_checkpoint("classifier", cfg.to_json(), m0.named_params()) ==
        before);

  hyper.steps = 80;
  hyper.batch = 8;
  hyper.seed = 3;
  auto m1 = build_classifier(cfg, 1);
  auto curve = train_cls(m1, m, pre, hyper);
  REQUIRE(curve.size() == 80);
  CHECK(curve.front() == Approx(std::log(2.0)).epsilon(1e-5));
  double tail = 0;
  for (int i = 70; i < 80; ++i) tail += curve[size_t(i)];
  tail /= 10;
  CHECK(tail < std::log(2.0) * 0.7);

  auto m2 = build_classifier(cfg, 1);
  auto curve2 = train_cls(m2, m, pre, hyper);
  CHECK(curve == curve2);
  CHECK(serialize_checkpoint("classifier", cfg.to_json(), m1.named_params()) ==
        serialize_checkpoint("classifier", cfg.to_json(), m2.named_params()));

  // empty split
  DatasetManifest empty = m;
  empty.entries.clear();
  CHECK_THROWS_AS(train_cls(m1, empty, pre, hyper), Error);

  // divergence aborts with step index
  auto m3 = build_classifier(cfg, 1);
  m3.stem_b->v[0] = std::numeric_limits<float>::quiet_NaN();
  hyper.steps = 2;
  try {
    train_cls(m3, m, pre, hyper);
    FAIL("expected nan-loss");
  } catch (const Error& e) {
    CHECK(e.slug() == "nan-loss");
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("evaluate: consistency on a trained small model", "[clstrain]") {
  GenSpec spec;
  spec.task = Task::HandHygiene;
  spec.total_frames = 100;
  spec.frames_per_instance = 2;
  spec.out_dir = fresh_dir("eval");
  spec.seed = 13;
  auto m = gen_dataset(spec);

  ClsConfig cfg;
  cfg.num_classes = 2;
  cfg.input_side = 56;
  auto model = build_classifier(cfg, 2);
  ClsTrainHyper hyper;
  hyper.steps = 120;
  hyper.batch = 8;
  hyper.seed = 9;
  Preproc pre{56, nullptr};
  train_cls(model, m, pre, hyper);

  auto r1 = evaluate(model, m, pre);
  auto r2 = evaluate(model, m, pre);
  CHECK(r1.to_json() == r2.to_json());
  CHECK(r1.n_test == int(m.split_indices("test").size()));
  int total = 0, diag = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      total += r1.confusion[size_t(i)][size_t(j)];
      if (i == j) diag += r1.confusion[size_t(i)][size_t(j)];
    }
  CHECK(total == r1.n_test);
  CHECK(r1.test_acc == double(diag) / double(total));
  CHECK(r1.test_acc > 0.8);  // separable by construction
}

TEST_CASE("five-class ICU cell trains and reports per-class AUC",
          "[clstrain][icu]") {
  GenSpec spec;
  spec.task = Task::ICU;
  spec.total_frames = 100;
  spec.frames_per_instance = 2;
  spec.out_dir = fresh_dir("icu");
  spec.seed = 31;
  auto m = gen_dataset(spec);

  ClsConfig cfg;
  cfg.num_classes = kIcuClasses;
  cfg.input_side = 56;
  auto model = build_classifier(cfg, 8);
  ClsTrainHyper hyper;
  hyper.steps = 30;
  hyper.batch = 10;
  hyper.seed = 2;
  Preproc pre{56, nullptr};
  auto curve = train_cls(model, m, pre, hyper);
  CHECK(curve.front() == Approx(std::log(5.0)).epsilon(1e-5));

  auto r = evaluate(model, m, pre);
  REQUIRE(r.num_classes == 5);
  REQUIRE(r.auc.size() == 5);
  CHECK(r.confusion.size() == 5);
  int row_sum = 0;
  for (const auto& row : r.confusion)
    for (int v : row) row_sum += v;
  CHECK(row_sum == r.n_test);
  for (const auto& a : r.auc)
    if (a) CHECK((*a >= 0.0 && *a <= 1.0));
}

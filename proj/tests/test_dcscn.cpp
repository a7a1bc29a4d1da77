#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>
#include <limits>

#include "lowres/dcscn.hpp"
#include "lowres/sr_train.hpp"
#include "lowres/synth_dataset.hpp"
#include "support/gradcheck.hpp"

using namespace lowres;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "lowres-test-sr" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DepthFrame random_frame(int side, Rng& rng) {
  std::vector<float> data(size_t(side) * side);
  for (auto& v : data) v = float(0.05 + 0.9 * rng.uniform());
  return make_norm_frame(side, side, std::move(data));
}

DatasetManifest small_corpus(const std::string& name, int frames,
                             uint64_t seed) {
  GenSpec spec;
  spec.task = Task::HandHygiene;
  spec.sr_corpus = true;
  spec.total_frames = frames;
  spec.frames_per_instance = 1;
  spec.out_dir = fresh_dir(name);
  spec.seed = seed;
  return gen_dataset(spec);
}

}  // namespace

TEST_CASE("zero-init DCSCN reproduces bicubic upsampling exactly", "[dcscn]") {
  Rng rng(100);
  auto model = build_dcscn(SrConfig{}, 5);
  for (int i = 0; i < 10; ++i) {
    const int side = 6 + int(rng.index(20));
    auto lr = random_frame(side, rng);
    auto sr = sr_forward(model, lr);
    auto base = resample_bicubic(lr, side * 4, side * 4);
    REQUIRE(sr.norm.size() == base.norm.size());
    float max_diff = 0.f;
    for (size_t k = 0; k < sr.norm.size(); ++k)
      max_diff = std::max(max_diff, std::fabs(sr.norm[k] - base.norm[k]));
    CHECK(max_diff == 0.0f);
  }
}

TEST_CASE("zero-init cascade equals two clamped bicubic 4x hops", "[dcscn]") {
  Rng rng(101);
  SrConfig cfg;
  cfg.scale = 16;
  cfg.patch_size = 64;
  auto model = build_dcscn(cfg, 5);
  auto lr = random_frame(14, rng);
  auto sr = sr_forward(model, lr);
  CHECK(sr.width == 224);
  CHECK(sr.height == 224);
  auto base = resample_bicubic(resample_bicubic(lr, 56, 56), 224, 224);
  float max_diff = 0.f;
  for (size_t k = 0; k < sr.norm.size(); ++k)
    max_diff = std::max(max_diff, std::fabs(sr.norm[k] - base.norm[k]));
  CHECK(max_diff == 0.0f);
}

TEST_CASE("sr_forward dimension ladder and overflow", "[dcscn]") {
  Rng rng(102);
  auto m4 = build_dcscn(SrConfig{}, 1);
  auto f14 = random_frame(14, rng);
  auto up = sr_forward(m4, f14);
  CHECK(up.width == 56);
  CHECK(up.privacy == Privacy::Weak);
  CHECK(up.derived_from == Privacy::Strong);

  auto f56 = random_frame(56, rng);
  auto up2 = sr_forward(m4, f56);
  CHECK(up2.width == 224);
  CHECK(up2.privacy == Privacy::None);

  CHECK_THROWS_AS(sr_forward(m4, random_frame(57, rng)), Error);

  SrConfig c16;
  c16.scale = 16;
  c16.patch_size = 64;
  auto m16 = build_dcscn(c16, 1);
  CHECK_THROWS_AS(sr_forward(m16, f56), Error);
}

TEST_CASE("build_dcscn is deterministic and param count is config-pure",
          "[dcscn]") {
  auto a = build_dcscn(SrConfig{}, 9);
  auto b = build_dcscn(SrConfig{}, 9);
  auto pa = a.named_params(), pb = b.named_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK(pa[i].second->v == pb[i].second->v);
  }
  CHECK(sr_param_count(SrConfig{}) == sr_param_count(SrConfig{}));
  auto c = build_dcscn(SrConfig{}, 10);
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i)
    if (c.named_params()[i].second->v != pa[i].second->v) any_diff = true;
  CHECK(any_diff);

  SrConfig bad;
  bad.feature_filters = {16, 18, 22, 26, 32};  // increasing
  CHECK_THROWS_AS(build_dcscn(bad, 1), Error);
  SrConfig bad2;
  bad2.scale = 8;
  CHECK_THROWS_AS(build_dcscn(bad2, 1), Error);
}

TEST_CASE("dcscn checkpoint round-trips the model", "[dcscn]") {
  auto dir = fresh_dir("ckpt");
  auto model = build_dcscn(SrConfig{}, 77);
  Rng rng(3);
  // perturb so it is not the all-zero tail
  for (auto& p : model.params())
    for (auto& v : p->v) v += float(rng.normal(0.0, 0.01));
  sr_save_checkpoint(dir / "m.pvst", model);
  auto loaded = sr_load_checkpoint(dir / "m.pvst");
  auto pa = model.named_params(), pb = loaded.named_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second->v == pb[i].second->v);
  CHECK(loaded.config.scale == 4);
}

TEST_CASE("extract_patch_pairs: sides, determinism, degradation consistency",
          "[srtrain]") {
  auto m = small_corpus("patches", 6, 50);
  SrConfig cfg;
  auto set = extract_patch_pairs(m, cfg, 4, 123);
  CHECK(set.lr_side == 8);
  CHECK(set.hr_side == 32);
  CHECK(set.pairs.size() == m.split_indices("train").size() * 4);

  auto set2 = extract_patch_pairs(m, cfg, 4, 123);
  REQUIRE(set2.pairs.size() == set.pairs.size());
  for (size_t i = 0; i < set.pairs.size(); ++i) {
    CHECK(set.pairs[i].lr == set2.pairs[i].lr);
    CHECK(set.pairs[i].hr == set2.pairs[i].hr);
  }

  // LR must equal an independent bicubic downsample of the HR patch
  for (const auto& p : set.pairs) {
    auto hr_frame = make_norm_frame(32, 32, p.hr);
    auto lr = resample_bicubic(hr_frame, 8, 8);
    CHECK(lr.norm == p.lr);
  }
}

TEST_CASE("provenance rule: private manifests are refused", "[srtrain]") {
  auto m = small_corpus("prov", 3, 51);
  CHECK_NOTHROW(check_provenance(m));
  m.provenance = Provenance::Public;
  CHECK_NOTHROW(check_provenance(m));
  m.provenance = Provenance::Private;
  try {
    check_provenance(m);
    FAIL("expected provenance error");
  } catch (const Error& e) {
    CHECK(e.slug() == "provenance-private");
    CHECK(std::string(e.what()).find("disjoint") != std::string::npos);
  }
  SrConfig cfg;
  CHECK_THROWS_AS(extract_patch_pairs(m, cfg, 2, 1), Error);
}

TEST_CASE("train_sr: loss decreases, zero steps is identity, deterministic",
          "[srtrain]") {
  auto corpus = small_corpus("train", 8, 52);
  SrConfig cfg;
  auto pairs = extract_patch_pairs(corpus, cfg, 4, 9);

  SrTrainHyper hyper;
  hyper.steps = 0;
  auto m0 = build_dcscn(cfg, 4);
  const auto before = serialize_checkpoint("dcscn", cfg.to_json(),
                                           m0.named_params());
  auto curve0 = train_sr(m0, pairs, hyper);
  CHECK(curve0.empty());
  CHECK(serialize_checkpoint("dcscn", cfg.to_json(), m0.named_params()) ==
        before);

  hyper.steps = 200;
  hyper.batch = 8;
  hyper.seed = 7;
  auto m1 = build_dcscn(cfg, 4);
  auto curve = train_sr(m1, pairs, hyper);
  REQUIRE(curve.size() == 200);
  CHECK(curve.back() < curve.front());

  auto m2 = build_dcscn(cfg, 4);
  auto curve2 = train_sr(m2, pairs, hyper);
  CHECK(curve == curve2);
  CHECK(serialize_checkpoint("dcscn", cfg.to_json(), m1.named_params()) ==
        serialize_checkpoint("dcscn", cfg.to_json(), m2.named_params()));
}

TEST_CASE("train_sr aborts on divergence with the step index", "[srtrain]") {
  auto corpus = small_corpus("nan", 4, 53);
  SrConfig cfg;
  auto pairs = extract_patch_pairs(corpus, cfg, 2, 9);
  auto model = build_dcscn(cfg, 4);
  // a diverged parameter: NaN propagates into the first conv output
  model.stages[0].feat_b[0]->v[0] = std::numeric_limits<float>::quiet_NaN();
  SrTrainHyper hyper;
  hyper.steps = 3;
  hyper.batch = 4;
  try {
    train_sr(model, pairs, hyper);
    FAIL("expected nan-loss");
  } catch (const Error& e) {
    CHECK(e.slug() == "nan-loss");
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("psnr closed-form values and properties", "[srtrain]") {
  auto a = make_norm_frame(10, 10, std::vector<float>(100, 0.5f));
  CHECK(std::isinf(psnr(a, a)));

  // mse 0.01 -> 20 dB
  std::vector<float> b_data(100, 0.5f);
  for (auto& v : b_data) v += 0.1f;
  auto b = make_norm_frame(10, 10, b_data);
  CHECK(psnr(a, b) == Approx(20.0).margin(1e-4));

  // mse 1 -> 0 dB
  auto zero = make_norm_frame(4, 4, std::vector<float>(16, 0.0f));
  auto one = make_norm_frame(4, 4, std::vector<float>(16, 1.0f));
  CHECK(psnr(zero, one) == Approx(0.0).margin(1e-9));

  auto small = make_norm_frame(3, 3, std::vector<float>(9, 0.f));
  CHECK_THROWS_AS(psnr(a, small), Error);

  // symmetry and translation invariance (pre-clamp, on raw vectors)
  Rng rng(8);
  std::vector<float> x(64), y(64);
  for (auto& v : x) v = float(rng.uniform());
  for (auto& v : y) v = float(rng.uniform());
  CHECK(psnr(x, y) == psnr(y, x));
  std::vector<float> xs = x, ys = y;
  for (auto& v : xs) v += 3.25f;
  for (auto& v : ys) v += 3.25f;
  CHECK(psnr(xs, ys) == Approx(psnr(x, y)).margin(1e-9));
}

TEST_CASE("full DCSCN forward+backward matches finite differences (32-bit)",
          "[dcscn][gradcheck]") {
  SrConfig cfg;
  auto model = build_dcscn(cfg, 21);
  Rng rng(22);
  // randomize the zero-init tail so gradients flow everywhere
  for (auto& v : model.stages[0].last_w->v) v = float(rng.normal(0.0, 0.02));
  for (auto& v : model.stages[0].last_b->v) v = float(rng.normal(0.0, 0.02));

  auto x = zeros<float>({1, 1, 8, 8});
  for (auto& v : x->v) v = float(0.2 + 0.6 * rng.uniform());
  auto target = zeros<float>({1, 1, 32, 32});
  for (auto& v : target->v) v = float(0.2 + 0.6 * rng.uniform());

  auto params = model.params();
  // random 10-parameter subsample
  std::vector<TensorPtr> leaves;
  for (int i = 0; i < 10; ++i)
    leaves.push_back(params[rng.index(params.size())]);

  auto build = [&](Graph& g) {
    return mse_loss(g, sr_forward_tensor(g, model, x), target);
  };
  const double worst =
      gradcheck::max_rel_err<float>(build, leaves, rng, 1, 2e-3);
  CHECK(worst < 1e-2);
}

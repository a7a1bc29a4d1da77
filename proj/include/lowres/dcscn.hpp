#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lowres/bicubic.hpp"
#include "lowres/checkpoint.hpp"
#include "lowres/conv.hpp"
#include "lowres/depth_frame.hpp"
#include "lowres/ops.hpp"

namespace lowres {

// Desk-scale DCSCN: a feature-extraction stack whose per-layer outputs are
// all concatenated (skip connections), a network-in-network reconstruction
// (1x1 path A1, 1x1 -> 3x3 path B1 -> B2), a final conv producing r^2
// channels, pixel shuffle, and a bicubic residual path. The final conv is
// zero-initialized, so an untrained model reproduces plain bicubic
// upsampling exactly; training learns only the sharpening correction.
//
// 16x is realized as two cascaded 4x stages trained jointly: a single-stage
// r=16 pixel shuffle would need 256 output channels and trains poorly at
// this size.

struct SrConfig {
  int scale = 4;  // 4 or 16
  int feature_layers = 5;
  std::vector<int> feature_filters{32, 26, 22, 18, 16};
  int nin_a1 = 32;
  int nin_b1 = 16;
  int nin_b2 = 16;
  int patch_size = 32;  // HR side of a training patch

  int stage_scale() const { return 4; }
  int num_stages() const { return scale == 16 ? 2 : 1; }

  void validate() const {
    require(scale == 4 || scale == 16, "bad-srconfig",
            "scale must be 4 or 16, got " + std::to_string(scale));
    require(int(feature_filters.size()) == feature_layers, "bad-srconfig",
            "feature_filters size != feature_layers");
    require(feature_layers >= 1, "bad-srconfig", "need >= 1 feature layer");
    for (size_t i = 1; i < feature_filters.size(); ++i)
      require(feature_filters[i] <= feature_filters[i - 1], "bad-srconfig",
              "feature_filters must be non-increasing");
    for (int f : feature_filters)
      require(f >= 1, "bad-srconfig", "feature filter counts must be >= 1");
    require(nin_a1 >= 1 && nin_b1 >= 1 && nin_b2 >= 1, "bad-srconfig",
            "reconstruction filter counts must be >= 1");
    require(patch_size >= scale && patch_size % scale == 0, "bad-srconfig",
            "patch_size must be a positive multiple of scale");
  }

  nlohmann::json to_json() const {
    return {{"scale", scale},
            {"feature_layers", feature_layers},
            {"feature_filters", feature_filters},
            {"nin_a1", nin_a1},
            {"nin_b1", nin_b1},
            {"nin_b2", nin_b2},
            {"patch_size", patch_size}};
  }

  static SrConfig from_json(const nlohmann::json& j) {
    SrConfig c;
    c.scale = j.at("scale").get<int>();
    c.feature_layers = j.at("feature_layers").get<int>();
    c.feature_filters = j.at("feature_filters").get<std::vector<int>>();
    c.nin_a1 = j.at("nin_a1").get<int>();
    c.nin_b1 = j.at("nin_b1").get<int>();
    c.nin_b2 = j.at("nin_b2").get<int>();
    c.patch_size = j.at("patch_size").get<int>();
    c.validate();
    return c;
  }
};

struct SrStage {
  std::vector<TensorPtr> feat_w, feat_b, feat_slope;
  TensorPtr a1_w, a1_b, a1_slope;
  TensorPtr b1_w, b1_b, b1_slope;
  TensorPtr b2_w, b2_b, b2_slope;
  TensorPtr last_w, last_b;
};

struct SrModel {
  SrConfig config;
  std::vector<SrStage> stages;

  std::vector<std::pair<std::string, TensorPtr>> named_params() const {
    std::vector<std::pair<std::string, TensorPtr>> out;
    for (size_t si = 0; si < stages.size(); ++si) {
      const auto& s = stages[si];
      const std::string p = "stage" + std::to_string(si) + ".";
      for (size_t i = 0; i < s.feat_w.size(); ++i) {
        const std::string f = p + "feat" + std::to_string(i) + ".";
        out.emplace_back(f + "w", s.feat_w[i]);
        out.emplace_back(f + "b", s.feat_b[i]);
        out.emplace_back(f + "slope", s.feat_slope[i]);
      }
      out.emplace_back(p + "a1.w", s.a1_w);
      out.emplace_back(p + "a1.b", s.a1_b);
      out.emplace_back(p + "a1.slope", s.a1_slope);
      out.emplace_back(p + "b1.w", s.b1_w);
      out.emplace_back(p + "b1.b", s.b1_b);
      out.emplace_back(p + "b1.slope", s.b1_slope);
      out.emplace_back(p + "b2.w", s.b2_w);
      out.emplace_back(p + "b2.b", s.b2_b);
      out.emplace_back(p + "b2.slope", s.b2_slope);
      out.emplace_back(p + "last.w", s.last_w);
      out.emplace_back(p + "last.b", s.last_b);
    }
    return out;
  }

  std::vector<TensorPtr> params() const {
    std::vector<TensorPtr> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }
};

namespace detail {

inline SrStage build_sr_stage(const SrConfig& cfg, Rng& rng) {
  SrStage s;
  int cin = 1;
  for (int i = 0; i < cfg.feature_layers; ++i) {
    const int cout = cfg.feature_filters[size_t(i)];
    s.feat_w.push_back(kaiming_conv(cout, cin, 3, rng));
    s.feat_b.push_back(zeros<float>({cout}, true));
    s.feat_slope.push_back(full<float>({cout}, 0.25f, true));
    cin = cout;
  }
  int concat_ch = 0;
  for (int f : cfg.feature_filters) concat_ch += f;
  s.a1_w = kaiming_conv(cfg.nin_a1, concat_ch, 1, rng);
  s.a1_b = zeros<float>({cfg.nin_a1}, true);
  s.a1_slope = full<float>({cfg.nin_a1}, 0.25f, true);
  s.b1_w = kaiming_conv(cfg.nin_b1, concat_ch, 1, rng);
  s.b1_b = zeros<float>({cfg.nin_b1}, true);
  s.b1_slope = full<float>({cfg.nin_b1}, 0.25f, true);
  s.b2_w = kaiming_conv(cfg.nin_b2, cfg.nin_b1, 3, rng);
  s.b2_b = zeros<float>({cfg.nin_b2}, true);
  s.b2_slope = full<float>({cfg.nin_b2}, 0.25f, true);
  const int r = cfg.stage_scale();
  // zero init: untrained output == bicubic upsample, bit for bit
  s.last_w = zeros<float>({r * r, cfg.nin_a1 + cfg.nin_b2, 3, 3}, true);
  s.last_b = zeros<float>({r * r}, true);
  return s;
}

}  // namespace detail

inline SrModel build_dcscn(const SrConfig& config, uint64_t seed) {
  config.validate();
  SrModel m;
  m.config = config;
  Rng rng(derive_seed(seed, "dcscn-init"));
  for (int i = 0; i < config.num_stages(); ++i)
    m.stages.push_back(detail::build_sr_stage(config, rng));
  return m;
}

inline size_t sr_param_count(const SrConfig& config) {
  auto m = build_dcscn(config, 0);
  size_t n = 0;
  for (const auto& p : m.params()) n += p->size();
  return n;
}

// One x4 stage: [b,1,h,w] -> [b,1,4h,4w], clamped to [0,1].
inline TensorPtr sr_stage_forward(Graph& g, const SrStage& s,
                                  const SrConfig& cfg, const TensorPtr& x) {
  const int r = cfg.stage_scale();
  std::vector<TensorPtr> feats;
  TensorPtr cur = x;
  for (size_t i = 0; i < s.feat_w.size(); ++i) {
    cur = prelu(g, conv2d(g, cur, s.feat_w[i], s.feat_b[i], 1, 1),
                s.feat_slope[i]);
    feats.push_back(cur);
  }
  auto skip = concat_channels(g, feats);
  auto a1 = prelu(g, conv2d(g, skip, s.a1_w, s.a1_b, 1, 0), s.a1_slope);
  auto b1 = prelu(g, conv2d(g, skip, s.b1_w, s.b1_b, 1, 0), s.b1_slope);
  auto b2 = prelu(g, conv2d(g, b1, s.b2_w, s.b2_b, 1, 1), s.b2_slope);
  auto recon = concat_channels(g, {a1, b2});
  auto shuffled =
      depth_to_space(g, conv2d(g, recon, s.last_w, s.last_b, 1, 1), r);
  auto base = bicubic_resize(g, x, x->shape[2] * r, x->shape[3] * r);
  return clamp01(g, add(g, shuffled, base));
}

inline TensorPtr sr_forward_tensor(Graph& g, const SrModel& m,
                                   const TensorPtr& x) {
  TensorPtr cur = x;
  for (const auto& stage : m.stages)
    cur = sr_stage_forward(g, stage, m.config, cur);
  return cur;
}

// Frame-level enhancement. The output records the privacy tier of the
// low-res frame it was derived from.
inline DepthFrame sr_forward(const SrModel& m, const DepthFrame& lr) {
  require(lr.is_normalized(), "bad-frame", "sr_forward: frame must be normalized");
  const int out_w = lr.width * m.config.scale;
  const int out_h = lr.height * m.config.scale;
  require(out_w <= kFullResSide && out_h <= kFullResSide,
          "dimension-overflow",
          "sr_forward: " + std::to_string(lr.width) + "x" +
              std::to_string(lr.height) + " * scale " +
              std::to_string(m.config.scale) + " exceeds " +
              std::to_string(kFullResSide));
  Graph g(false);
  auto x = from_vec<float>({1, 1, lr.height, lr.width}, lr.norm);
  auto y = sr_forward_tensor(g, m, x);
  DepthFrame out = make_norm_frame(out_w, out_h, y->v, lr.range, lr.provenance);
  out.derived_from = lr.privacy;
  return out;
}

inline void sr_save_checkpoint(const std::filesystem::path& path,
                               const SrModel& m) {
  save_checkpoint(path, "dcscn", m.config.to_json(), m.named_params());
}

inline SrModel sr_from_checkpoint(const Checkpoint& ck) {
  require(ck.kind == "dcscn", "checkpoint-kind",
          "expected kind dcscn, got '" + ck.kind + "'");
  SrModel m = build_dcscn(SrConfig::from_json(ck.config), 0);
  auto params = m.named_params();
  require(params.size() == ck.tensors.size(), "checkpoint-corrupt",
          "dcscn checkpoint has wrong tensor count");
  for (auto& [name, t] : params) {
    auto loaded = ck.find(name);
    require(loaded->shape == t->shape, "checkpoint-corrupt",
            "tensor '" + name + "' has shape " + shape_str(loaded->shape) +
                ", model expects " + shape_str(t->shape));
    t->v = loaded->v;
  }
  return m;
}

inline SrModel sr_load_checkpoint(const std::filesystem::path& path) {
  return sr_from_checkpoint(load_checkpoint(path));
}

}  // namespace lowres

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lowres/checkpoint.hpp"
#include "lowres/conv.hpp"
#include "lowres/norm.hpp"
#include "lowres/ops.hpp"

namespace lowres {

// Desk-scale residual classifier: stride-2 stem, one residual block per
// channel-plan stage (stride-2 entries), group norm (no batch statistics, so
// evaluation is deterministic and batch-size independent), global average
// pool and a zero-initialized dense head. Zero head makes the initial loss
// exactly ln(num_classes).

struct ClsConfig {
  int num_classes = 2;
  int input_side = 224;
  std::vector<int> blocks{16, 32, 64};
  int groups = 8;

  void validate() const {
    require(num_classes >= 2, "bad-clsconfig", "need >= 2 classes");
    require(input_side >= 16, "bad-clsconfig", "input side too small");
    require(!blocks.empty(), "bad-clsconfig", "need >= 1 block");
    for (int c : blocks) {
      require(c >= 1, "bad-clsconfig", "block channels must be >= 1");
      require(c % groups == 0, "bad-clsconfig",
              "block channels " + std::to_string(c) +
                  " not divisible by groups " + std::to_string(groups));
    }
  }

  nlohmann::json to_json() const {
    return {{"num_classes", num_classes},
            {"input_side", input_side},
            {"blocks", blocks},
            {"groups", groups}};
  }

  static ClsConfig from_json(const nlohmann::json& j) {
    ClsConfig c;
    c.num_classes = j.at("num_classes").get<int>();
    c.input_side = j.at("input_side").get<int>();
    c.blocks = j.at("blocks").get<std::vector<int>>();
    c.groups = j.at("groups").get<int>();
    c.validate();
    return c;
  }
};

struct ResBlock {
  int stride = 2;
  TensorPtr conv1_w, conv1_b, gn1_gamma, gn1_beta;
  TensorPtr conv2_w, conv2_b, gn2_gamma, gn2_beta;
  bool has_skip = false;
  TensorPtr skip_w, skip_b;
};

struct ClsModel {
  ClsConfig config;
  TensorPtr stem_w, stem_b, stem_gamma, stem_beta;
  std::vector<ResBlock> blocks;
  TensorPtr head_w, head_b;

  std::vector<std::pair<std::string, TensorPtr>> named_params() const {
    std::vector<std::pair<std::string, TensorPtr>> out;
    out.emplace_back("stem.w", stem_w);
    out.emplace_back("stem.b", stem_b);
    out.emplace_back("stem.gamma", stem_gamma);
    out.emplace_back("stem.beta", stem_beta);
    for (size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      const std::string p = "block" + std::to_string(i) + ".";
      out.emplace_back(p + "conv1.w", b.conv1_w);
      out.emplace_back(p + "conv1.b", b.conv1_b);
      out.emplace_back(p + "gn1.gamma", b.gn1_gamma);
      out.emplace_back(p + "gn1.beta", b.gn1_beta);
      out.emplace_back(p + "conv2.w", b.conv2_w);
      out.emplace_back(p + "conv2.b", b.conv2_b);
      out.emplace_back(p + "gn2.gamma", b.gn2_gamma);
      out.emplace_back(p + "gn2.beta", b.gn2_beta);
      if (b.has_skip) {
        out.emplace_back(p + "skip.w", b.skip_w);
        out.emplace_back(p + "skip.b", b.skip_b);
      }
    }
    out.emplace_back("head.w", head_w);
    out.emplace_back("head.b", head_b);
    return out;
  }

  std::vector<TensorPtr> params() const {
    std::vector<TensorPtr> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }
};

inline ClsModel build_classifier(const ClsConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, "cls-init"));
  ClsModel m;
  m.config = config;
  const int c0 = config.blocks[0];
  m.stem_w = detail::kaiming_conv(c0, 1, 3, rng);
  m.stem_b = zeros<float>({c0}, true);
  m.stem_gamma = full<float>({c0}, 1.f, true);
  m.stem_beta = zeros<float>({c0}, true);
  int cin = c0;
  for (int cout : config.blocks) {
    ResBlock b;
    b.stride = 2;
    b.conv1_w = detail::kaiming_conv(cout, cin, 3, rng);
    b.conv1_b = zeros<float>({cout}, true);
    b.gn1_gamma = full<float>({cout}, 1.f, true);
    b.gn1_beta = zeros<float>({cout}, true);
    b.conv2_w = detail::kaiming_conv(cout, cout, 3, rng);
    b.conv2_b = zeros<float>({cout}, true);
    b.gn2_gamma = full<float>({cout}, 1.f, true);
    b.gn2_beta = zeros<float>({cout}, true);
    b.has_skip = true;  // stride 2 always reshapes
    b.skip_w = detail::kaiming_conv(cout, cin, 1, rng);
    b.skip_b = zeros<float>({cout}, true);
    m.blocks.push_back(std::move(b));
    cin = cout;
  }
  m.head_w = zeros<float>({cin, config.num_classes}, true);
  m.head_b = zeros<float>({config.num_classes}, true);
  return m;
}

inline TensorPtr cls_forward(Graph& g, const ClsModel& m, const TensorPtr& x) {
  require(x->shape.size() == 4 && x->shape[1] == 1 &&
              x->shape[2] == m.config.input_side &&
              x->shape[3] == m.config.input_side,
          "bad-shape",
          "cls_forward: expected [b,1," + std::to_string(m.config.input_side) +
              "," + std::to_string(m.config.input_side) + "], got " +
              shape_str(x->shape));
  const int groups = m.config.groups;
  auto cur = relu(
      g, group_norm(g, conv2d(g, x, m.stem_w, m.stem_b, 2, 1), m.stem_gamma,
                    m.stem_beta, groups));
  for (const auto& b : m.blocks) {
    auto y = relu(g, group_norm(g, conv2d(g, cur, b.conv1_w, b.conv1_b,
                                          b.stride, 1),
                                b.gn1_gamma, b.gn1_beta, groups));
    y = group_norm(g, conv2d(g, y, b.conv2_w, b.conv2_b, 1, 1), b.gn2_gamma,
                   b.gn2_beta, groups);
    auto skip = b.has_skip
                    ? conv2d(g, cur, b.skip_w, b.skip_b, b.stride, 0)
                    : cur;
    cur = relu(g, add(g, y, skip));
  }
  auto pooled = global_avg_pool(g, cur);
  return dense(g, pooled, m.head_w, m.head_b);
}

inline size_t cls_param_count(const ClsConfig& config) {
  auto m = build_classifier(config, 0);
  size_t n = 0;
  for (const auto& p : m.params()) n += p->size();
  return n;
}

inline void cls_save_checkpoint(const std::filesystem::path& path,
                                const ClsModel& m) {
  save_checkpoint(path, "classifier", m.config.to_json(), m.named_params());
}

inline ClsModel cls_from_checkpoint(const Checkpoint& ck) {
  require(ck.kind == "classifier", "checkpoint-kind",
          "expected kind classifier, got '" + ck.kind + "'");
  ClsModel m = build_classifier(ClsConfig::from_json(ck.config), 0);
  auto params = m.named_params();
  require(params.size() == ck.tensors.size(), "checkpoint-corrupt",
          "classifier checkpoint has wrong tensor count");
  for (auto& [name, t] : params) {
    auto loaded = ck.find(name);
    require(loaded->shape == t->shape, "checkpoint-corrupt",
            "tensor '" + name + "' has shape " + shape_str(loaded->shape) +
                ", model expects " + shape_str(t->shape));
    t->v = loaded->v;
  }
  return m;
}

inline ClsModel cls_load_checkpoint(const std::filesystem::path& path) {
  return cls_from_checkpoint(load_checkpoint(path));
}

}  // namespace lowres

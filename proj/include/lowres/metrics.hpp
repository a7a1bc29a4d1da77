#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowres/common.hpp"

namespace lowres {

// One-vs-rest AUC as the normalized Mann-Whitney U statistic with midrank
// tie handling: P(score_pos > score_neg) + 0.5 * P(tie). Equals the
// trapezoidal ROC area exactly, including ties.
inline double auc_binary(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "bad-dimension",
          "auc_binary: scores/labels size mismatch");
  size_t npos = 0, nneg = 0;
  for (int l : labels) (l ? npos : nneg) += 1;
  require(npos > 0 && nneg > 0, "undefined-auc",
          "auc_binary: need at least one positive and one negative (got " +
              std::to_string(npos) + " pos, " + std::to_string(nneg) + " neg)");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] < scores[b];
  });

  // midranks over tie groups; ranks are 1-based
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = (double(i + 1) + double(j + 1)) / 2.0;
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]]) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double u = rank_sum_pos - double(npos) * double(npos + 1) / 2.0;
  return u / (double(npos) * double(nneg));
}

// Accuracy, per-class one-vs-rest AUC and confusion counts for one
// (dimension x enhancement) configuration.
struct EvalReport {
  std::string task;
  int dim = 224;
  bool dcscn = false;
  int num_classes = 2;
  int n_test = 0;
  double test_acc = 0.0;
  std::vector<std::optional<double>> auc;   // nullopt: class absent from test
  std::vector<std::vector<int>> confusion;  // [true][pred]

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["dim"] = dim;
    j["dcscn"] = dcscn;
    j["num_classes"] = num_classes;
    j["n_test"] = n_test;
    j["test_acc"] = test_acc;
    auto arr = nlohmann::json::array();
    for (const auto& a : auc)
      arr.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
    j["auc"] = arr;
    j["confusion"] = confusion;
    return j;
  }

  static EvalReport from_json(const nlohmann::json& j) {
    EvalReport r;
    r.task = j.at("task").get<std::string>();
    r.dim = j.at("dim").get<int>();
    r.dcscn = j.at("dcscn").get<bool>();
    r.num_classes = j.at("num_classes").get<int>();
    r.n_test = j.at("n_test").get<int>();
    r.test_acc = j.at("test_acc").get<double>();
    for (const auto& a : j.at("auc"))
      r.auc.push_back(a.is_null() ? std::optional<double>{}
                                  : std::optional<double>{a.get<double>()});
    r.confusion = j.at("confusion").get<std::vector<std::vector<int>>>();
    return r;
  }

  // CSV row: dim,dcscn,test_acc,auc_0..auc_k
  std::string csv_row() const {
    std::string out = std::to_string(dim);
    out += dcscn ? ",yes" : ",no";
    char buf[40];
    std::snprintf(buf, sizeof buf, ",%.6f", test_acc);
    out += buf;
    for (const auto& a : auc) {
      if (a) {
        std::snprintf(buf, sizeof buf, ",%.6f", *a);
        out += buf;
      } else {
        out += ",undefined";
      }
    }
    return out;
  }
};

}  // namespace lowres

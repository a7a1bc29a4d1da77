#pragma once

// Randomized finite-difference sweep over every differentiable op, shared by
// the unit tests (a few seeds) and the acceptance suite (100 seeds per op in
// the 64-bit instantiation). Inputs are sampled away from the kinks of
// piecewise ops (relu/prelu at 0, clamp at 0/1) where the derivative does not
// exist.

#include <functional>
#include <string>
#include <vector>

#include "lowres/conv.hpp"
#include "lowres/loss.hpp"
#include "lowres/norm.hpp"
#include "lowres/ops.hpp"
#include "support/gradcheck.hpp"

namespace opsuite {

using D = double;
using lowres::GraphT;
using lowres::Rng;
using lowres::TensorPtrT;

inline TensorPtrT<D> rand_tensor(std::vector<int> shape, Rng& rng,
                                 double lo = -1.0, double hi = 1.0) {
  auto t = lowres::zeros<D>(std::move(shape));
  for (auto& x : t->v) x = lo + (hi - lo) * rng.uniform();
  return t;
}

// values with |x| in [0.2, 1.5]: keeps finite differences away from x=0
inline TensorPtrT<D> rand_tensor_off_zero(std::vector<int> shape, Rng& rng) {
  auto t = lowres::zeros<D>(std::move(shape));
  for (auto& x : t->v) {
    const double mag = 0.2 + 1.3 * rng.uniform();
    x = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

struct OpCheck {
  std::string name;
  std::function<double(uint64_t)> run;  // seed -> worst rel err
};

inline double check_conv2d(uint64_t seed) {
  Rng rng(seed);
  const int b = 1 + int(rng.index(2)), ci = 1 + int(rng.index(3));
  const int co = 1 + int(rng.index(3));
  const int k = 2 * int(rng.index(2)) + 1;  // 1 or 3
  const int stride = 1 + int(rng.index(2)), pad = int(rng.index(2));
  const int h = k + 3 + int(rng.index(4)), w = k + 3 + int(rng.index(4));
  auto x = rand_tensor({b, ci, h, w}, rng);
  auto wt = rand_tensor({co, ci, k, k}, rng);
  auto bias = rand_tensor({co}, rng);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  auto target = rand_tensor({b, co, oh, ow}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::conv2d(g, x, wt, bias, stride, pad),
                            target);
  };
  return gradcheck::max_rel_err<D>(build, {x, wt, bias}, rng);
}

inline double check_dense(uint64_t seed) {
  Rng rng(seed);
  const int b = 1 + int(rng.index(3)), n = 2 + int(rng.index(6));
  const int k = 2 + int(rng.index(4));
  auto x = rand_tensor({b, n}, rng);
  auto wt = rand_tensor({n, k}, rng);
  auto bias = rand_tensor({k}, rng);
  auto target = rand_tensor({b, k}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::dense(g, x, wt, bias), target);
  };
  return gradcheck::max_rel_err<D>(build, {x, wt, bias}, rng);
}

inline double check_prelu(uint64_t seed) {
  Rng rng(seed);
  const int b = 1 + int(rng.index(2)), c = 1 + int(rng.index(4));
  const int h = 2 + int(rng.index(4)), w = 2 + int(rng.index(4));
  auto x = rand_tensor_off_zero({b, c, h, w}, rng);
  auto slope = rand_tensor({c}, rng, 0.05, 0.6);
  auto target = rand_tensor({b, c, h, w}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::prelu(g, x, slope), target);
  };
  return gradcheck::max_rel_err<D>(build, {x, slope}, rng);
}

inline double check_relu(uint64_t seed) {
  Rng rng(seed);
  const int n = 3 + int(rng.index(6));
  auto x = rand_tensor_off_zero({1, 2, n, n}, rng);
  auto target = rand_tensor({1, 2, n, n}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::relu(g, x), target);
  };
  return gradcheck::max_rel_err<D>(build, {x}, rng);
}

inline double check_add(uint64_t seed) {
  Rng rng(seed);
  const int n = 2 + int(rng.index(5));
  auto a = rand_tensor({2, 3, n, n}, rng);
  auto b = rand_tensor({2, 3, n, n}, rng);
  auto target = rand_tensor({2, 3, n, n}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::add(g, a, b), target);
  };
  return gradcheck::max_rel_err<D>(build, {a, b}, rng);
}

inline double check_clamp01(uint64_t seed) {
  Rng rng(seed);
  const int n = 3 + int(rng.index(4));
  auto x = lowres::zeros<D>({1, 1, n, n});
  for (auto& v : x->v) {
    // stay clear of the clamp kinks at 0 and 1
    double u = rng.uniform();
    v = u < 0.4 ? (0.1 + 0.8 * rng.uniform())           // inside
                : (u < 0.7 ? -0.8 * rng.uniform() - 0.1  // below
                           : 1.1 + 0.8 * rng.uniform()); // above
  }
  auto target = rand_tensor({1, 1, n, n}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::clamp01(g, x), target);
  };
  return gradcheck::max_rel_err<D>(build, {x}, rng);
}

inline double check_concat(uint64_t seed) {
  Rng rng(seed);
  const int n = 2 + int(rng.index(4));
  auto a = rand_tensor({1, 2, n, n}, rng);
  auto b = rand_tensor({1, 3, n, n}, rng);
  auto c = rand_tensor({1, 1, n, n}, rng);
  auto target = rand_tensor({1, 6, n, n}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::concat_channels(g, {a, b, c}), target);
  };
  return gradcheck::max_rel_err<D>(build, {a, b, c}, rng);
}

inline double check_depth_to_space(uint64_t seed) {
  Rng rng(seed);
  const int r = 1 + int(rng.index(3));
  const int c = 1 + int(rng.index(2));
  const int n = 2 + int(rng.index(3));
  auto x = rand_tensor({1, c * r * r, n, n}, rng);
  auto target = rand_tensor({1, c, n * r, n * r}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::depth_to_space(g, x, r), target);
  };
  return gradcheck::max_rel_err<D>(build, {x}, rng);
}

inline double check_global_avg_pool(uint64_t seed) {
  Rng rng(seed);
  const int n = 2 + int(rng.index(5));
  auto x = rand_tensor({2, 3, n, n}, rng);
  auto target = rand_tensor({2, 3}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::global_avg_pool(g, x), target);
  };
  return gradcheck::max_rel_err<D>(build, {x}, rng);
}

inline double check_mse(uint64_t seed) {
  Rng rng(seed);
  const int n = 2 + int(rng.index(6));
  auto a = rand_tensor({n, n}, rng);
  auto b = rand_tensor({n, n}, rng);
  auto build = [&](GraphT<D>& g) { return lowres::mse_loss(g, a, b); };
  return gradcheck::max_rel_err<D>(build, {a, b}, rng);
}

inline double check_softmax_ce(uint64_t seed) {
  Rng rng(seed);
  const int b = 2 + int(rng.index(3)), k = 2 + int(rng.index(4));
  auto logits = rand_tensor({b, k}, rng, -2.0, 2.0);
  std::vector<int> labels(b);
  for (auto& l : labels) l = int(rng.index(k));
  auto build = [&](GraphT<D>& g) {
    return lowres::softmax_cross_entropy(g, logits, labels);
  };
  return gradcheck::max_rel_err<D>(build, {logits}, rng);
}

inline double check_group_norm(uint64_t seed) {
  Rng rng(seed);
  const int groups = 1 + int(rng.index(2));
  const int c = groups * (1 + int(rng.index(3)));
  const int n = 3 + int(rng.index(3));
  auto x = rand_tensor({2, c, n, n}, rng);
  auto gamma = rand_tensor({c}, rng, 0.5, 1.5);
  auto beta = rand_tensor({c}, rng, -0.3, 0.3);
  auto target = rand_tensor({2, c, n, n}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::group_norm(g, x, gamma, beta, groups),
                            target);
  };
  return gradcheck::max_rel_err<D>(build, {x, gamma, beta}, rng);
}

inline double check_bicubic_resize(uint64_t seed) {
  Rng rng(seed);
  const int h = 4 + int(rng.index(5)), w = 4 + int(rng.index(5));
  const int oh = 2 + int(rng.index(12)), ow = 2 + int(rng.index(12));
  auto x = rand_tensor({1, 2, h, w}, rng);
  auto target = rand_tensor({1, 2, oh, ow}, rng);
  auto build = [&](GraphT<D>& g) {
    return lowres::mse_loss(g, lowres::bicubic_resize(g, x, oh, ow), target);
  };
  return gradcheck::max_rel_err<D>(build, {x}, rng);
}

inline const std::vector<OpCheck>& all_op_checks() {
  static const std::vector<OpCheck> checks = {
      {"conv2d", check_conv2d},
      {"dense", check_dense},
      {"prelu", check_prelu},
      {"relu", check_relu},
      {"add", check_add},
      {"clamp01", check_clamp01},
      {"concat_channels", check_concat},
      {"depth_to_space", check_depth_to_space},
      {"global_avg_pool", check_global_avg_pool},
      {"mse_loss", check_mse},
      {"softmax_cross_entropy", check_softmax_ce},
      {"group_norm", check_group_norm},
      {"bicubic_resize", check_bicubic_resize},
  };
  return checks;
}

}  // namespace opsuite

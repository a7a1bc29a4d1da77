#pragma once

// Finite-difference gradient oracle. Lives in test code and touches only the
// public forward API, so it stays independent of the backward implementation
// it checks. Central differences:
//   df/dx ~ (f(x+h) - f(x-h)) / 2h
// In the 64-bit instantiation this resolves gradients to ~1e-10, which is
// what the rel-err < 1e-6 gate relies on; the 32-bit mode is only used for
// the end-to-end DCSCN check at a looser tolerance.

#include <cmath>
#include <functional>
#include <vector>

#include "lowres/graph.hpp"
#include "lowres/rng.hpp"
#include "lowres/tensor.hpp"

namespace gradcheck {

inline double rel_err(double analytic, double numeric) {
  return std::fabs(analytic - numeric) /
         std::max(std::fabs(analytic) + std::fabs(numeric), 1e-3);
}

// builder must be pure: same leaves -> same scalar loss.
template <class T>
using Builder =
    std::function<lowres::TensorPtrT<T>(lowres::GraphT<T>&)>;

template <class T>
double max_rel_err(const Builder<T>& build,
                   const std::vector<lowres::TensorPtrT<T>>& leaves,
                   lowres::Rng& rng, int coords_per_leaf = 10,
                   double step = 1e-5) {
  for (auto& leaf : leaves) {
    leaf->requires_grad = true;
    leaf->zero_grad();
  }
  lowres::GraphT<T> g;
  auto loss = build(g);
  g.backward(loss);

  std::vector<std::vector<T>> analytic;
  for (auto& leaf : leaves) {
    leaf->ensure_grad();
    analytic.push_back(leaf->grad);
  }

  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li];
    const int n_coords =
        int(std::min<size_t>(size_t(coords_per_leaf), leaf->size()));
    for (int k = 0; k < n_coords; ++k) {
      const size_t c = rng.index(leaf->size());
      const T orig = leaf->v[c];
      const double h = step * (1.0 + std::fabs(double(orig)));

      const T xp = T(double(orig) + h);
      leaf->v[c] = xp;
      lowres::GraphT<T> gp(false);
      const double lp = double(build(gp)->v[0]);

      const T xm = T(double(orig) - h);
      leaf->v[c] = xm;
      lowres::GraphT<T> gm(false);
      const double lm = double(build(gm)->v[0]);

      leaf->v[c] = orig;
      const double numeric = (lp - lm) / (double(xp) - double(xm));
      worst = std::max(worst, rel_err(double(analytic[li][c]), numeric));
    }
  }
  return worst;
}

}  // namespace gradcheck

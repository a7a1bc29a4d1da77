#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "lowres/graph.hpp"
#include "lowres/ops.hpp"

namespace lowres {

// Group normalization: per (sample, group) statistics over (c/groups, h, w),
// then a learned per-channel affine. No running statistics, so evaluation is
// deterministic and batch-size independent.
template <class T>
TensorPtrT<T> group_norm(GraphT<T>& g, const TensorPtrT<T>& x,
                         const TensorPtrT<T>& gamma, const TensorPtrT<T>& beta,
                         int groups, double eps = 1e-5) {
  detail::require_4d(x->shape, "group_norm");
  const int b = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
  require(groups >= 1 && c % groups == 0, "bad-shape",
          "group_norm: channels " + std::to_string(c) +
              " not divisible by groups " + std::to_string(groups));
  require(gamma->shape.size() == 1 && gamma->shape[0] == c, "bad-shape",
          "group_norm: gamma " + shape_str(gamma->shape));
  require(beta->shape.size() == 1 && beta->shape[0] == c, "bad-shape",
          "group_norm: beta " + shape_str(beta->shape));
  const int cg = c / groups;
  const size_t plane = size_t(h) * w;
  const size_t gsz = size_t(cg) * plane;

  auto out = zeros<T>(x->shape);
  auto xhat = std::make_shared<std::vector<T>>(x->size());
  auto inv_std = std::make_shared<std::vector<double>>(size_t(b) * groups);

  for (int bi = 0; bi < b; ++bi)
    for (int gi = 0; gi < groups; ++gi) {
      const size_t off = (size_t(bi) * c + size_t(gi) * cg) * plane;
      const T* xs = x->v.data() + off;
      double mean = 0.0;
      for (size_t i = 0; i < gsz; ++i) mean += double(xs[i]);
      mean /= double(gsz);
      double var = 0.0;
      for (size_t i = 0; i < gsz; ++i) {
        const double d = double(xs[i]) - mean;
        var += d * d;
      }
      var /= double(gsz);
      const double inv = 1.0 / std::sqrt(var + eps);
      (*inv_std)[size_t(bi) * groups + gi] = inv;
      T* xh = xhat->data() + off;
      T* os = out->v.data() + off;
      for (int cc = 0; cc < cg; ++cc) {
        const double ga = double(gamma->v[size_t(gi) * cg + cc]);
        const double be = double(beta->v[size_t(gi) * cg + cc]);
        for (size_t i = 0; i < plane; ++i) {
          const double xn = (double(xs[size_t(cc) * plane + i]) - mean) * inv;
          xh[size_t(cc) * plane + i] = T(xn);
          os[size_t(cc) * plane + i] = T(ga * xn + be);
        }
      }
    }
  out->requires_grad =
      x->requires_grad || gamma->requires_grad || beta->requires_grad;
  check_finite(*out, "group_norm");

  if (g.recording() && out->requires_grad) {
    g.record([x, gamma, beta, out, xhat, inv_std, b, c, groups, cg, plane,
              gsz]() {
      if (detail::no_outgrad(out)) return;
      if (gamma->requires_grad) gamma->ensure_grad();
      if (beta->requires_grad) beta->ensure_grad();
      if (x->requires_grad) x->ensure_grad();
      for (int bi = 0; bi < b; ++bi)
        for (int gi = 0; gi < groups; ++gi) {
          const size_t off = (size_t(bi) * c + size_t(gi) * cg) * plane;
          const T* go = out->grad.data() + off;
          const T* xh = xhat->data() + off;
          if (gamma->requires_grad || beta->requires_grad) {
            for (int cc = 0; cc < cg; ++cc) {
              double dg = 0.0, db = 0.0;
              for (size_t i = 0; i < plane; ++i) {
                dg += double(go[size_t(cc) * plane + i]) *
                      double(xh[size_t(cc) * plane + i]);
                db += double(go[size_t(cc) * plane + i]);
              }
              if (gamma->requires_grad) gamma->grad[size_t(gi) * cg + cc] += T(dg);
              if (beta->requires_grad) beta->grad[size_t(gi) * cg + cc] += T(db);
            }
          }
          if (x->requires_grad) {
            const double inv = (*inv_std)[size_t(bi) * groups + gi];
            double mean_gh = 0.0, mean_ghx = 0.0;
            for (int cc = 0; cc < cg; ++cc) {
              const double ga = double(gamma->v[size_t(gi) * cg + cc]);
              for (size_t i = 0; i < plane; ++i) {
                const double gh = ga * double(go[size_t(cc) * plane + i]);
                mean_gh += gh;
                mean_ghx += gh * double(xh[size_t(cc) * plane + i]);
              }
            }
            mean_gh /= double(gsz);
            mean_ghx /= double(gsz);
            T* gx = x->grad.data() + off;
            for (int cc = 0; cc < cg; ++cc) {
              const double ga = double(gamma->v[size_t(gi) * cg + cc]);
              for (size_t i = 0; i < plane; ++i) {
                const double gh = ga * double(go[size_t(cc) * plane + i]);
                gx[size_t(cc) * plane + i] +=
                    T(inv * (gh - mean_gh -
                             double(xh[size_t(cc) * plane + i]) * mean_ghx));
              }
            }
          }
        }
    });
  }
  return out;
}

}  // namespace lowres

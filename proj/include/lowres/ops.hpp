#pragma once

#include <algorithm>
#include <vector>

#include "lowres/graph.hpp"
#include "lowres/resample_core.hpp"
#include "lowres/tensor.hpp"

namespace lowres {

namespace detail {

// Backward closures bail out when the node's output grad was never touched
// (its value did not feed the loss).
template <class T>
bool no_outgrad(const TensorPtrT<T>& out) {
  return out->grad.empty();
}

inline void require_4d(const std::vector<int>& s, const char* who) {
  require(s.size() == 4, "bad-shape",
          std::string(who) + ": expected [b,c,h,w], got " + shape_str(s));
}

}  // namespace detail

template <class T>
TensorPtrT<T> relu(GraphT<T>& g, const TensorPtrT<T>& x) {
  auto out = zeros<T>(x->shape);
  for (size_t i = 0; i < x->size(); ++i) out->v[i] = x->v[i] > T(0) ? x->v[i] : T(0);
  out->requires_grad = x->requires_grad;
  check_finite(*out, "relu");
  if (g.recording() && out->requires_grad) {
    g.record([x, out]() {
      if (detail::no_outgrad(out)) return;
      x->ensure_grad();
      for (size_t i = 0; i < x->size(); ++i)
        if (x->v[i] > T(0)) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

// out = x where x > 0, slope[c] * x otherwise; one slope per channel.
template <class T>
TensorPtrT<T> prelu(GraphT<T>& g, const TensorPtrT<T>& x,
                    const TensorPtrT<T>& slope) {
  detail::require_4d(x->shape, "prelu");
  const int c = x->shape[1];
  require(slope->shape.size() == 1 && slope->shape[0] == c, "bad-shape",
          "prelu: slope " + shape_str(slope->shape) + " does not match " +
              std::to_string(c) + " channels");
  const int b = x->shape[0];
  const size_t plane = size_t(x->shape[2]) * x->shape[3];
  auto out = zeros<T>(x->shape);
  for (int bi = 0; bi < b; ++bi)
    for (int ci = 0; ci < c; ++ci) {
      const T s = slope->v[ci];
      const T* xi = x->v.data() + (size_t(bi) * c + ci) * plane;
      T* oi = out->v.data() + (size_t(bi) * c + ci) * plane;
      for (size_t i = 0; i < plane; ++i) oi[i] = xi[i] > T(0) ? xi[i] : s * xi[i];
    }
  out->requires_grad = x->requires_grad || slope->requires_grad;
  check_finite(*out, "prelu");
  if (g.recording() && out->requires_grad) {
    g.record([x, slope, out, b, c, plane]() {
      if (detail::no_outgrad(out)) return;
      if (x->requires_grad) x->ensure_grad();
      if (slope->requires_grad) slope->ensure_grad();
      for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
          const T s = slope->v[ci];
          const size_t off = (size_t(bi) * c + ci) * plane;
          const T* xi = x->v.data() + off;
          const T* go = out->grad.data() + off;
          if (x->requires_grad) {
            T* gx = x->grad.data() + off;
            for (size_t i = 0; i < plane; ++i)
              gx[i] += xi[i] > T(0) ? go[i] : s * go[i];
          }
          if (slope->requires_grad) {
            double acc = 0.0;
            for (size_t i = 0; i < plane; ++i)
              if (xi[i] <= T(0)) acc += double(xi[i]) * double(go[i]);
            slope->grad[ci] += T(acc);
          }
        }
    });
  }
  return out;
}

template <class T>
TensorPtrT<T> add(GraphT<T>& g, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
  require(a->shape == b->shape, "bad-shape",
          "add: " + shape_str(a->shape) + " vs " + shape_str(b->shape));
  auto out = zeros<T>(a->shape);
  for (size_t i = 0; i < a->size(); ++i) out->v[i] = a->v[i] + b->v[i];
  out->requires_grad = a->requires_grad || b->requires_grad;
  check_finite(*out, "add");
  if (g.recording() && out->requires_grad) {
    g.record([a, b, out]() {
      if (detail::no_outgrad(out)) return;
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

// Clamp to [0,1]; subgradient is 1 on the closed interval, 0 outside.
template <class T>
TensorPtrT<T> clamp01(GraphT<T>& g, const TensorPtrT<T>& x) {
  auto out = zeros<T>(x->shape);
  for (size_t i = 0; i < x->size(); ++i)
    out->v[i] = std::min(T(1), std::max(T(0), x->v[i]));
  out->requires_grad = x->requires_grad;
  if (g.recording() && out->requires_grad) {
    g.record([x, out]() {
      if (detail::no_outgrad(out)) return;
      x->ensure_grad();
      for (size_t i = 0; i < x->size(); ++i)
        if (x->v[i] >= T(0) && x->v[i] <= T(1)) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

// Channel concatenation; inputs must agree on batch, height and width.
template <class T>
TensorPtrT<T> concat_channels(GraphT<T>& g,
                              const std::vector<TensorPtrT<T>>& xs) {
  require(!xs.empty(), "bad-shape", "concat_channels: no inputs");
  detail::require_4d(xs[0]->shape, "concat_channels");
  const int b = xs[0]->shape[0], h = xs[0]->shape[2], w = xs[0]->shape[3];
  int ctot = 0;
  bool rg = false;
  for (const auto& x : xs) {
    detail::require_4d(x->shape, "concat_channels");
    require(x->shape[0] == b && x->shape[2] == h && x->shape[3] == w,
            "bad-shape",
            "concat_channels: spatial mismatch " + shape_str(x->shape) +
                " vs " + shape_str(xs[0]->shape));
    ctot += x->shape[1];
    rg = rg || x->requires_grad;
  }
  auto out = zeros<T>({b, ctot, h, w});
  const size_t plane = size_t(h) * w;
  for (int bi = 0; bi < b; ++bi) {
    size_t co = 0;
    for (const auto& x : xs) {
      const size_t n = size_t(x->shape[1]) * plane;
      std::copy_n(x->v.data() + size_t(bi) * n, n,
                  out->v.data() + (size_t(bi) * ctot + co) * plane);
      co += x->shape[1];
    }
  }
  out->requires_grad = rg;
  if (g.recording() && rg) {
    g.record([xs, out, b, ctot, plane]() {
      if (detail::no_outgrad(out)) return;
      for (int bi = 0; bi < b; ++bi) {
        size_t co = 0;
        for (const auto& x : xs) {
          const size_t n = size_t(x->shape[1]) * plane;
          if (x->requires_grad) {
            x->ensure_grad();
            const T* go = out->grad.data() + (size_t(bi) * ctot + co) * plane;
            T* gx = x->grad.data() + size_t(bi) * n;
            for (size_t i = 0; i < n; ++i) gx[i] += go[i];
          }
          co += x->shape[1];
        }
      }
    });
  }
  return out;
}

// Pixel shuffle: [b, c*r*r, h, w] -> [b, c, h*r, w*r].
// out[b, c, h*r+i, w*r+j] = in[b, c*r*r + i*r + j, h, w]
template <class T>
TensorPtrT<T> depth_to_space(GraphT<T>& g, const TensorPtrT<T>& x, int r) {
  detail::require_4d(x->shape, "depth_to_space");
  require(r >= 1, "bad-shape", "depth_to_space: r must be >= 1");
  const int b = x->shape[0], cin = x->shape[1], h = x->shape[2], w = x->shape[3];
  require(cin % (r * r) == 0, "bad-shape",
          "depth_to_space: channels " + std::to_string(cin) +
              " not divisible by r^2=" + std::to_string(r * r));
  const int c = cin / (r * r);
  auto out = zeros<T>({b, c, h * r, w * r});
  auto map = [b, c, cin, h, w, r](auto&& fn) {
    for (int bi = 0; bi < b; ++bi)
      for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) {
            const size_t src =
                (size_t(bi) * cin + size_t(ci) * r * r + size_t(i) * r + j) *
                (size_t(h) * w);
            for (int y = 0; y < h; ++y) {
              const size_t s = src + size_t(y) * w;
              const size_t d =
                  ((size_t(bi) * c + ci) * (size_t(h) * r) + size_t(y) * r + i) *
                      (size_t(w) * r) +
                  j;
              for (int xx = 0; xx < w; ++xx) fn(s + xx, d + size_t(xx) * r);
            }
          }
  };
  map([&](size_t s, size_t d) { out->v[d] = x->v[s]; });
  out->requires_grad = x->requires_grad;
  if (g.recording() && out->requires_grad) {
    g.record([x, out, map]() {
      if (detail::no_outgrad(out)) return;
      x->ensure_grad();
      map([&](size_t s, size_t d) { x->grad[s] += out->grad[d]; });
    });
  }
  return out;
}

// [b,c,h,w] -> [b,c]; accumulates in double.
template <class T>
TensorPtrT<T> global_avg_pool(GraphT<T>& g, const TensorPtrT<T>& x) {
  detail::require_4d(x->shape, "global_avg_pool");
  const int b = x->shape[0], c = x->shape[1];
  const size_t plane = size_t(x->shape[2]) * x->shape[3];
  auto out = zeros<T>({b, c});
  for (int i = 0; i < b * c; ++i) {
    const T* p = x->v.data() + size_t(i) * plane;
    double acc = 0.0;
    for (size_t k = 0; k < plane; ++k) acc += double(p[k]);
    out->v[i] = T(acc / double(plane));
  }
  out->requires_grad = x->requires_grad;
  check_finite(*out, "global_avg_pool");
  if (g.recording() && out->requires_grad) {
    g.record([x, out, b, c, plane]() {
      if (detail::no_outgrad(out)) return;
      x->ensure_grad();
      for (int i = 0; i < b * c; ++i) {
        const T go = out->grad[i] / T(plane);
        T* gx = x->grad.data() + size_t(i) * plane;
        for (size_t k = 0; k < plane; ++k) gx[k] += go;
      }
    });
  }
  return out;
}

// Non-learned Keys bicubic resize of every plane; linear, so the gradient is
// the transpose of the forward map. Shares resample_core with the depth-frame
// path, which is what makes the DCSCN residual identity bit-exact.
template <class T>
TensorPtrT<T> bicubic_resize(GraphT<T>& g, const TensorPtrT<T>& x, int out_h,
                             int out_w, const KernelParams& params = {}) {
  detail::require_4d(x->shape, "bicubic_resize");
  require(out_h >= 1 && out_w >= 1, "bad-dimension",
          "bicubic_resize: output dims must be >= 1");
  const int b = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
  auto out = zeros<T>({b, c, out_h, out_w});
  const size_t in_plane = size_t(h) * w;
  const size_t out_plane = size_t(out_h) * out_w;
  for (int i = 0; i < b * c; ++i)
    resample_plane(x->v.data() + size_t(i) * in_plane, w, h,
                   out->v.data() + size_t(i) * out_plane, out_w, out_h, params);
  out->requires_grad = x->requires_grad;
  check_finite(*out, "bicubic_resize");
  if (g.recording() && out->requires_grad) {
    g.record([x, out, b, c, h, w, out_h, out_w, in_plane, out_plane, params]() {
      if (detail::no_outgrad(out)) return;
      x->ensure_grad();
      for (int i = 0; i < b * c; ++i)
        resample_plane_transpose(out->grad.data() + size_t(i) * out_plane,
                                 out_w, out_h,
                                 x->grad.data() + size_t(i) * in_plane, w, h,
                                 params);
    });
  }
  return out;
}

}  // namespace lowres

#pragma once

#include <string>
#include <vector>

#include "lowres/graph.hpp"
#include "lowres/ops.hpp"
#include "lowres/tensor.hpp"

namespace lowres {

namespace detail {

// 4-way unrolled dot product. The fixed reassociation pattern keeps results
// deterministic while giving the scalar loop some ILP; this is the hot path
// of the weight-gradient pass.
template <class T>
double dot4(const T* a, const T* b, size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += double(a[i]) * double(b[i]);
    s1 += double(a[i + 1]) * double(b[i + 1]);
    s2 += double(a[i + 2]) * double(b[i + 2]);
    s3 += double(a[i + 3]) * double(b[i + 3]);
  }
  for (; i < n; ++i) s0 += double(a[i]) * double(b[i]);
  return ((s0 + s1) + (s2 + s3));
}

template <class T>
double dot4_strided(const T* a, size_t stride_a, const T* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += double(a[i * stride_a]) * double(b[i]);
  return s;
}

// Kaiming fan-in init for conv weights
inline TensorPtrT<float> kaiming_conv(int co, int ci, int k, Rng& rng) {
  const float std = std::sqrt(2.0f / float(ci * k * k));
  return randn<float>({co, ci, k, k}, rng, std, true);
}

struct ConvDims {
  int b, ci, h, w, co, kh, kw, oh, ow, stride, pad;
};

// valid ow range for a given kernel column: 0 <= ow*stride - pad + kw < w
inline void ow_range(int kw, int w, int ow, int stride, int pad, int& lo,
                     int& hi) {
  const int num_lo = pad - kw;
  lo = num_lo <= 0 ? 0 : (num_lo + stride - 1) / stride;
  const int num_hi = w - 1 + pad - kw;
  hi = num_hi < 0 ? -1 : std::min(ow - 1, num_hi / stride);
}

}  // namespace detail

// 2-D convolution, NCHW, odd kernels, zero padding.
// out[h'] with h' = floor((h + 2*pad - kh)/stride) + 1.
//
// The forward/input-grad loops are saxpy-shaped over contiguous output rows
// so the compiler can vectorize them without reassociation; the weight grad
// uses dot4 above. Direct convolution, no im2col.
template <class T>
TensorPtrT<T> conv2d(GraphT<T>& g, const TensorPtrT<T>& x,
                     const TensorPtrT<T>& weight, const TensorPtrT<T>& bias,
                     int stride, int pad) {
  detail::require_4d(x->shape, "conv2d input");
  detail::require_4d(weight->shape, "conv2d weight");
  require(bias->shape.size() == 1, "bad-shape",
          "conv2d: bias must be 1-D, got " + shape_str(bias->shape));
  detail::ConvDims d;
  d.b = x->shape[0];
  d.ci = x->shape[1];
  d.h = x->shape[2];
  d.w = x->shape[3];
  d.co = weight->shape[0];
  d.kh = weight->shape[2];
  d.kw = weight->shape[3];
  d.stride = stride;
  d.pad = pad;
  require(weight->shape[1] == d.ci, "bad-shape",
          "conv2d: input channels (" + std::to_string(d.ci) +
              ") != weight in-channels (" + std::to_string(weight->shape[1]) +
              ")");
  require(bias->shape[0] == d.co, "bad-shape",
          "conv2d: bias length (" + std::to_string(bias->shape[0]) +
              ") != out channels (" + std::to_string(d.co) + ")");
  require(d.kh % 2 == 1 && d.kw % 2 == 1, "bad-shape",
          "conv2d: kernel dims must be odd, got " + shape_str(weight->shape));
  require(stride >= 1, "bad-shape", "conv2d: stride must be >= 1");
  require(pad >= 0, "bad-shape", "conv2d: padding must be >= 0");
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  require(d.h + 2 * pad >= d.kh && d.w + 2 * pad >= d.kw, "bad-shape",
          "conv2d: kernel larger than padded input (height " +
              std::to_string(d.h) + ", kernel " + std::to_string(d.kh) + ")");

  auto out = zeros<T>({d.b, d.co, d.oh, d.ow});
  const size_t in_plane = size_t(d.h) * d.w;
  const size_t out_plane = size_t(d.oh) * d.ow;
  const size_t ksz = size_t(d.kh) * d.kw;

  for (int bi = 0; bi < d.b; ++bi)
    for (int co = 0; co < d.co; ++co) {
      T* oplane = out->v.data() + (size_t(bi) * d.co + co) * out_plane;
      std::fill(oplane, oplane + out_plane, bias->v[co]);
      for (int ci = 0; ci < d.ci; ++ci) {
        const T* iplane = x->v.data() + (size_t(bi) * d.ci + ci) * in_plane;
        const T* wk = weight->v.data() + (size_t(co) * d.ci + ci) * ksz;
        for (int kh = 0; kh < d.kh; ++kh)
          for (int kw = 0; kw < d.kw; ++kw) {
            const T wv = wk[size_t(kh) * d.kw + kw];
            if (wv == T(0)) continue;
            int lo, hi;
            detail::ow_range(kw, d.w, d.ow, stride, pad, lo, hi);
            if (hi < lo) continue;
            const int cnt = hi - lo + 1;
            for (int oh = 0; oh < d.oh; ++oh) {
              const int ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= d.h) continue;
              const T* irow =
                  iplane + size_t(ih) * d.w + (size_t(lo) * stride - pad + kw);
              T* orow = oplane + size_t(oh) * d.ow + lo;
              if (stride == 1) {
                for (int i = 0; i < cnt; ++i) orow[i] += wv * irow[i];
              } else {
                for (int i = 0; i < cnt; ++i)
                  orow[i] += wv * irow[size_t(i) * stride];
              }
            }
          }
      }
    }
  out->requires_grad =
      x->requires_grad || weight->requires_grad || bias->requires_grad;
  check_finite(*out, "conv2d");

  if (g.recording() && out->requires_grad) {
    g.record([x, weight, bias, out, d, in_plane, out_plane, ksz]() {
      if (detail::no_outgrad(out)) return;
      if (bias->requires_grad) {
        bias->ensure_grad();
        for (int co = 0; co < d.co; ++co) {
          double acc = 0.0;
          for (int bi = 0; bi < d.b; ++bi) {
            const T* go = out->grad.data() + (size_t(bi) * d.co + co) * out_plane;
            for (size_t i = 0; i < out_plane; ++i) acc += double(go[i]);
          }
          bias->grad[co] += T(acc);
        }
      }
      if (x->requires_grad) {
        x->ensure_grad();
        for (int bi = 0; bi < d.b; ++bi)
          for (int co = 0; co < d.co; ++co) {
            const T* gplane =
                out->grad.data() + (size_t(bi) * d.co + co) * out_plane;
            for (int ci = 0; ci < d.ci; ++ci) {
              T* giplane = x->grad.data() + (size_t(bi) * d.ci + ci) * in_plane;
              const T* wk = weight->v.data() + (size_t(co) * d.ci + ci) * ksz;
              for (int kh = 0; kh < d.kh; ++kh)
                for (int kw = 0; kw < d.kw; ++kw) {
                  const T wv = wk[size_t(kh) * d.kw + kw];
                  if (wv == T(0)) continue;
                  int lo, hi;
                  detail::ow_range(kw, d.w, d.ow, d.stride, d.pad, lo, hi);
                  if (hi < lo) continue;
                  const int cnt = hi - lo + 1;
                  for (int oh = 0; oh < d.oh; ++oh) {
                    const int ih = oh * d.stride - d.pad + kh;
                    if (ih < 0 || ih >= d.h) continue;
                    T* girow = giplane + size_t(ih) * d.w +
                               (size_t(lo) * d.stride - d.pad + kw);
                    const T* grow = gplane + size_t(oh) * d.ow + lo;
                    if (d.stride == 1) {
                      for (int i = 0; i < cnt; ++i) girow[i] += wv * grow[i];
                    } else {
                      for (int i = 0; i < cnt; ++i)
                        girow[size_t(i) * d.stride] += wv * grow[i];
                    }
                  }
                }
            }
          }
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        for (int co = 0; co < d.co; ++co)
          for (int ci = 0; ci < d.ci; ++ci)
            for (int kh = 0; kh < d.kh; ++kh)
              for (int kw = 0; kw < d.kw; ++kw) {
                int lo, hi;
                detail::ow_range(kw, d.w, d.ow, d.stride, d.pad, lo, hi);
                if (hi < lo) continue;
                const size_t cnt = size_t(hi - lo + 1);
                double acc = 0.0;
                for (int bi = 0; bi < d.b; ++bi) {
                  const T* iplane =
                      x->v.data() + (size_t(bi) * d.ci + ci) * in_plane;
                  const T* gplane =
                      out->grad.data() + (size_t(bi) * d.co + co) * out_plane;
                  for (int oh = 0; oh < d.oh; ++oh) {
                    const int ih = oh * d.stride - d.pad + kh;
                    if (ih < 0 || ih >= d.h) continue;
                    const T* irow = iplane + size_t(ih) * d.w +
                                    (size_t(lo) * d.stride - d.pad + kw);
                    const T* grow = gplane + size_t(oh) * d.ow + lo;
                    acc += d.stride == 1
                               ? detail::dot4(irow, grow, cnt)
                               : detail::dot4_strided(irow, size_t(d.stride),
                                                      grow, cnt);
                  }
                }
                weight->grad[(size_t(co) * d.ci + ci) * ksz +
                             size_t(kh) * d.kw + kw] += T(acc);
              }
      }
    });
  }
  return out;
}

// Fully connected: x[b,n] * W[n,k] + bias[k] -> [b,k]
template <class T>
TensorPtrT<T> dense(GraphT<T>& g, const TensorPtrT<T>& x,
                    const TensorPtrT<T>& weight, const TensorPtrT<T>& bias) {
  require(x->shape.size() == 2, "bad-shape",
          "dense: input must be [b,n], got " + shape_str(x->shape));
  require(weight->shape.size() == 2, "bad-shape",
          "dense: weight must be [n,k], got " + shape_str(weight->shape));
  const int b = x->shape[0], n = x->shape[1], k = weight->shape[1];
  require(weight->shape[0] == n, "bad-shape",
          "dense: input features (" + std::to_string(n) +
              ") != weight rows (" + std::to_string(weight->shape[0]) + ")");
  require(bias->shape.size() == 1 && bias->shape[0] == k, "bad-shape",
          "dense: bias " + shape_str(bias->shape) + " != k=" + std::to_string(k));
  auto out = zeros<T>({b, k});
  for (int bi = 0; bi < b; ++bi) {
    T* orow = out->v.data() + size_t(bi) * k;
    for (int j = 0; j < k; ++j) orow[j] = bias->v[j];
    const T* xrow = x->v.data() + size_t(bi) * n;
    for (int i = 0; i < n; ++i) {
      const T xv = xrow[i];
      const T* wrow = weight->v.data() + size_t(i) * k;
      for (int j = 0; j < k; ++j) orow[j] += xv * wrow[j];
    }
  }
  out->requires_grad =
      x->requires_grad || weight->requires_grad || bias->requires_grad;
  check_finite(*out, "dense");
  if (g.recording() && out->requires_grad) {
    g.record([x, weight, bias, out, b, n, k]() {
      if (detail::no_outgrad(out)) return;
      if (bias->requires_grad) {
        bias->ensure_grad();
        for (int j = 0; j < k; ++j) {
          double acc = 0.0;
          for (int bi = 0; bi < b; ++bi) acc += double(out->grad[size_t(bi) * k + j]);
          bias->grad[j] += T(acc);
        }
      }
      if (x->requires_grad) {
        x->ensure_grad();
        for (int bi = 0; bi < b; ++bi) {
          const T* grow = out->grad.data() + size_t(bi) * k;
          T* gx = x->grad.data() + size_t(bi) * n;
          for (int i = 0; i < n; ++i)
            gx[i] += T(detail::dot4(weight->v.data() + size_t(i) * k, grow,
                                    size_t(k)));
        }
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        for (int bi = 0; bi < b; ++bi) {
          const T* xrow = x->v.data() + size_t(bi) * n;
          const T* grow = out->grad.data() + size_t(bi) * k;
          for (int i = 0; i < n; ++i) {
            const T xv = xrow[i];
            T* gw = weight->grad.data() + size_t(i) * k;
            for (int j = 0; j < k; ++j) gw[j] += xv * grow[j];
          }
        }
      }
    });
  }
  return out;
}

}  // namespace lowres

#pragma once

#include <cmath>
#include <vector>

#include "lowres/common.hpp"

namespace lowres {

struct KernelParams {
  double a = -0.5;  // Keys free parameter; support is [-2, 2]
};

// Keys piecewise-cubic convolution kernel.
//   (a+2)|x|^3 - (a+3)|x|^2 + 1          for |x| <= 1
//   a|x|^3 - 5a|x|^2 + 8a|x| - 4a        for 1 < |x| < 2
//   0                                    otherwise
inline double keys_kernel(double x, const KernelParams& params = {}) {
  const double a = params.a;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

// Precomputed taps for one 1-D resampling pass. Pixel centers sit at
// (i + 0.5) / n (align-corners false). When downscaling the kernel is widened
// by the scale factor (anti-aliasing); weights are normalized to sum to 1, so
// constant inputs are preserved for every phase and edge-clamped taps stay
// consistent. Indices are clamp-to-edge.
struct ResampleTaps {
  int out_size = 0;
  int taps_per_out = 0;
  std::vector<int> index;       // out_size * taps_per_out
  std::vector<double> weight;   // out_size * taps_per_out
};

inline ResampleTaps build_taps(int in_size, int out_size,
                               const KernelParams& params = {}) {
  require(in_size >= 1 && out_size >= 1, "bad-dimension",
          "resample: dimensions must be >= 1");
  const double scale = double(in_size) / double(out_size);
  const double support = scale > 1.0 ? 2.0 * scale : 2.0;
  const double kscale = scale > 1.0 ? 1.0 / scale : 1.0;

  ResampleTaps taps;
  taps.out_size = out_size;
  taps.taps_per_out = int(std::ceil(support)) * 2 + 1;
  taps.index.assign(size_t(out_size) * taps.taps_per_out, 0);
  taps.weight.assign(size_t(out_size) * taps.taps_per_out, 0.0);

  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const int first = int(std::ceil(center - support));
    double sum = 0.0;
    const size_t base = size_t(o) * taps.taps_per_out;
    for (int k = 0; k < taps.taps_per_out; ++k) {
      const int j = first + k;
      const double w = keys_kernel((double(j) - center) * kscale, params);
      int cj = j < 0 ? 0 : (j >= in_size ? in_size - 1 : j);
      taps.index[base + k] = cj;
      taps.weight[base + k] = w;
      sum += w;
    }
    for (int k = 0; k < taps.taps_per_out; ++k) taps.weight[base + k] /= sum;
  }
  return taps;
}

// One separable pass along the fastest axis: src is rows x in_size, dst is
// rows x out_size. Accumulates in double so constant planes survive exactly.
template <class S, class D>
void resample_rows(const S* src, int rows, int in_size, D* dst,
                   const ResampleTaps& taps) {
  for (int r = 0; r < rows; ++r) {
    const S* srow = src + size_t(r) * in_size;
    D* drow = dst + size_t(r) * taps.out_size;
    for (int o = 0; o < taps.out_size; ++o) {
      const size_t base = size_t(o) * taps.taps_per_out;
      double acc = 0.0;
      for (int k = 0; k < taps.taps_per_out; ++k)
        acc += taps.weight[base + k] * double(srow[taps.index[base + k]]);
      drow[o] = D(acc);
    }
  }
}

// Full separable 2-D resample of a single plane, horizontal then vertical.
// No clamping here; callers decide (depth frames clamp to [0,1], the autodiff
// op stays linear).
template <class S, class D>
void resample_plane(const S* src, int in_w, int in_h, D* dst, int out_w,
                    int out_h, const KernelParams& params = {}) {
  const ResampleTaps hx = build_taps(in_w, out_w, params);
  const ResampleTaps vy = build_taps(in_h, out_h, params);

  // horizontal: (in_h rows of in_w) -> (in_h rows of out_w)
  std::vector<double> mid(size_t(in_h) * out_w);
  resample_rows(src, in_h, in_w, mid.data(), hx);

  // vertical: operate column-wise via a transpose-free gather
  for (int y = 0; y < out_h; ++y) {
    const size_t base = size_t(y) * vy.taps_per_out;
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < vy.taps_per_out; ++k)
        acc += vy.weight[base + k] * mid[size_t(vy.index[base + k]) * out_w + x];
      dst[size_t(y) * out_w + x] = D(acc);
    }
  }
}

// Transpose of resample_plane (scatter with the same taps), used by the
// autodiff op: grad_src += A^T grad_dst for the linear map A above.
template <class T>
void resample_plane_transpose(const T* grad_dst, int out_w, int out_h,
                              T* grad_src, int in_w, int in_h,
                              const KernelParams& params = {}) {
  const ResampleTaps hx = build_taps(in_w, out_w, params);
  const ResampleTaps vy = build_taps(in_h, out_h, params);

  // reverse vertical: out_h x out_w -> in_h x out_w
  std::vector<double> mid(size_t(in_h) * out_w, 0.0);
  for (int y = 0; y < out_h; ++y) {
    const size_t base = size_t(y) * vy.taps_per_out;
    for (int k = 0; k < vy.taps_per_out; ++k) {
      const double w = vy.weight[base + k];
      double* mrow = mid.data() + size_t(vy.index[base + k]) * out_w;
      const T* grow = grad_dst + size_t(y) * out_w;
      for (int x = 0; x < out_w; ++x) mrow[x] += w * double(grow[x]);
    }
  }
  // reverse horizontal: in_h x out_w -> in_h x in_w
  for (int r = 0; r < in_h; ++r) {
    const double* mrow = mid.data() + size_t(r) * out_w;
    T* srow = grad_src + size_t(r) * in_w;
    for (int o = 0; o < out_w; ++o) {
      const size_t base = size_t(o) * hx.taps_per_out;
      for (int k = 0; k < hx.taps_per_out; ++k)
        srow[hx.index[base + k]] += T(hx.weight[base + k] * mrow[o]);
    }
  }
}

}  // namespace lowres

#pragma once

#include <algorithm>
#include <vector>

#include "lowres/depth_frame.hpp"
#include "lowres/rng.hpp"

namespace lowres {

struct AugmentParams {
  double flip_prob = 0.5;
  double max_shift_frac = 0.05;  // integer translation, edge-clamped
  double noise_sigma = 0.01;     // additive Gaussian, clamped to [0,1]
};

// Label-preserving training augmentation; dimensions never change. Draw
// order is fixed (flip, dx, dy, per-pixel noise) so a given rng state maps to
// exactly one transform.
inline DepthFrame augment(const DepthFrame& frame, Rng& rng,
                          const AugmentParams& params = {}) {
  require(frame.is_normalized(), "bad-frame", "augment: frame must be normalized");
  const int w = frame.width, h = frame.height;
  const bool flip = rng.bernoulli(params.flip_prob);
  const int max_shift = int(std::floor(params.max_shift_frac * std::max(w, h)));
  const int dx = max_shift > 0 ? int(rng.uniform_int(-max_shift, max_shift)) : 0;
  const int dy = max_shift > 0 ? int(rng.uniform_int(-max_shift, max_shift)) : 0;

  std::vector<float> out(frame.norm.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sx = std::clamp(x - dx, 0, w - 1);
      const int sy = std::clamp(y - dy, 0, h - 1);
      if (flip) sx = w - 1 - sx;
      out[size_t(y) * w + x] = frame.norm[size_t(sy) * w + sx];
    }
  if (params.noise_sigma > 0.0)
    for (auto& v : out)
      v = std::min(1.0f, std::max(0.0f, v + float(rng.normal(0.0, params.noise_sigma))));

  DepthFrame f = make_norm_frame(w, h, std::move(out), frame.range,
                                 frame.provenance);
  f.derived_from = frame.derived_from;
  return f;
}

}  // namespace lowres

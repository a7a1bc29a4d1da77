#pragma once

#include <algorithm>
#include <vector>

#include "lowres/depth_frame.hpp"
#include "lowres/resample_core.hpp"

namespace lowres {

// Keys bicubic resample of a normalized depth frame, separable horizontal
// then vertical, clamp-to-edge. The kernel overshoots near strong edges, so
// the result is clamped back to [0,1] (negative depths are not meaningful).
// The privacy tier of the output is recomputed from its dimensions.
inline DepthFrame resample_bicubic(const DepthFrame& frame, int out_w,
                                   int out_h, const KernelParams& params = {}) {
  require(frame.is_normalized(), "bad-frame",
          "resample_bicubic: frame must be normalized first");
  require(out_w >= 1 && out_h >= 1, "bad-dimension",
          "resample_bicubic: output dims must be >= 1");
  std::vector<float> out(size_t(out_w) * out_h);
  resample_plane(frame.norm.data(), frame.width, frame.height, out.data(),
                 out_w, out_h, params);
  DepthFrame f = make_norm_frame(out_w, out_h, std::move(out), frame.range,
                                 frame.provenance);
  f.derived_from = frame.derived_from;
  return f;
}

}  // namespace lowres

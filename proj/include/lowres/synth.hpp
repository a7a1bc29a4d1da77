#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowres/bicubic.hpp"
#include "lowres/manifest.hpp"
#include "lowres/rng.hpp"

namespace lowres {

// Deterministic procedural depth scenes: a room (back wall, floor, task
// furniture) plus a capsule/sphere human, rendered by per-pixel ray casting
// with a pinhole camera. Depth is the distance along the camera's depth axis,
// encoded as millimeters in a 16-bit channel, 0 = no return. All geometry is
// analytic; there are no mesh assets.

enum class Task { HandHygiene, ICU };
enum class View { Side, TopDown };

inline const char* to_string(Task t) {
  return t == Task::HandHygiene ? "hand_hygiene" : "icu";
}

inline constexpr int kIcuClasses = 5;  // background, in-bed, out-bed, in-chair, out-chair
inline constexpr double kClinicalPositiveRate = 11994.0 / 113379.0;

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

struct Box {
  Vec3 lo, hi;
};
struct Sphere {
  Vec3 c;
  double r = 0;
};
struct Capsule {
  Vec3 a, b;
  double r = 0;
};

struct Scene {
  double wall_z = 3.8;
  double floor_y = 0.0;
  std::vector<Box> boxes;
  std::vector<Sphere> spheres;
  std::vector<Capsule> capsules;
};

namespace detail {

constexpr double kNoHit = 1e30;

inline double hit_box(Vec3 o, Vec3 d, const Box& b) {
  double tmin = 0.0, tmax = kNoHit;
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  const double los[3] = {b.lo.x, b.lo.y, b.lo.z};
  const double his[3] = {b.hi.x, b.hi.y, b.hi.z};
  for (int i = 0; i < 3; ++i) {
    if (std::fabs(ds[i]) < 1e-12) {
      if (os[i] < los[i] || os[i] > his[i]) return kNoHit;
      continue;
    }
    double t0 = (los[i] - os[i]) / ds[i];
    double t1 = (his[i] - os[i]) / ds[i];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return kNoHit;
  }
  return tmin > 1e-9 ? tmin : kNoHit;
}

inline double hit_sphere(Vec3 o, Vec3 d, const Sphere& s) {
  const Vec3 oc = o - s.c;
  const double a = dot(d, d);
  const double b = 2.0 * dot(d, oc);
  const double c = dot(oc, oc) - s.r * s.r;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kNoHit;
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  return t > 1e-9 ? t : kNoHit;
}

inline double hit_capsule(Vec3 o, Vec3 d, const Capsule& cap) {
  const Vec3 ba = cap.b - cap.a;
  const double bb = dot(ba, ba);
  double best = kNoHit;
  if (bb > 1e-12) {
    // infinite cylinder around the axis, then clip by segment parameter
    const Vec3 oc = o - cap.a;
    const Vec3 m = d - (dot(d, ba) / bb) * ba;
    const Vec3 n = oc - (dot(oc, ba) / bb) * ba;
    const double a = dot(m, m);
    const double b2 = 2.0 * dot(m, n);
    const double c = dot(n, n) - cap.r * cap.r;
    if (a > 1e-12) {
      const double disc = b2 * b2 - 4.0 * a * c;
      if (disc >= 0.0) {
        const double t = (-b2 - std::sqrt(disc)) / (2.0 * a);
        if (t > 1e-9) {
          const Vec3 p = o + t * d;
          const double s = dot(p - cap.a, ba) / bb;
          if (s >= 0.0 && s <= 1.0) best = t;
        }
      }
    }
  }
  best = std::min(best, hit_sphere(o, d, {cap.a, cap.r}));
  best = std::min(best, hit_sphere(o, d, {cap.b, cap.r}));
  return best;
}

}  // namespace detail

struct ActorParams {
  bool present = false;
  double x = 0.0, z = 3.0;      // ground position, meters
  double height_scale = 1.0;    // 1.0 -> 1.75 m tall
  double lean = 0.0;            // torso lean in the x-y plane, radians
  double hip_y = 0.95;          // hip height
  Vec3 hand_l, hand_r;
  Vec3 foot_l, foot_r;
  std::optional<Vec3> knee_l, knee_r;  // set for seated/bent poses
};

struct SceneSpec {
  Task task = Task::HandHygiene;
  int label = 0;
  View view = View::Side;
  ActorParams actor;
  double noise_sigma_mm = 15.0;
  double dropout_prob = 0.004;
  uint64_t seed = 0;  // layout jitter + per-pixel sensor noise
};

namespace detail {

inline void add_actor(Scene& scene, const ActorParams& a) {
  const double s = a.height_scale;
  const Vec3 hip{a.x, a.hip_y, a.z};
  const Vec3 torso_dir{std::sin(a.lean), std::cos(a.lean), 0.0};
  const Vec3 shoulder = hip + (0.52 * s) * torso_dir;
  const Vec3 head = shoulder + (0.20 * s) * torso_dir;
  scene.capsules.push_back({hip, shoulder, 0.16 * s});
  scene.spheres.push_back({head, 0.115 * s});
  // arms: one capsule per arm, shoulders slightly offset in depth
  const Vec3 sh_l = shoulder + Vec3{0.0, 0.0, 0.10 * s};
  const Vec3 sh_r = shoulder + Vec3{0.0, 0.0, -0.10 * s};
  scene.capsules.push_back({sh_l, a.hand_l, 0.055 * s});
  scene.capsules.push_back({sh_r, a.hand_r, 0.055 * s});
  // legs: straight hip->foot, or bent via knee
  const Vec3 hip_l = hip + Vec3{0.0, 0.0, 0.09 * s};
  const Vec3 hip_r = hip + Vec3{0.0, 0.0, -0.09 * s};
  if (a.knee_l) {
    scene.capsules.push_back({hip_l, *a.knee_l, 0.080 * s});
    scene.capsules.push_back({*a.knee_l, a.foot_l, 0.065 * s});
  } else {
    scene.capsules.push_back({hip_l, a.foot_l, 0.080 * s});
  }
  if (a.knee_r) {
    scene.capsules.push_back({hip_r, *a.knee_r, 0.080 * s});
    scene.capsules.push_back({*a.knee_r, a.foot_r, 0.065 * s});
  } else {
    scene.capsules.push_back({hip_r, a.foot_r, 0.080 * s});
  }
}

inline Scene build_scene(const SceneSpec& spec, Rng& layout_rng) {
  Scene scene;
  const double jx = layout_rng.normal(0.0, 0.02);
  const double jz = layout_rng.normal(0.0, 0.02);
  scene.wall_z = 3.8 + layout_rng.normal(0.0, 0.015);
  if (spec.task == Task::HandHygiene) {
    // wall dispenser, right of center
    scene.boxes.push_back({{0.55 + jx, 1.15, scene.wall_z - 0.30},
                           {0.80 + jx, 1.45, scene.wall_z - 0.02}});
  } else {
    // bed on the left, chair (seat + backrest) on the right
    scene.boxes.push_back(
        {{-1.55 + jx, 0.0, 2.70 + jz}, {-0.35 + jx, 0.55, 3.50 + jz}});
    scene.boxes.push_back(
        {{0.75 + jx, 0.0, 2.80 + jz}, {1.25 + jx, 0.48, 3.25 + jz}});
    scene.boxes.push_back(
        {{1.18 + jx, 0.48, 2.80 + jz}, {1.32 + jx, 1.15, 3.25 + jz}});
  }
  if (spec.actor.present) add_actor(scene, spec.actor);
  return scene;
}

}  // namespace detail

// Render one 224x224 raw 16-bit depth frame. Deterministic per spec: the
// layout and noise substreams derive from spec.seed, and actor-related
// sampling never touches them, so an actor-absent spec reproduces the pure
// background render bit for bit.
inline DepthFrame gen_scene(const SceneSpec& spec) {
  Rng layout_rng(derive_seed(spec.seed, "layout"));
  const Scene scene = detail::build_scene(spec, layout_rng);

  const int side = kFullResSide;
  const double focal = 230.0;  // pixels
  const double cam_h = spec.view == View::Side ? 1.45 : 2.9;
  const double cam_z = spec.view == View::Side ? 0.0 : 3.0;

  std::vector<uint16_t> raw(size_t(side) * side);
  Rng noise_rng(derive_seed(spec.seed, "noise"));
  for (int v = 0; v < side; ++v) {
    for (int u = 0; u < side; ++u) {
      Vec3 o, d;
      if (spec.view == View::Side) {
        o = {0.0, cam_h, 0.0};
        d = {(u + 0.5 - side / 2.0) / focal, -(v + 0.5 - side / 2.0) / focal,
             1.0};
      } else {
        o = {0.0, cam_h, cam_z};
        d = {(u + 0.5 - side / 2.0) / focal, -1.0,
             (v + 0.5 - side / 2.0) / focal};
      }
      double t = detail::kNoHit;
      if (spec.view == View::Side) t = scene.wall_z - o.z;  // d.z == 1
      if (d.y < -1e-12) {
        const double tf = (scene.floor_y - o.y) / d.y;
        if (tf > 1e-9) t = std::min(t, tf);
      }
      for (const auto& b : scene.boxes) t = std::min(t, detail::hit_box(o, d, b));
      for (const auto& s : scene.spheres)
        t = std::min(t, detail::hit_sphere(o, d, s));
      for (const auto& c : scene.capsules)
        t = std::min(t, detail::hit_capsule(o, d, c));

      // per-pixel sensor noise: always draw both variates so the stream
      // position is independent of scene content
      const bool drop = noise_rng.bernoulli(spec.dropout_prob);
      const double noise = noise_rng.normal(0.0, spec.noise_sigma_mm);

      uint16_t mm = 0;
      if (t < detail::kNoHit) {
        const double depth_mm = t * 1000.0 + noise;
        if (depth_mm >= 800.0 && depth_mm <= 4000.0)
          mm = uint16_t(std::lround(depth_mm));
        else
          mm = 0;  // out of sensor envelope: no return
      }
      if (drop) mm = 0;
      raw[size_t(v) * side + u] = mm;
    }
  }
  return make_raw_frame(side, side, std::move(raw), {0.8, 4.0},
                        Provenance::Synthetic);
}

// ---- class-conditional pose samplers ----

namespace detail {

inline ActorParams standing_actor(Rng& rng, double x, double z) {
  ActorParams a;
  a.present = true;
  a.x = x;
  a.z = z;
  a.height_scale = 0.94 + 0.12 * rng.uniform();
  a.lean = rng.normal(0.0, 0.03);
  a.hip_y = 0.95 * a.height_scale;
  const double s = a.height_scale;
  a.hand_l = {x + 0.06, 0.72 * s, z + 0.12};
  a.hand_r = {x - 0.06, 0.72 * s, z - 0.12};
  a.foot_l = {x + 0.08 + rng.normal(0.0, 0.04), 0.04, z + 0.09};
  a.foot_r = {x - 0.08 + rng.normal(0.0, 0.04), 0.04, z - 0.09};
  return a;
}

}  // namespace detail

// Samples the pose for one scene instance of the given class. rng is the
// caller's instance substream; layout/noise randomness stays in gen_scene.
inline ActorParams sample_actor(Task task, int label, Rng& rng) {
  using detail::standing_actor;
  if (task == Task::HandHygiene) {
    if (label == 1) {
      // at the dispenser, forearm raised to it
      const double x = 0.22 + rng.normal(0.0, 0.03);
      const double z = 3.05 + rng.normal(0.0, 0.05);
      ActorParams a = standing_actor(rng, x, z);
      a.hand_r = {0.67 + rng.normal(0.0, 0.03), 1.30 + rng.normal(0.0, 0.04),
                  z + rng.normal(0.0, 0.03)};
      return a;
    }
    // negative: absent or walking elsewhere
    if (rng.bernoulli(0.65)) return {};
    const double x = -1.50 + 0.95 * rng.uniform();  // [-1.50, -0.55]
    const double z = 2.6 + 0.6 * rng.uniform();
    return standing_actor(rng, x, z);
  }

  // ICU: 0 background, 1 get in bed, 2 get out of bed, 3 get in chair,
  // 4 get out of chair
  switch (label) {
    case 0:
      return {};
    case 1: {
      // standing at the bed edge, leaning over it
      const double x = -0.16 + rng.normal(0.0, 0.04);
      const double z = 3.00 + rng.normal(0.0, 0.08);
      ActorParams a = standing_actor(rng, x, z);
      a.lean = -0.72 + rng.normal(0.0, 0.06);  // toward the bed (-x)
      a.hip_y = 0.88 * a.height_scale;
      a.hand_l = {-0.62 + rng.normal(0.0, 0.05), 0.64, z + 0.10};
      a.hand_r = {-0.55 + rng.normal(0.0, 0.05), 0.64, z - 0.10};
      return a;
    }
    case 2: {
      // sitting up from lying: semi-reclined on the bed, legs over the edge
      const double x = -0.85 + rng.normal(0.0, 0.05);
      const double z = 2.95 + rng.normal(0.0, 0.07);
      ActorParams a;
      a.present = true;
      a.x = x;
      a.z = z;
      a.height_scale = 0.94 + 0.12 * rng.uniform();
      a.lean = -0.90 + rng.normal(0.0, 0.07);  // reclined toward the bed head
      a.hip_y = 0.62;
      a.hand_l = {x + 0.10, 0.62, z + 0.12};
      a.hand_r = {x + 0.10, 0.62, z - 0.12};
      a.knee_l = Vec3{x + 0.30, 0.60, z + 0.10};
      a.knee_r = Vec3{x + 0.30, 0.60, z - 0.10};
      a.foot_l = {x + 0.55, 0.28, z + 0.10};
      a.foot_r = {x + 0.55, 0.28, z - 0.10};
      return a;
    }
    case 3: {
      // lowering onto the chair: hips just above the seat, knees bent
      const double x = 1.00 + rng.normal(0.0, 0.04);
      const double z = 3.00 + rng.normal(0.0, 0.06);
      ActorParams a;
      a.present = true;
      a.x = x;
      a.z = z;
      a.height_scale = 0.94 + 0.12 * rng.uniform();
      a.lean = -0.12 + rng.normal(0.0, 0.05);
      a.hip_y = 0.62 + rng.normal(0.0, 0.03);
      a.hand_l = {x - 0.30, 0.75, z + 0.12};
      a.hand_r = {x - 0.30, 0.75, z - 0.12};
      a.knee_l = Vec3{x - 0.28, 0.50, z + 0.10};
      a.knee_r = Vec3{x - 0.28, 0.50, z - 0.10};
      a.foot_l = {x - 0.30, 0.04, z + 0.10};
      a.foot_r = {x - 0.30, 0.04, z - 0.10};
      return a;
    }
    default: {
      // rising in front of the chair: half height, strong forward lean
      const double x = 0.52 + rng.normal(0.0, 0.05);
      const double z = 3.00 + rng.normal(0.0, 0.06);
      ActorParams a;
      a.present = true;
      a.x = x;
      a.z = z;
      a.height_scale = 0.94 + 0.12 * rng.uniform();
      a.lean = -0.45 + rng.normal(0.0, 0.06);
      a.hip_y = 0.80 + rng.normal(0.0, 0.04);
      a.hand_l = {x - 0.38, 0.95, z + 0.12};
      a.hand_r = {x - 0.38, 0.95, z - 0.12};
      a.knee_l = Vec3{x + 0.10, 0.45, z + 0.10};
      a.knee_r = Vec3{x + 0.10, 0.45, z - 0.10};
      a.foot_l = {x + 0.06, 0.04, z + 0.10};
      a.foot_r = {x + 0.06, 0.04, z - 0.10};
      return a;
    }
  }
}

// small per-frame wobble within an instance; label-preserving
inline ActorParams jitter_actor(const ActorParams& base, Rng& rng) {
  if (!base.present) return base;
  ActorParams a = base;
  const double dx = rng.normal(0.0, 0.012);
  const double dz = rng.normal(0.0, 0.012);
  auto nudge = [&](Vec3& p) {
    p.x += dx;
    p.z += dz;
  };
  a.x += dx;
  a.z += dz;
  a.lean += rng.normal(0.0, 0.015);
  nudge(a.hand_l);
  nudge(a.hand_r);
  nudge(a.foot_l);
  nudge(a.foot_r);
  if (a.knee_l) nudge(*a.knee_l);
  if (a.knee_r) nudge(*a.knee_r);
  return a;
}

}  // namespace lowres

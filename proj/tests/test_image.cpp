#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>

#include "lowres/bicubic.hpp"
#include "lowres/depth_frame.hpp"
#include "lowres/image_io.hpp"
#include "lowres/rng.hpp"

using namespace lowres;
namespace fs = std::filesystem;

TEST_CASE("keys kernel closed-form values", "[resample]") {
  CHECK(keys_kernel(0.0) == 1.0);
  CHECK(keys_kernel(1.0) == 0.0);
  CHECK(keys_kernel(-1.0) == 0.0);
  CHECK(keys_kernel(2.0) == 0.0);
  CHECK(keys_kernel(2.5) == 0.0);
  CHECK(keys_kernel(0.5) == Approx(0.5625).margin(1e-15));
  CHECK(keys_kernel(1.5) == Approx(-0.0625).margin(1e-15));
  CHECK(keys_kernel(-0.5) == keys_kernel(0.5));
}

TEST_CASE("keys kernel matches the closed-form cubic at random points",
          "[resample]") {
  // independent evaluation of the two cubic pieces
  auto reference = [](double x, double a) {
    x = std::fabs(x);
    if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    return 0.0;
  };
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const double x = -3.0 + 6.0 * rng.uniform();
    CHECK(std::fabs(keys_kernel(x) - reference(x, -0.5)) < 1e-12);
  }
}

TEST_CASE("partition of unity over 10000 random phases", "[resample]") {
  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double t = rng.uniform();  // phase in [0,1)
    const double sum = keys_kernel(t + 1.0) + keys_kernel(t) +
                       keys_kernel(1.0 - t) + keys_kernel(2.0 - t);
    worst = std::max(worst, std::fabs(sum - 1.0));
  }
  CHECK(worst < 1e-9);
}

namespace {

DepthFrame random_norm_frame(int w, int h, Rng& rng) {
  std::vector<float> data(size_t(w) * h);
  for (auto& v : data) v = float(rng.uniform());
  return make_norm_frame(w, h, std::move(data));
}

// Independent dual-route oracle: direct (non-separable) 2-D weighted sum with
// taps computed from the closed-form kernel in this test.
double direct_bicubic_at(const DepthFrame& f, int out_w, int out_h, int ox,
                         int oy) {
  auto taps_1d = [&](int in_size, int out_size, int o,
                     std::vector<std::pair<int, double>>& taps) {
    const double scale = double(in_size) / out_size;
    const double support = scale > 1.0 ? 2.0 * scale : 2.0;
    const double kscale = scale > 1.0 ? 1.0 / scale : 1.0;
    const double center = (o + 0.5) * scale - 0.5;
    double sum = 0.0;
    taps.clear();
    for (int j = int(std::ceil(center - support));
         j <= int(std::floor(center + support)); ++j) {
      const double w = keys_kernel((j - center) * kscale);
      taps.emplace_back(std::clamp(j, 0, in_size - 1), w);
      sum += w;
    }
    for (auto& t : taps) t.second /= sum;
  };
  std::vector<std::pair<int, double>> tx, ty;
  taps_1d(f.width, out_w, ox, tx);
  taps_1d(f.height, out_h, oy, ty);
  double acc = 0.0;
  for (const auto& [y, wy] : ty)
    for (const auto& [x, wx] : tx)
      acc += wy * wx * double(f.norm[size_t(y) * f.width + x]);
  return acc;
}

}  // namespace

TEST_CASE("resample dimension contract: 224 -> 56 and 224 -> 14", "[resample]") {
  Rng rng(1);
  auto f = random_norm_frame(224, 224, rng);
  auto q = resample_bicubic(f, 56, 56);
  CHECK(q.width == 56);
  CHECK(q.height == 56);
  CHECK(q.privacy == Privacy::Weak);
  auto s = resample_bicubic(f, 14, 14);
  CHECK(s.width == 14);
  CHECK(s.height == 14);
  CHECK(s.privacy == Privacy::Strong);
  CHECK_THROWS_AS(resample_bicubic(f, 0, 14), Error);
}

TEST_CASE("constant frames are preserved for all target sizes 1..64",
          "[resample]") {
  auto f = make_norm_frame(224, 224,
                           std::vector<float>(size_t(224) * 224, 0.37f));
  for (int s = 1; s <= 64; ++s) {
    auto r = resample_bicubic(f, s, s);
    for (float v : r.norm) {
      if (std::fabs(v - 0.37f) >= 1e-6f) {
        CAPTURE(s);
        REQUIRE(std::fabs(v - 0.37f) < 1e-6f);
      }
    }
  }
}

TEST_CASE("identity phase: same output dims reproduce the input", "[resample]") {
  Rng rng(9);
  auto f = random_norm_frame(23, 17, rng);
  auto r = resample_bicubic(f, 23, 17);
  for (size_t i = 0; i < f.norm.size(); ++i)
    CHECK(std::fabs(r.norm[i] - f.norm[i]) < 1e-6f);
}

TEST_CASE("separable resampler agrees with the direct 2-D oracle",
          "[resample]") {
  Rng rng(13);
  for (auto [w, h, ow, oh] : {std::tuple{16, 12, 7, 5},
                              std::tuple{9, 9, 21, 27},
                              std::tuple{32, 24, 8, 6}}) {
    auto f = random_norm_frame(w, h, rng);
    auto r = resample_bicubic(f, ow, oh);
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double want =
            std::min(1.0, std::max(0.0, direct_bicubic_at(f, ow, oh, ox, oy)));
        CHECK(double(r.norm[size_t(oy) * ow + ox]) == Approx(want).margin(1e-5));
      }
  }
}

TEST_CASE("resampling is deterministic and stays in [0,1]", "[resample]") {
  Rng rng(21);
  // hard edges provoke kernel overshoot; output must stay clamped
  std::vector<float> data(size_t(64) * 64, 0.0f);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if ((x / 8 + y / 8) % 2 == 0) data[size_t(y) * 64 + x] = 1.0f;
  auto f = make_norm_frame(64, 64, std::move(data));
  auto a = resample_bicubic(f, 150, 150);
  auto b = resample_bicubic(f, 150, 150);
  CHECK(a.norm == b.norm);
  for (float v : a.norm) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("cascaded 4x then 4x matches direct 16x privacy classification",
          "[resample]") {
  Rng rng(3);
  auto f = random_norm_frame(224, 224, rng);
  auto once = resample_bicubic(f, 14, 14);
  auto twice = resample_bicubic(resample_bicubic(f, 56, 56), 14, 14);
  CHECK(once.privacy == Privacy::Strong);
  CHECK(twice.privacy == Privacy::Strong);
  CHECK(once.width == twice.width);
}

TEST_CASE("normalize_depth maps the sensor range to [0,1]", "[depthframe]") {
  std::vector<uint16_t> raw = {800, 4000, 2400, 0, 500, 60000};
  auto f = make_raw_frame(6, 1, raw);
  auto n = normalize_depth(f);
  CHECK(n.norm[0] == Approx(0.0).margin(1e-6));
  CHECK(n.norm[1] == Approx(1.0).margin(1e-6));
  CHECK(n.norm[2] == Approx(0.5).margin(1e-6));
  CHECK(n.norm[3] == 0.0f);  // no-return sentinel
  CHECK(n.norm[4] == 0.0f);  // below range clamps
  CHECK(n.norm[5] == 1.0f);  // above range clamps

  DepthFrame bad = f;
  bad.range = {4.0, 0.8};
  CHECK_THROWS_AS(normalize_depth(bad), Error);
}

TEST_CASE("privacy level thresholds", "[privacy]") {
  CHECK(privacy_level(14, 14) == Privacy::Strong);
  CHECK(privacy_level(15, 15) == Privacy::Strong);
  CHECK(privacy_level(15, 16) == Privacy::Weak);
  CHECK(privacy_level(56, 56) == Privacy::Weak);
  CHECK(privacy_level(57, 10) == Privacy::None);
  CHECK(privacy_level(224, 224) == Privacy::None);
  // configurable thresholds
  CHECK(privacy_level(20, 20, 20, 40) == Privacy::Strong);
  CHECK_THROWS_AS(privacy_level(0, 5), Error);
}

TEST_CASE("privacy gate passes and refuses per policy", "[privacy]") {
  auto small = make_norm_frame(14, 14, std::vector<float>(196, 0.5f));
  auto mid = make_norm_frame(56, 56, std::vector<float>(size_t(56) * 56, 0.5f));
  auto big =
      make_norm_frame(224, 224, std::vector<float>(size_t(224) * 224, 0.5f));

  CHECK_NOTHROW(privacy_gate(small, Privacy::Strong));
  CHECK_NOTHROW(privacy_gate(mid, Privacy::Weak));
  CHECK_NOTHROW(privacy_gate(big, Privacy::None));
  CHECK_THROWS_AS(privacy_gate(big, Privacy::Strong), Error);
  CHECK_THROWS_AS(privacy_gate(mid, Privacy::Strong), Error);

  try {
    privacy_gate(big, Privacy::Strong);
    FAIL("expected violation");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("224x224") != std::string::npos);
    CHECK(msg.find("strong") != std::string::npos);
  }
}

TEST_CASE("pgm16 and png16 round-trip raw frames", "[imageio]") {
  auto dir = fs::temp_directory_path() / "lowres-test-io";
  fs::create_directories(dir);
  Rng rng(5);
  std::vector<uint16_t> raw(size_t(33) * 21);
  for (auto& v : raw)
    v = rng.bernoulli(0.02) ? 0 : uint16_t(800 + rng.index(3201));
  auto f = make_raw_frame(33, 21, raw);

  write_pgm16(dir / "f.pgm", f);
  auto fp = read_pgm16(dir / "f.pgm");
  CHECK(fp.width == 33);
  CHECK(fp.height == 21);
  CHECK(fp.raw == f.raw);

  write_png16(dir / "f.png", f);
  auto gp = read_png16(dir / "f.png");
  CHECK(gp.raw == f.raw);

  auto hdr = read_frame_header(dir / "f.pgm");
  CHECK(hdr.width == 33);
  CHECK(hdr.height == 21);

  CHECK_THROWS_AS(read_frame(dir / "missing.pgm"), Error);
  CHECK_THROWS_AS(read_frame(dir / "f.bmp"), Error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "haze/gaze_net.hpp"
#include "haze/spectral.hpp"

using namespace haze;
using namespace haze::gaze;

namespace {

GazeConfig desk() {
  GazeConfig cfg;
  cfg.img_h = cfg.img_w = 32;
  cfg.backbone_channels = {8, 16, 32};
  cfg.hidden = 64;
  return cfg;
}

Tensor rand_img(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::uniform({3, h, w}, rng, 0.0, 1.0);
}

Landmarks centered() {
  Landmarks lm;
  lm.left_eye = {0.5, 0.5};
  lm.right_eye = {0.5, 0.5};
  lm.nose = {0.5, 0.6};
  lm.mouth_left = {0.4, 0.8};
  lm.mouth_right = {0.6, 0.8};
  return lm;
}

}  // namespace

TEST_CASE("angles_to_vector conventions") {
  auto frontal = angles_to_vector({0.0, 0.0});
  CHECK(frontal[0] == doctest::Approx(0.0));
  CHECK(frontal[1] == doctest::Approx(0.0));
  CHECK(frontal[2] == doctest::Approx(-1.0));

  auto down = angles_to_vector({3.14159265358979323846 / 2.0, 0.0});
  CHECK(down[0] == doctest::Approx(0.0));
  CHECK(down[1] == doctest::Approx(-1.0));
  CHECK(std::fabs(down[2]) < 1e-12);

  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto v = angles_to_vector({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
    double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(std::fabs(n - 1.0) < 1e-12);
  }
}

TEST_CASE("eye patch at the image center is the central window") {
  Tensor img = rand_img(32, 32, 3);
  auto [left, right] = extract_eye_patches(img, centered(), 0.25);
  CHECK(left.shape() == Shape{3, 8, 8});
  // central 8x8 window of a 32x32 image starts at 12
  Tensor expect = crop2d(img, 12, 12, 8, 8);
  CHECK(left.data() == expect.data());
  CHECK(right.data() == expect.data());
}

TEST_CASE("eye patch at the corner is clamped inside the image") {
  Tensor img = rand_img(32, 32, 4);
  Landmarks lm = centered();
  lm.left_eye = {0.0, 0.0};
  lm.right_eye = {1.0, 1.0};
  auto [left, right] = extract_eye_patches(img, lm, 0.25);
  CHECK(left.data() == crop2d(img, 0, 0, 8, 8).data());
  CHECK(right.data() == crop2d(img, 24, 24, 8, 8).data());
}

TEST_CASE("eye patch equals a naive slice for random landmarks") {
  Tensor img = rand_img(32, 32, 5);
  Landmarks lm = centered();
  lm.left_eye = {0.3, 0.45};
  auto [left, right] = extract_eye_patches(img, lm, 0.25);
  // naive: center pixel = lround(frac*(extent-1)), start = clamp(center-4)
  int cx = static_cast<int>(std::lround(0.3 * 31));
  int cy = static_cast<int>(std::lround(0.45 * 31));
  int x0 = std::clamp(cx - 4, 0, 24), y0 = std::clamp(cy - 4, 0, 24);
  std::size_t hw = 32 * 32;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        CHECK(left.at({c, i, j}) ==
              img.data()[c * hw + static_cast<std::size_t>(y0 + i) * 32 + x0 + j]);
}

TEST_CASE("patch-size preconditions") {
  Tensor img = rand_img(32, 32, 6);
  CHECK_THROWS_AS(extract_eye_patches(img, centered(), 0.01), ParameterError);
  Landmarks bad = centered();
  bad.nose = {1.5, 0.5};
  CHECK_THROWS_AS(extract_eye_patches(img, bad, 0.25), ParameterError);
}

TEST_CASE("appearance maps agree with the spectral extractor bit for bit") {
  Tensor img = rand_img(32, 32, 7);
  Tensor map = build_global_map(img, 0.2);
  Tensor direct = spectral::hf_extract(img, 0.2);
  CHECK(map.data() == direct.data());

  Tensor flat = Tensor::full({3, 16, 16}, 0.5);
  for (double v : build_global_map(flat, 0.2).data()) CHECK(std::fabs(v) < 1e-9);
  CHECK(build_global_map(img, 0.0).data() == spectral::hf_extract(img, 0.0).data());

  auto [lp, rp] = extract_eye_patches(img, centered(), 0.25);
  auto [lm_, rm_] = build_local_maps(lp, rp, 0.2);
  Tensor again = spectral::hf_extract(lm_, 0.2);
  double diff = 0.0;
  for (std::size_t i = 0; i < lm_.data().size(); ++i)
    diff = std::max(diff, std::fabs(again.data()[i] - lm_.data()[i]));
  CHECK(diff < 1e-8);  // projection idempotence per patch
}

TEST_CASE("gaze_forward returns two finite scalars deterministically") {
  GazeConfig cfg = desk();
  GazeParams p = init_gaze(cfg, 11);
  Tensor img = rand_img(32, 32, 12);
  Tensor out = gaze_forward_raw(img, centered(), p, cfg);
  CHECK(out.shape() == Shape{2});
  CHECK(std::isfinite(out.data()[0]));
  CHECK(std::isfinite(out.data()[1]));
  Tensor out2 = gaze_forward_raw(img, centered(), p, cfg);
  CHECK(out.data() == out2.data());
}

TEST_CASE("zero head weights force the output to the head bias") {
  GazeConfig cfg = desk();
  GazeParams p = init_gaze(cfg, 13);
  std::fill(p.fc2_w.data_mut().begin(), p.fc2_w.data_mut().end(), 0.0);
  p.fc2_b.data_mut() = {0.21, -0.37};
  GazeAngles out = gaze_forward(rand_img(32, 32, 14), centered(), p, cfg);
  CHECK(out.theta == doctest::Approx(0.21));
  CHECK(out.phi == doctest::Approx(-0.37));
}

TEST_CASE("branches are not interchangeable") {
  GazeConfig cfg = desk();
  GazeParams p = init_gaze(cfg, 15);
  Tensor img = rand_img(32, 32, 16);
  Tensor base = gaze_forward_raw(img, centered(), p, cfg);
  std::swap(p.branches[0], p.branches[3]);  // permute which branch sees which input
  Tensor permuted = gaze_forward_raw(img, centered(), p, cfg);
  CHECK((base.data()[0] != permuted.data()[0] || base.data()[1] != permuted.data()[1]));
}

TEST_CASE("landmark guidance reaches the head") {
  GazeConfig cfg = desk();
  GazeParams p = init_gaze(cfg, 17);
  Tensor img = rand_img(32, 32, 18);
  Landmarks lm = centered();
  Tensor base = gaze_forward_raw(img, lm, p, cfg);
  lm.nose.x += 0.1;
  Tensor moved = gaze_forward_raw(img, lm, p, cfg);
  double delta = std::fabs(base.data()[0] - moved.data()[0]) +
                 std::fabs(base.data()[1] - moved.data()[1]);
  CHECK(delta > 0.0);
}

TEST_CASE("gaze gradient against finite differences") {
  GazeConfig cfg = desk();
  cfg.img_h = cfg.img_w = 16;
  cfg.backbone_channels = {4, 8};
  cfg.hidden = 16;
  GazeParams p = init_gaze(cfg, 19);
  Tensor img = rand_img(16, 16, 20);
  auto f = [&](const Tensor& t) {
    Tensor out = gaze_forward_raw(t, centered(), p, cfg);
    return sum(mul(out, out));
  };
  CHECK(finite_diff_check(f, img, 1e-6) < 1e-4);
}

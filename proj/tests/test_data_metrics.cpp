#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "haze/checkpoint.hpp"
#include "haze/image_io.hpp"
#include "haze/metrics.hpp"
#include "haze/resize.hpp"
#include "haze/synth.hpp"

using namespace haze;
using namespace haze::data;

namespace {

double keys_kernel(double x) {
  x = std::fabs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

// direct, non-separable weighted sum over the (widened) kernel support
double resize_oracle_at(const std::vector<double>& plane, int h, int w, double scale,
                        int oy, int ox) {
  double k = scale < 1.0 ? scale : 1.0;
  double uy = (oy + 0.5) / scale - 0.5;
  double ux = (ox + 0.5) / scale - 0.5;
  double acc = 0.0, wsum = 0.0;
  int reach = static_cast<int>(std::ceil(2.0 / k)) + 2;
  for (int y = static_cast<int>(std::floor(uy)) - reach; y <= std::ceil(uy) + reach; ++y)
    for (int x = static_cast<int>(std::floor(ux)) - reach; x <= std::ceil(ux) + reach; ++x) {
      double wy = k * keys_kernel(k * (uy - y));
      double wx = k * keys_kernel(k * (ux - x));
      if (wy == 0.0 || wx == 0.0) continue;
      int cy = std::clamp(y, 0, h - 1);
      int cx = std::clamp(x, 0, w - 1);
      acc += wy * wx * plane[static_cast<std::size_t>(cy) * w + cx];
      wsum += wy * wx;
    }
  return acc / wsum;
}

std::string temp_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() / (std::string("haze_dm_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

struct IrisFix {
  double x = 0.0;
  double y = 0.0;
};

// darkness-weighted centroid inside the sclera ellipse
IrisFix recover_iris_center(const FaceSample& s, bool left) {
  int H = s.hr.shape()[1], W = s.hr.shape()[2];
  FaceGeometry geo = FaceGeometry::for_size(H);
  gaze::Point eye = left ? s.landmarks.left_eye : s.landmarks.right_eye;
  double cx = eye.x * (W - 1), cy = eye.y * (H - 1);
  std::size_t hw = static_cast<std::size_t>(H) * W;
  double wsum = 0.0, xsum = 0.0, ysum = 0.0;
  for (int y = static_cast<int>(cy - geo.eye_ry) - 2; y <= cy + geo.eye_ry + 2; ++y)
    for (int x = static_cast<int>(cx - geo.eye_rx) - 2; x <= cx + geo.eye_rx + 2; ++x) {
      if (x < 0 || y < 0 || x >= W || y >= H) continue;
      double qx = (x - cx) / geo.eye_rx, qy = (y - cy) / geo.eye_ry;
      if (qx * qx + qy * qy > 1.0) continue;
      std::size_t i = static_cast<std::size_t>(y) * W + x;
      double lum = (s.hr.data()[i] + s.hr.data()[hw + i] + s.hr.data()[2 * hw + i]) / 3.0;
      double darkness = std::max(0.0, 0.55 - lum);
      wsum += darkness;
      xsum += darkness * x;
      ysum += darkness * y;
    }
  REQUIRE(wsum > 0.0);
  return {xsum / wsum - cx, ysum / wsum - cy};
}

}  // namespace

TEST_CASE("bicubic resize at factor 1 is the identity") {
  Rng rng(1);
  Tensor img = Tensor::uniform({3, 7, 9}, rng, 0.0, 1.0);
  Tensor out = bicubic_resize(img, 1.0);
  for (std::size_t i = 0; i < img.data().size(); ++i)
    CHECK(std::fabs(out.data()[i] - img.data()[i]) < 1e-12);
}

TEST_CASE("bicubic resize preserves constants at any factor") {
  Tensor img = Tensor::full({3, 8, 8}, 0.42);
  for (double f : {0.5, 0.25, 2.0, 3.0, 1.5}) {
    Tensor out = bicubic_resize(img, f);
    for (double v : out.data()) CHECK(std::fabs(v - 0.42) < 1e-10);
  }
}

TEST_CASE("downscale of a ramp matches the direct kernel-sum oracle") {
  int h = 4, w = 4;
  std::vector<double> ramp(3 * h * w);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h * w; ++i) ramp[c * h * w + i] = (i + c * 3) / 50.0;
  Tensor img = Tensor::from_data({3, h, w}, ramp);
  Tensor out = bicubic_resize(img, 0.5);
  REQUIRE(out.shape() == Shape{3, 2, 2});
  for (int c = 0; c < 3; ++c) {
    std::vector<double> plane(ramp.begin() + c * h * w, ramp.begin() + (c + 1) * h * w);
    for (int oy = 0; oy < 2; ++oy)
      for (int ox = 0; ox < 2; ++ox)
        CHECK(std::fabs(out.at({c, oy, ox}) - resize_oracle_at(plane, h, w, 0.5, oy, ox)) < 1e-9);
  }
}

TEST_CASE("larger images agree with the oracle at both factors") {
  Rng rng(3);
  Tensor img = Tensor::uniform({1, 12, 10}, rng, 0.0, 1.0);
  for (double f : {0.5, 2.0}) {
    Tensor out = bicubic_resize(img, f);
    for (int oy = 0; oy < out.shape()[1]; ++oy)
      for (int ox = 0; ox < out.shape()[2]; ++ox)
        CHECK(std::fabs(out.at({0, oy, ox}) -
                        resize_oracle_at(img.data(), 12, 10, f, oy, ox)) < 1e-9);
  }
}

TEST_CASE("resize plan weights are a partition of unity") {
  for (auto [in, out, scale] : {std::tuple{32, 8, 0.25}, {8, 32, 4.0}, {10, 7, 0.7}}) {
    ResizeAxisPlan plan = make_axis_plan(in, out, scale);
    for (int o = 0; o < plan.out; ++o) {
      double sum = 0.0;
      for (int t = 0; t < plan.taps; ++t) sum += plan.weight[o * plan.taps + t];
      CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("upsample op matches the pure resize and is differentiable") {
  Rng rng(4);
  Tensor img = Tensor::uniform({3, 8, 8}, rng, 0.0, 1.0);
  Tensor a = bicubic_resize(img, 4.0);
  Tensor b = bicubic_upsample_op(img, 32, 32);
  CHECK(a.data() == b.data());
  Tensor r = Tensor::uniform({3, 32, 32}, rng, -1.0, 1.0);
  auto f = [&](const Tensor& t) { return sum(mul(bicubic_upsample_op(t, 32, 32), r)); };
  CHECK(finite_diff_check(f, img, 1e-6) < 1e-6);
}

TEST_CASE("resize argument validation") {
  Tensor img = Tensor::full({3, 4, 4}, 0.5);
  CHECK_THROWS_AS(bicubic_resize(img, 0.0), ParameterError);
  CHECK_THROWS_AS(bicubic_resize(img, -1.0), ParameterError);
}

TEST_CASE("psnr closed forms") {
  Tensor a = Tensor::full({3, 4, 4}, 0.5);
  CHECK(std::isinf(metrics::psnr(a, a, 1.0)));

  Tensor b = Tensor::full({3, 4, 4}, 0.5 + 1.0 / 255.0);
  CHECK(metrics::psnr(a, b, 1.0) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-9));
  CHECK(metrics::psnr(a, b, 1.0) == doctest::Approx(48.1308).epsilon(1e-5));
  CHECK(metrics::psnr(a, b, 1.0) == metrics::psnr(b, a, 1.0));

  Rng rng(5);
  Tensor x = Tensor::uniform({2, 3, 3}, rng, 0.0, 1.0);
  Tensor y = Tensor::uniform({2, 3, 3}, rng, 0.0, 1.0);
  double mse = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    double d = x.data()[i] - y.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.data().size());
  CHECK(metrics::psnr(x, y, 1.0) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
  CHECK_THROWS_AS(metrics::psnr(x, Tensor::zeros({2, 3, 4})), DimensionError);
}

TEST_CASE("ssim closed forms and oracle") {
  Rng rng(6);
  Tensor a = Tensor::uniform({3, 16, 16}, rng, 0.0, 1.0);
  CHECK(metrics::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor zero = Tensor::zeros({1, 12, 12});
  Tensor one = Tensor::full({1, 12, 12}, 1.0);
  CHECK(metrics::ssim(zero, one) == doctest::Approx(1e-4 / (1.0 + 1e-4)).epsilon(1e-9));

  CHECK_THROWS_AS(metrics::ssim(Tensor::zeros({1, 8, 8}), Tensor::zeros({1, 8, 8})),
                  ParameterError);

  // independent windowed-statistics oracle on the luminance planes
  Tensor b = Tensor::uniform({3, 14, 14}, rng, 0.0, 1.0);
  Tensor a14 = Tensor::uniform({3, 14, 14}, rng, 0.0, 1.0);
  int h = 14, w = 14;
  std::vector<double> la(h * w, 0.0), lb(h * w, 0.0);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h * w; ++i) {
      la[i] += a14.data()[c * h * w + i] / 3.0;
      lb[i] += b.data()[c * h * w + i] / 3.0;
    }
  std::vector<double> win(11 * 11);
  double wsum = 0.0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      double dy = y - 5.0, dx = x - 5.0;
      win[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      wsum += win[y * 11 + x];
    }
  for (double& v : win) v /= wsum;
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + 11 <= h; ++y0)
    for (int x0 = 0; x0 + 11 <= w; ++x0) {
      double ma = 0, mb = 0;
      for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
          ma += win[y * 11 + x] * la[(y0 + y) * w + x0 + x];
          mb += win[y * 11 + x] * lb[(y0 + y) * w + x0 + x];
        }
      double va = 0, vb = 0, cov = 0;
      for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
          double da = la[(y0 + y) * w + x0 + x] - ma;
          double db = lb[(y0 + y) * w + x0 + x] - mb;
          va += win[y * 11 + x] * da * da;
          vb += win[y * 11 + x] * db * db;
          cov += win[y * 11 + x] * da * db;
        }
      total += ((2 * ma * mb + 1e-4) * (2 * cov + 9e-4)) /
               ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4));
      ++count;
    }
  CHECK(metrics::ssim(a14, b) == doctest::Approx(total / count).epsilon(1e-9));
}

TEST_CASE("angular error") {
  gaze::GazeAngles a{0.2, -0.4};
  CHECK(metrics::angular_error_deg(a, a) == doctest::Approx(0.0));

  gaze::GazeAngles frontal{0.0, 0.0};
  gaze::GazeAngles side{0.0, 3.14159265358979323846 / 2.0};
  CHECK(metrics::angular_error_deg(frontal, side) == doctest::Approx(90.0).epsilon(1e-12));

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    gaze::GazeAngles p{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    gaze::GazeAngles q{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    double e1 = metrics::angular_error_deg(p, q);
    double e2 = metrics::angular_error_deg(q, p);
    CHECK(e1 == doctest::Approx(e2));
    CHECK(e1 >= 0.0);
    CHECK(e1 <= 180.0);
  }
}

TEST_CASE("ppm round trip and header") {
  Rng rng(8);
  Tensor img = Tensor::uniform({3, 5, 6}, rng, 0.0, 1.0);
  auto bytes = encode_ppm(img);
  std::string header(bytes.begin(), bytes.begin() + 11);
  CHECK(header == "P6\n6 5\n255\n");
  Tensor back = decode_ppm(bytes.data(), bytes.size());
  REQUIRE(back.shape() == img.shape());
  for (std::size_t i = 0; i < img.data().size(); ++i)
    CHECK(std::fabs(back.data()[i] - img.data()[i]) <= 1.0 / 255.0);
}

TEST_CASE("ppm rejects malformed input without partial results") {
  Rng rng(9);
  Tensor img = Tensor::uniform({3, 4, 4}, rng, 0.0, 1.0);
  auto bytes = encode_ppm(img);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  CHECK_THROWS_AS(decode_ppm(truncated.data(), truncated.size()), FormatError);

  auto bad_magic = bytes;
  bad_magic[1] = '5';
  CHECK_THROWS_AS(decode_ppm(bad_magic.data(), bad_magic.size()), FormatError);

  try {
    decode_ppm(truncated.data(), truncated.size());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() >= 0);  // carries the byte position
  }
  CHECK_THROWS_AS(encode_ppm(Tensor::full({3, 2, 2}, 1.5)), UsageError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::string dir = temp_dir("ckpt");
  Rng rng(10);
  Checkpoint ckpt;
  ckpt.epoch = 17;
  ckpt.phase = 2;
  ckpt.seed = 99;
  ckpt.config_digest = fnv1a64("cfg");
  ckpt.add("a.w", Tensor::uniform({3, 4}, rng, -1, 1));
  ckpt.add("a.b", Tensor::uniform({4}, rng, -1, 1));
  ckpt.add("b.w", Tensor::uniform({2, 2, 3, 3}, rng, -1, 1));
  save_checkpoint(dir + "/m.ckpt", ckpt);
  Checkpoint back = load_checkpoint(dir + "/m.ckpt");
  CHECK(back.epoch == 17);
  CHECK(back.phase == 2);
  CHECK(back.seed == 99);
  CHECK(back.config_digest == ckpt.config_digest);
  REQUIRE(back.tensors.size() == 3);
  for (const auto& [name, t] : ckpt.tensors) {
    const Tensor* r = back.find(name);
    REQUIRE(r != nullptr);
    CHECK(r->shape() == t.shape());
    CHECK(r->data() == t.data());  // bitwise
  }

  CHECK_THROWS_AS(ckpt.add("a.w", Tensor::zeros({1})), UsageError);

  auto bytes = read_file(dir + "/m.ckpt");
  bytes[0] = 'X';
  write_file(dir + "/bad.ckpt", bytes.data(), bytes.size());
  CHECK_THROWS_AS(load_checkpoint(dir + "/bad.ckpt"), FormatError);

  bytes = read_file(dir + "/m.ckpt");
  bytes[4] = 0x7f;  // version word
  write_file(dir + "/badver.ckpt", bytes.data(), bytes.size());
  CHECK_THROWS_AS(load_checkpoint(dir + "/badver.ckpt"), FormatError);
}

TEST_CASE("synthetic sample determinism and preconditions") {
  gaze::GazeAngles g{0.2, -0.3};
  FaceSample a = synth_sample(g, 5, 32, 32, 77);
  FaceSample b = synth_sample(g, 5, 32, 32, 77);
  CHECK(a.hr.data() == b.hr.data());
  FaceSample c = synth_sample(g, 5, 32, 32, 78);
  CHECK(a.hr.data() != c.hr.data());

  CHECK_THROWS_AS(synth_sample({0.7, 0.0}, 0, 32, 32, 1), ParameterError);
  CHECK_THROWS_AS(synth_sample({0.0, 0.0}, 0, 8, 8, 1), ParameterError);
}

TEST_CASE("zero gaze centers the irises on the eye landmarks") {
  FaceSample s = synth_sample({0.0, 0.0}, 3, 64, 64, 5);
  for (bool left : {true, false}) {
    IrisFix off = recover_iris_center(s, left);
    CHECK(std::fabs(off.x) < 1.0);
    CHECK(std::fabs(off.y) < 1.0);
  }
}

TEST_CASE("maximal yaw displaces the iris by 0.3 of the eye radius") {
  FaceSample s = synth_sample({0.0, 0.6}, 4, 64, 64, 6);
  FaceGeometry geo = FaceGeometry::for_size(64);
  for (bool left : {true, false}) {
    IrisFix off = recover_iris_center(s, left);
    CHECK(std::fabs(off.x - 0.3 * geo.eye_rx) < 1.0);
    CHECK(std::fabs(off.y) < 1.0);
  }
}

TEST_CASE("generator label fidelity: offsets invert back to the gaze") {
  Rng rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    gaze::GazeAngles g{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    FaceSample s = synth_sample(g, trial, 64, 64, 13);
    FaceGeometry geo = FaceGeometry::for_size(64);
    IrisFix off = recover_iris_center(s, true);
    CHECK(std::fabs(off.x - geo.gain * std::tan(g.phi)) < 1.0);
    CHECK(std::fabs(off.y - geo.gain * std::tan(g.theta)) < 1.0);
  }
}

TEST_CASE("derive_lr matches the resize contract") {
  FaceSample s = synth_sample({0.1, 0.1}, 1, 32, 32, 3);
  derive_lr(s, 4);
  REQUIRE(s.lr.shape() == Shape{3, 8, 8});
  Tensor expect = bicubic_resize(s.hr, 0.25);
  CHECK(s.lr.data() == expect.data());
}

TEST_CASE("identity-disjoint split is deterministic") {
  Dataset ds = make_dataset(16, 32, 32, 4, 21);
  auto [train1, val1] = split_by_id(ds, 0.25, 9);
  auto [train2, val2] = split_by_id(ds, 0.25, 9);
  CHECK(train1.size() == train2.size());
  CHECK(val1.size() == 4);
  for (std::size_t i = 0; i < val1.size(); ++i) CHECK(val1.samples[i].id == val2.samples[i].id);
  for (const auto& v : val1.samples)
    for (const auto& t : train1.samples) CHECK(v.id != t.id);
  auto [train3, val3] = split_by_id(ds, 0.25, 10);
  bool same = val3.size() == val1.size();
  if (same)
    for (std::size_t i = 0; i < val1.size(); ++i) same = same && val1.samples[i].id == val3.samples[i].id;
  CHECK_FALSE(same);
}

TEST_CASE("manifest round trip") {
  std::string dir = temp_dir("manifest");
  std::vector<ManifestRow> rows = {{0, 0.125, -0.25, "hr_0000.ppm", "lr_0000.ppm"},
                                   {1, 0.5, 0.0625, "hr_0001.ppm", "lr_0001.ppm"}};
  write_manifest(dir + "/manifest.csv", rows);
  auto back = read_manifest(dir + "/manifest.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == 1);
  CHECK(back[1].gaze_theta == 0.5);
  CHECK(back[0].gaze_phi == -0.25);
  CHECK(back[0].hr_path == "hr_0000.ppm");
}

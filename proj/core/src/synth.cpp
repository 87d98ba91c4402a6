#include "haze/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "haze/image_io.hpp"
#include "haze/resize.hpp"
#include "haze/rng.hpp"

namespace haze::data {

namespace {

constexpr double kMaxAngle = 0.6;  // rad, generator domain bound

struct Rgb {
  double r, g, b;
};

struct Canvas {
  int h, w;
  std::vector<double> px;  // [3,h,w]

  void fill(const Rgb& c) {
    std::size_t hw = static_cast<std::size_t>(h) * w;
    std::fill(px.begin(), px.begin() + hw, c.r);
    std::fill(px.begin() + hw, px.begin() + 2 * hw, c.g);
    std::fill(px.begin() + 2 * hw, px.end(), c.b);
  }

  void blend(int x, int y, const Rgb& c, double cov) {
    if (cov <= 0.0 || x < 0 || y < 0 || x >= w || y >= h) return;
    cov = std::min(cov, 1.0);
    std::size_t hw = static_cast<std::size_t>(h) * w;
    std::size_t i = static_cast<std::size_t>(y) * w + x;
    px[i] += cov * (c.r - px[i]);
    px[hw + i] += cov * (c.g - px[hw + i]);
    px[2 * hw + i] += cov * (c.b - px[2 * hw + i]);
  }

  // soft-edged ellipse, ~1px feather controlled by the smaller semi-axis
  void ellipse(double cx, double cy, double rx, double ry, const Rgb& c) {
    double s = std::min(rx, ry);
    int x0 = static_cast<int>(std::floor(cx - rx - 2));
    int x1 = static_cast<int>(std::ceil(cx + rx + 2));
    int y0 = static_cast<int>(std::floor(cy - ry - 2));
    int y1 = static_cast<int>(std::ceil(cy + ry + 2));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        double qx = (x - cx) / rx;
        double qy = (y - cy) / ry;
        double q = std::sqrt(qx * qx + qy * qy);
        blend(x, y, c, 0.5 + (1.0 - q) * s);
      }
  }

  void disc(double cx, double cy, double r, const Rgb& c) { ellipse(cx, cy, r, r, c); }
};

Rgb id_tone(Rng& idr, const Rgb& base, double spread) {
  auto clampc = [](double v) { return std::clamp(v, 0.05, 0.95); };
  return {clampc(base.r + idr.uniform(-spread, spread)),
          clampc(base.g + idr.uniform(-spread, spread)),
          clampc(base.b + idr.uniform(-spread, spread))};
}

}  // namespace

FaceGeometry FaceGeometry::for_size(int h) {
  // iris disc stays inside the sclera at the extreme angles:
  // 0.3*eye_rx + iris_r <= eye_rx horizontally, <= eye_ry vertically
  FaceGeometry g;
  g.eye_rx = 0.14 * h;
  g.eye_ry = 0.095 * h;
  g.iris_r = 0.045 * h;
  g.gain = 0.3 * g.eye_rx / std::tan(kMaxAngle);
  return g;
}

gaze::Landmarks canonical_landmarks() {
  gaze::Landmarks lm;
  lm.left_eye = {0.32, 0.40};
  lm.right_eye = {0.68, 0.40};
  lm.nose = {0.50, 0.62};
  lm.mouth_left = {0.36, 0.80};
  lm.mouth_right = {0.64, 0.80};
  return lm;
}

FaceSample synth_sample(const gaze::GazeAngles& g, int id, int h, int w, std::uint64_t seed) {
  if (h < 16 || w < 16) throw ParameterError("synth_sample: size must be at least 16x16");
  if (std::fabs(g.theta) > kMaxAngle || std::fabs(g.phi) > kMaxAngle)
    throw ParameterError("synth_sample: |theta| and |phi| must be <= 0.6 rad");

  Rng idr(Rng::mix(0xFACEull, static_cast<std::uint64_t>(id)));
  Rgb skin = id_tone(idr, {0.82, 0.64, 0.52}, 0.14);
  Rgb iris = id_tone(idr, {0.22, 0.14, 0.10}, 0.12);
  Rgb sclera{0.93, 0.93, 0.93};
  Rgb nose_mark{skin.r * 0.72, skin.g * 0.72, skin.b * 0.72};
  Rgb mouth_mark{0.55, 0.25, 0.22};

  FaceGeometry geo = FaceGeometry::for_size(h);
  gaze::Landmarks lm = canonical_landmarks();

  Canvas cv{h, w, std::vector<double>(static_cast<std::size_t>(3) * h * w)};
  cv.fill(skin);

  double dx = geo.gain * std::tan(g.phi);
  double dy = geo.gain * std::tan(g.theta);
  for (const gaze::Point* eye : {&lm.left_eye, &lm.right_eye}) {
    double cx = eye->x * (w - 1);
    double cy = eye->y * (h - 1);
    cv.ellipse(cx, cy, geo.eye_rx, geo.eye_ry, sclera);
    cv.disc(cx + dx, cy + dy, geo.iris_r, iris);
  }
  cv.disc(lm.nose.x * (w - 1), lm.nose.y * (h - 1), 0.03 * h, nose_mark);
  cv.disc(lm.mouth_left.x * (w - 1), lm.mouth_left.y * (h - 1), 0.025 * h, mouth_mark);
  cv.disc(lm.mouth_right.x * (w - 1), lm.mouth_right.y * (h - 1), 0.025 * h, mouth_mark);

  Rng noise(Rng::mix(seed, static_cast<std::uint64_t>(id)));
  for (double& v : cv.px) v = std::clamp(v + 0.01 * noise.normal(), 0.0, 1.0);

  FaceSample s;
  s.hr = Tensor::from_data({3, h, w}, std::move(cv.px));
  s.landmarks = lm;
  s.gaze = g;
  s.id = id;
  return s;
}

void derive_lr(FaceSample& sample, int scale) {
  if (scale < 1) throw ParameterError("derive_lr: scale must be >= 1");
  sample.lr = bicubic_resize(sample.hr, 1.0 / scale);
}

Dataset make_dataset(int n, int h, int w, int scale, std::uint64_t seed) {
  if (n < 1) throw ParameterError("make_dataset: n must be >= 1");
  Dataset ds;
  Rng rng(Rng::mix(seed, 7));
  for (int id = 0; id < n; ++id) {
    gaze::GazeAngles g{rng.uniform(-0.55, 0.55), rng.uniform(-0.55, 0.55)};
    FaceSample s = synth_sample(g, id, h, w, seed);
    derive_lr(s, scale);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::pair<Dataset, Dataset> split_by_id(const Dataset& all, double val_frac, std::uint64_t seed) {
  if (!(val_frac >= 0.0 && val_frac < 1.0))
    throw ParameterError("split_by_id: val_frac must be in [0,1)");
  std::vector<int> ids;
  for (const auto& s : all.samples)
    if (std::find(ids.begin(), ids.end(), s.id) == ids.end()) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(Rng::mix(seed, 0x5917));
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng.below(i)]);
  std::size_t n_val = static_cast<std::size_t>(std::lround(val_frac * ids.size()));
  std::vector<bool> is_val_id(ids.size() ? *std::max_element(ids.begin(), ids.end()) + 1 : 0, false);
  for (std::size_t i = 0; i < n_val; ++i) is_val_id[ids[i]] = true;
  Dataset train, val;
  for (const auto& s : all.samples)
    (is_val_id[s.id] ? val : train).samples.push_back(s);
  return {train, val};
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ostringstream out;
  out << "id,gaze_theta,gaze_phi,hr_path,lr_path\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.id << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", r.gaze_theta);
    out << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", r.gaze_phi);
    out << buf << "," << r.hr_path << "," << r.lr_path << "\n";
  }
  std::string text = out.str();
  write_file(path, text.data(), text.size());
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw FormatError("manifest: empty file", 0);
  if (line != "id,gaze_theta,gaze_phi,hr_path,lr_path")
    throw FormatError("manifest: unexpected header '" + line + "'", 0);
  std::vector<ManifestRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestRow r;
    std::string field;
    try {
      std::getline(ss, field, ',');
      r.id = std::stoi(field);
      std::getline(ss, field, ',');
      r.gaze_theta = std::stod(field);
      std::getline(ss, field, ',');
      r.gaze_phi = std::stod(field);
    } catch (const std::exception&) {
      throw FormatError("manifest: malformed row '" + line + "'", 0);
    }
    if (!std::getline(ss, r.hr_path, ',') || !std::getline(ss, r.lr_path))
      throw FormatError("manifest: malformed row '" + line + "'", 0);
    rows.push_back(std::move(r));
  }
  return rows;
}

Dataset load_dataset(const std::string& dir) {
  auto rows = read_manifest(dir + "/manifest.csv");
  Dataset ds;
  for (const auto& r : rows) {
    FaceSample s;
    s.id = r.id;
    s.gaze = {r.gaze_theta, r.gaze_phi};
    s.landmarks = canonical_landmarks();
    s.hr = load_ppm(dir + "/" + r.hr_path);
    s.lr = load_ppm(dir + "/" + r.lr_path);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace haze::data

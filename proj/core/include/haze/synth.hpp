#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "haze/gaze_net.hpp"
#include "haze/tensor.hpp"

namespace haze::data {

struct FaceSample {
  Tensor hr;  // [3,H,W] in [0,1]
  Tensor lr;  // filled by derive_lr
  gaze::Landmarks landmarks;
  gaze::GazeAngles gaze;
  int id = 0;
};

// Geometry of the rendered face card, all derived from the image height.
struct FaceGeometry {
  double eye_rx = 0.0;      // sclera semi-axes, pixels
  double eye_ry = 0.0;
  double iris_r = 0.0;
  double gain = 0.0;        // k: iris offset = k*tan(angle), k = 0.3*eye_rx/tan(0.6)

  static FaceGeometry for_size(int h);
};

// The generator places every landmark at a fixed fraction of the image.
gaze::Landmarks canonical_landmarks();

// Face card with analytically known gaze: skin rectangle, two elliptical
// sclerae, iris discs displaced by (k*tan(phi), k*tan(theta)), nose and
// mouth-corner marks. Appearance (skin/iris tone) varies per id; additive
// noise sigma=0.01 comes from the seed.
FaceSample synth_sample(const gaze::GazeAngles& g, int id, int h, int w, std::uint64_t seed);

// lr = bicubic_resize(hr, 1/scale)
void derive_lr(FaceSample& sample, int scale);

struct Dataset {
  std::vector<FaceSample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

Dataset make_dataset(int n, int h, int w, int scale, std::uint64_t seed);

// Identity-disjoint split; ids are shuffled by the seed and the first
// round(val_frac*n) go to validation.
std::pair<Dataset, Dataset> split_by_id(const Dataset& all, double val_frac, std::uint64_t seed);

struct ManifestRow {
  int id = 0;
  double gaze_theta = 0.0;
  double gaze_phi = 0.0;
  std::string hr_path;
  std::string lr_path;
};

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::string& path);

// Reads a directory produced by the generate command (manifest + PPMs).
Dataset load_dataset(const std::string& dir);

}  // namespace haze::data

#pragma once

#include <cstdint>
#include <vector>

#include "haze/tensor.hpp"

namespace haze::spectral {

// Precomputed orthonormal DCT-II basis for one image size. Immutable and
// freely shareable once built.
struct DctPlan {
  int h = 0;
  int w = 0;
  std::vector<double> basis_h;  // [h*h], basis_h[k*h+n] = a_k cos(pi(2n+1)k/(2h))
  std::vector<double> basis_w;  // [w*w]
};

DctPlan make_plan(int h, int w);
const DctPlan& shared_plan(int h, int w);  // process-wide cache

// Raw per-plane transforms, in and out hold h*w row-major samples.
void dct2_plane(const DctPlan& plan, const double* in, double* out);
void idct2_plane(const DctPlan& plan, const double* in, double* out);

// Binary mask over the spectral plane: bit(x,y) = 0 iff y < -x + 2*lambda*h,
// x horizontal, y vertical, zero-based. The boundary itself is kept.
struct SpectralMask {
  int h = 0;
  int w = 0;
  double lambda = 0.0;
  std::vector<std::uint8_t> bits;  // [y*w + x]

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * w + x] != 0; }
};

SpectralMask build_mask(int h, int w, double lambda);

// Per-channel orthonormal transforms and the high-frequency extractor
// idct2(dct2(x) * mask). All three are linear; dct2/idct2 are adjoint to
// each other and the extractor is its own adjoint.
Tensor dct2(const DctPlan& plan, const Tensor& x);
Tensor idct2(const DctPlan& plan, const Tensor& x);
Tensor dct2(const Tensor& x);
Tensor idct2(const Tensor& x);
Tensor hf_extract(const Tensor& x, double lambda);

// Non-recording path used by the generator-side tooling.
void hf_extract_plane(const DctPlan& plan, const SpectralMask& mask,
                      const double* in, double* out);

}  // namespace haze::spectral

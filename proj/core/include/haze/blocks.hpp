#pragma once

#include <functional>
#include <string>
#include <vector>

#include "haze/rng.hpp"
#include "haze/tensor.hpp"

namespace haze {
// Named handles onto the learnable leaves of a module, in a stable order.
using ParamList = std::vector<std::pair<std::string, Tensor>>;
}  // namespace haze

namespace haze::blocks {

// Squeeze/excite gate computed from globally pooled features. The 1x1
// convolutions of the CA layer act on a [C] vector, so they are plain
// fully connected maps here.
struct CaParams {
  int reduction = 4;
  Tensor down_w, down_b;  // [C/r, C], [C/r]
  Tensor up_w, up_b;      // [C, C/r], [C]

  void collect(const std::string& prefix, ParamList& out);
};

struct RcabParams {
  Tensor conv1_w, conv1_b;  // [C,C,3,3], [C]
  Tensor conv2_w, conv2_b;
  CaParams ca;

  void collect(const std::string& prefix, ParamList& out);
};

struct HfabParams {
  std::vector<RcabParams> hf_branch;    // two RCABs on the extracted features
  std::vector<RcabParams> main_branch;  // five RCABs on the original features

  void collect(const std::string& prefix, ParamList& out);
};

struct DownParams {
  int stride = 2;
  Tensor conv1_w, conv1_b;  // strided
  Tensor conv2_w, conv2_b;  // stride 1

  void collect(const std::string& prefix, ParamList& out);
};

struct UpParams {
  int factor = 2;
  Tensor conv1_w, conv1_b;  // C -> C*r^2, feeds the shuffle
  Tensor conv2_w, conv2_b;

  void collect(const std::string& prefix, ParamList& out);
};

CaParams init_ca(int channels, int reduction, Rng& rng);
RcabParams init_rcab(int channels, int reduction, Rng& rng);
HfabParams init_hfab(int channels, int reduction, Rng& rng,
                     int hf_blocks = 2, int main_blocks = 5);
DownParams init_down(int in_ch, int out_ch, int stride, Rng& rng);
UpParams init_up(int in_ch, int out_ch, int factor, Rng& rng);

// weights uniform in +-sqrt(1/fan_in), biases zero
Tensor init_conv_weight(int out_ch, int in_ch, int k, Rng& rng);
Tensor init_fc_weight(int out_n, int in_n, Rng& rng);

Tensor channel_attention(const Tensor& x, const CaParams& p);
Tensor rcab_forward(const Tensor& x, const RcabParams& p);

// branch A: hf_branch over hf_extract(x, lambda); branch B: main_branch over
// x; output A + B. extract_hf=false feeds branch A with x directly (used by
// the once-global extractor wiring).
Tensor hfab_forward(const Tensor& x, const HfabParams& p, double lambda,
                    bool extract_hf = true);

Tensor pixel_shuffle(const Tensor& x, int r);
Tensor down_block(const Tensor& x, const DownParams& p);
Tensor up_block(const Tensor& x, const UpParams& p);

}  // namespace haze::blocks

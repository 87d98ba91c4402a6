#include "haze/blocks.hpp"

#include <cmath>

#include "haze/spectral.hpp"

namespace haze::blocks {

Tensor init_conv_weight(int out_ch, int in_ch, int k, Rng& rng) {
  double bound = std::sqrt(1.0 / (static_cast<double>(in_ch) * k * k));
  return Tensor::uniform({out_ch, in_ch, k, k}, rng, -bound, bound, true);
}

Tensor init_fc_weight(int out_n, int in_n, Rng& rng) {
  double bound = std::sqrt(1.0 / in_n);
  return Tensor::uniform({out_n, in_n}, rng, -bound, bound, true);
}

CaParams init_ca(int channels, int reduction, Rng& rng) {
  if (reduction < 1 || channels % reduction != 0)
    throw ParameterError("channel_attention: channels " + std::to_string(channels) +
                         " not divisible by reduction " + std::to_string(reduction));
  CaParams p;
  p.reduction = reduction;
  int mid = channels / reduction;
  p.down_w = init_fc_weight(mid, channels, rng);
  p.down_b = Tensor::zeros({mid}, true);
  p.up_w = init_fc_weight(channels, mid, rng);
  p.up_b = Tensor::zeros({channels}, true);
  return p;
}

RcabParams init_rcab(int channels, int reduction, Rng& rng) {
  RcabParams p;
  p.conv1_w = init_conv_weight(channels, channels, 3, rng);
  p.conv1_b = Tensor::zeros({channels}, true);
  p.conv2_w = init_conv_weight(channels, channels, 3, rng);
  p.conv2_b = Tensor::zeros({channels}, true);
  p.ca = init_ca(channels, reduction, rng);
  return p;
}

HfabParams init_hfab(int channels, int reduction, Rng& rng, int hf_blocks, int main_blocks) {
  HfabParams p;
  for (int i = 0; i < hf_blocks; ++i) p.hf_branch.push_back(init_rcab(channels, reduction, rng));
  for (int i = 0; i < main_blocks; ++i) p.main_branch.push_back(init_rcab(channels, reduction, rng));
  return p;
}

DownParams init_down(int in_ch, int out_ch, int stride, Rng& rng) {
  DownParams p;
  p.stride = stride;
  p.conv1_w = init_conv_weight(out_ch, in_ch, 3, rng);
  p.conv1_b = Tensor::zeros({out_ch}, true);
  p.conv2_w = init_conv_weight(out_ch, out_ch, 3, rng);
  p.conv2_b = Tensor::zeros({out_ch}, true);
  return p;
}

UpParams init_up(int in_ch, int out_ch, int factor, Rng& rng) {
  UpParams p;
  p.factor = factor;
  p.conv1_w = init_conv_weight(out_ch * factor * factor, in_ch, 3, rng);
  p.conv1_b = Tensor::zeros({out_ch * factor * factor}, true);
  p.conv2_w = init_conv_weight(out_ch, out_ch, 3, rng);
  p.conv2_b = Tensor::zeros({out_ch}, true);
  return p;
}

void CaParams::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".down.w", down_w);
  out.emplace_back(prefix + ".down.b", down_b);
  out.emplace_back(prefix + ".up.w", up_w);
  out.emplace_back(prefix + ".up.b", up_b);
}

void RcabParams::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".conv1.w", conv1_w);
  out.emplace_back(prefix + ".conv1.b", conv1_b);
  out.emplace_back(prefix + ".conv2.w", conv2_w);
  out.emplace_back(prefix + ".conv2.b", conv2_b);
  ca.collect(prefix + ".ca", out);
}

void HfabParams::collect(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < hf_branch.size(); ++i)
    hf_branch[i].collect(prefix + ".hf" + std::to_string(i), out);
  for (std::size_t i = 0; i < main_branch.size(); ++i)
    main_branch[i].collect(prefix + ".main" + std::to_string(i), out);
}

void DownParams::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".conv1.w", conv1_w);
  out.emplace_back(prefix + ".conv1.b", conv1_b);
  out.emplace_back(prefix + ".conv2.w", conv2_w);
  out.emplace_back(prefix + ".conv2.b", conv2_b);
}

void UpParams::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".conv1.w", conv1_w);
  out.emplace_back(prefix + ".conv1.b", conv1_b);
  out.emplace_back(prefix + ".conv2.w", conv2_w);
  out.emplace_back(prefix + ".conv2.b", conv2_b);
}

Tensor channel_attention(const Tensor& x, const CaParams& p) {
  if (x.rank() != 3) throw DimensionError("channel_attention: expected [C,H,W]");
  int C = x.shape()[0];
  if (p.reduction < 1 || C % p.reduction != 0)
    throw ParameterError("channel_attention: channels " + std::to_string(C) +
                         " not divisible by reduction " + std::to_string(p.reduction));
  Tensor pooled = reshape(global_avg_pool(x), {C});
  Tensor squeezed = relu(matmul_fc(pooled, p.down_w, p.down_b));
  Tensor gate = sigmoid(matmul_fc(squeezed, p.up_w, p.up_b));
  return mul(x, reshape(gate, {C, 1, 1}));
}

Tensor rcab_forward(const Tensor& x, const RcabParams& p) {
  Tensor y = conv2d(relu(conv2d(x, p.conv1_w, p.conv1_b, 1, 1)), p.conv2_w, p.conv2_b, 1, 1);
  return add(x, channel_attention(y, p.ca));
}

Tensor hfab_forward(const Tensor& x, const HfabParams& p, double lambda, bool extract_hf) {
  Tensor a = extract_hf ? spectral::hf_extract(x, lambda) : x;
  for (const RcabParams& r : p.hf_branch) a = rcab_forward(a, r);
  Tensor b = x;
  for (const RcabParams& r : p.main_branch) b = rcab_forward(b, r);
  return add(a, b);
}

Tensor pixel_shuffle(const Tensor& x, int r) {
  if (x.rank() != 3) throw DimensionError("pixel_shuffle: expected [C,H,W]");
  if (r < 1) throw ParameterError("pixel_shuffle: factor must be >= 1");
  int Cin = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  if (Cin % (r * r) != 0)
    throw ParameterError("pixel_shuffle: " + std::to_string(Cin) +
                         " channels not divisible by r^2 = " + std::to_string(r * r));
  int C = Cin / (r * r);
  int Ho = H * r, Wo = W * r;
  std::vector<double> out(x.data().size());
  const auto& xd = x.data();
  for (int c = 0; c < C; ++c)
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        std::size_t src = (static_cast<std::size_t>(c) * r * r + dy * r + dx) * H * W;
        for (int i = 0; i < H; ++i)
          for (int j = 0; j < W; ++j)
            out[(static_cast<std::size_t>(c) * Ho + i * r + dy) * Wo + j * r + dx] =
                xd[src + static_cast<std::size_t>(i) * W + j];
      }
  auto xn = x.node();
  return detail::make_op("pixel_shuffle", {C, Ho, Wo}, std::move(out), {x},
                         [xn, C, H, W, r, Ho, Wo](TensorNode& self) {
    xn->ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int dy = 0; dy < r; ++dy)
        for (int dx = 0; dx < r; ++dx) {
          std::size_t src = (static_cast<std::size_t>(c) * r * r + dy * r + dx) * H * W;
          for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
              xn->grad[src + static_cast<std::size_t>(i) * W + j] +=
                  self.grad[(static_cast<std::size_t>(c) * Ho + i * r + dy) * Wo + j * r + dx];
        }
  });
}

Tensor down_block(const Tensor& x, const DownParams& p) {
  if (x.rank() != 3) throw DimensionError("down_block: expected [C,H,W]");
  if (x.shape()[1] % p.stride != 0 || x.shape()[2] % p.stride != 0)
    throw DimensionError("down_block: extents " + shape_str(x.shape()) +
                         " not divisible by stride " + std::to_string(p.stride));
  Tensor y = conv2d(x, p.conv1_w, p.conv1_b, p.stride, 1);
  return conv2d(leaky_relu(y), p.conv2_w, p.conv2_b, 1, 1);
}

Tensor up_block(const Tensor& x, const UpParams& p) {
  Tensor y = conv2d(x, p.conv1_w, p.conv1_b, 1, 1);
  return conv2d(pixel_shuffle(y, p.factor), p.conv2_w, p.conv2_b, 1, 1);
}

}  // namespace haze::blocks

#include <benchmark/benchmark.h>

#include "haze/blocks.hpp"
#include "haze/gaze_net.hpp"
#include "haze/resize.hpp"
#include "haze/sr_net.hpp"
#include "haze/synth.hpp"

using namespace haze;

static void BM_Conv2d(benchmark::State& state) {
  int c = static_cast<int>(state.range(0));
  int n = static_cast<int>(state.range(1));
  Rng rng(1);
  Tensor x = Tensor::uniform({c, n, n}, rng, -1, 1);
  Tensor w = Tensor::uniform({c, c, 3, 3}, rng, -0.2, 0.2);
  Tensor b = Tensor::zeros({c});
  for (auto _ : state) {
    Tensor y = conv2d(x, w, b, 1, 1);
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * c * c * 9 * n * n);
}
BENCHMARK(BM_Conv2d)->Args({16, 8})->Args({16, 32})->Args({64, 28});

static void BM_HfabForward(benchmark::State& state) {
  Rng rng(2);
  blocks::HfabParams p = blocks::init_hfab(16, 4, rng);
  Tensor x = Tensor::uniform({16, 8, 8}, rng, -1, 1);
  for (auto _ : state) {
    Tensor y = blocks::hfab_forward(x, p, 0.2);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_HfabForward);

static void BM_SrForward(benchmark::State& state) {
  sr::SrConfig cfg;
  cfg.scale = 4;
  cfg.channels = 16;
  cfg.num_hfab = 2;
  cfg.hr_h = cfg.hr_w = 32;
  sr::SrParams p = sr::init_sr(cfg, 3);
  Rng rng(4);
  Tensor lr = Tensor::uniform({3, 8, 8}, rng, 0, 1);
  for (auto _ : state) {
    Tensor y = sr::sr_forward(lr, p, cfg);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_SrForward);

static void BM_SrForwardBackward(benchmark::State& state) {
  sr::SrConfig cfg;
  cfg.scale = 4;
  cfg.channels = 16;
  cfg.num_hfab = 2;
  cfg.hr_h = cfg.hr_w = 32;
  sr::SrParams p = sr::init_sr(cfg, 5);
  Rng rng(6);
  Tensor lr = Tensor::uniform({3, 8, 8}, rng, 0, 1);
  Tensor target = Tensor::uniform({3, 32, 32}, rng, 0, 1);
  ParamList params = p.params();
  for (auto _ : state) {
    for (auto& [name, t] : params) t.zero_grad();
    Tensor loss = sum(abs(sub(sr::sr_forward(lr, p, cfg), target)));
    backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_SrForwardBackward);

static void BM_GazeForward(benchmark::State& state) {
  gaze::GazeConfig cfg;
  cfg.img_h = cfg.img_w = 32;
  cfg.backbone_channels = {8, 16, 32};
  cfg.hidden = 64;
  gaze::GazeParams p = gaze::init_gaze(cfg, 7);
  Rng rng(8);
  Tensor img = Tensor::uniform({3, 32, 32}, rng, 0, 1);
  gaze::Landmarks lm = data::canonical_landmarks();
  for (auto _ : state) {
    Tensor out = gaze::gaze_forward_raw(img, lm, p, cfg);
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_GazeForward);

static void BM_SynthSample(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  int id = 0;
  for (auto _ : state) {
    data::FaceSample s = data::synth_sample({0.2, -0.1}, id++ % 64, n, n, 9);
    benchmark::DoNotOptimize(s.hr.data().data());
  }
}
BENCHMARK(BM_SynthSample)->Arg(32)->Arg(112);

static void BM_BicubicResize(benchmark::State& state) {
  Rng rng(10);
  Tensor img = Tensor::uniform({3, 32, 32}, rng, 0, 1);
  for (auto _ : state) {
    Tensor lr = data::bicubic_resize(img, 0.25);
    benchmark::DoNotOptimize(lr.data().data());
  }
}
BENCHMARK(BM_BicubicResize);

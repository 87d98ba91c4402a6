#include <benchmark/benchmark.h>

#include "haze/rng.hpp"
#include "haze/spectral.hpp"

using namespace haze;

static void BM_Dct2(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  const spectral::DctPlan& plan = spectral::shared_plan(n, n);
  Rng rng(1);
  std::vector<double> in(static_cast<std::size_t>(n) * n), out(in.size());
  for (double& v : in) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    spectral::dct2_plane(plan, in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Dct2)->Arg(8)->Arg(16)->Arg(32)->Arg(112);

static void BM_Idct2(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  const spectral::DctPlan& plan = spectral::shared_plan(n, n);
  Rng rng(2);
  std::vector<double> in(static_cast<std::size_t>(n) * n), out(in.size());
  for (double& v : in) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    spectral::idct2_plane(plan, in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Idct2)->Arg(8)->Arg(32);

static void BM_HfExtract(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  Rng rng(3);
  Tensor img = Tensor::uniform({3, n, n}, rng, 0.0, 1.0);
  for (auto _ : state) {
    Tensor out = spectral::hf_extract(img, 0.2);
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_HfExtract)->Arg(8)->Arg(32)->Arg(112);

static void BM_BuildMask(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    spectral::SpectralMask m = spectral::build_mask(n, n, 0.2);
    benchmark::DoNotOptimize(m.bits.data());
  }
}
BENCHMARK(BM_BuildMask)->Arg(32)->Arg(112);

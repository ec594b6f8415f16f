// Serial reference kernels against their OpenMP counterparts.
//
//   zads_bench [--benchmark_filter=REGEX]
//
// Sizes are pixel counts of square images (64^2, 256^2, 640^2).

#include <benchmark/benchmark.h>

#include <vector>

#include "zads/kernels.hpp"
#include "zads/mri_model.hpp"
#include "zads/rng.hpp"

namespace {

using namespace zads;
namespace k = zads::kernels;

std::vector<Complex> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> v(n);
  for (auto& x : v) x = rng.complex_normal();
  return v;
}

template <auto Axpy>
void BM_Axpy(benchmark::State& state) {
  const auto x = noise(state.range(0), 1);
  auto y = noise(state.range(0), 2);
  for (auto _ : state) {
    Axpy(Complex(0.5, -0.25), x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Dot>
void BM_Dot(benchmark::State& state) {
  const auto a = noise(state.range(0), 3);
  const auto b = noise(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(Dot(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto SquaredNorm>
void BM_SquaredNorm(benchmark::State& state) {
  const auto a = noise(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(SquaredNorm(a));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

constexpr int kCoils = 8;

template <auto Expand>
void BM_CoilExpand(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto sens = noise(kCoils * n, 6);
  const auto x = noise(n, 7);
  std::vector<Complex> out(kCoils * n);
  for (auto _ : state) {
    Expand(sens, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * kCoils * n);
}

template <auto Combine>
void BM_CoilCombine(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto sens = noise(kCoils * n, 8);
  const auto imgs = noise(kCoils * n, 9);
  std::vector<Complex> out(n);
  for (auto _ : state) {
    Combine(sens, imgs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * kCoils * n);
}

void BM_Normal(benchmark::State& state, Execution exec) {
  const int side = static_cast<int>(state.range(0));
  auto sens = std::make_shared<const CoilSensitivities>(make_coil_maps(side, side, kCoils, 0));
  const EncodingOperator op(sens, make_equispaced_mask(side, 4, side / 8), exec);
  const ComplexImage x = complex_gaussian_image(side, side, 10);
  for (auto _ : state) benchmark::DoNotOptimize(op.normal(x));
}

#define ZADS_PAIR(name, fn)                                                              \
  BENCHMARK(name<k::serial::fn>)->Name(#name "/serial")->RangeMultiplier(4)->Range(4096, 409600); \
  BENCHMARK(name<k::parallel::fn>)->Name(#name "/parallel")->RangeMultiplier(4)->Range(4096, 409600)

ZADS_PAIR(BM_Axpy, axpy);
ZADS_PAIR(BM_Dot, dot);
ZADS_PAIR(BM_SquaredNorm, squared_norm);
ZADS_PAIR(BM_CoilExpand, coil_expand);
ZADS_PAIR(BM_CoilCombine, coil_combine);

BENCHMARK_CAPTURE(BM_Normal, serial, Execution::kSerial)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Normal, parallel, Execution::kParallel)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();

#include <random>

#include <benchmark/benchmark.h>

#include "senti/edges.hpp"
#include "senti/nn.hpp"
#include "senti/ssim.hpp"
#include "senti/transfer.hpp"

using namespace senti;

namespace {

GrayTensor noise_gray(int side, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayTensor g(side, side);
  for (float& v : g.data()) v = u(rng);
  return g;
}

template <typename T>
Tensor<T> noise_tensor(int c, int h, int w) {
  std::mt19937 rng(7);
  std::normal_distribution<T> n(0, 1);
  Tensor<T> t(c, h, w);
  for (T& v : t.values()) v = n(rng);
  return t;
}

}  // namespace

static void BM_Ssim(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const GrayTensor a = noise_gray(side, 1), b = noise_gray(side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256)->Arg(512);

static void BM_Sobel(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const GrayTensor g = noise_gray(side, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sobel_magnitude(g));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Sobel)->Arg(256)->Arg(512);

static void BM_Gram(benchmark::State& state) {
  const auto f = noise_tensor<float>(static_cast<int>(state.range(0)), 32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(gram(f));
}
BENCHMARK(BM_Gram)->Arg(64)->Arg(256)->Arg(512);

static void BM_Conv3x3(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  nn::Conv<float> conv;
  conv.in_channels = channels;
  conv.out_channels = channels;
  conv.kernel = 3;
  conv.pad = 1;
  conv.weight.assign(static_cast<std::size_t>(channels) * channels * 9, 0.01f);
  const auto x = noise_tensor<float>(channels, 64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv_forward(conv, x));
}
BENCHMARK(BM_Conv3x3)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// Microbenchmarks for the hot paths: the convolution kernels and their
// backward passes, plane/feature transforms, the distance-field Hausdorff,
// and a whole-model forward.

#include <benchmark/benchmark.h>

#include <random>

#include "gerseg/conv.hpp"
#include "gerseg/equicheck.hpp"
#include "gerseg/group.hpp"
#include "gerseg/metrics.hpp"
#include "gerseg/model.hpp"
#include "gerseg/ops.hpp"
#include "gerseg/tensor.hpp"

using namespace gerseg;

namespace {

std::mt19937 bench_rng(12345);

void lift_conv_forward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto x = random_uniform<float>({1, 1, n, n}, bench_rng);
  const auto w = random_uniform<float>({8, 1, 3, 3}, bench_rng);
  const auto b = random_uniform<float>({8}, bench_rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::lift_conv(x, w, b, 1, 1));
  }
}
BENCHMARK(lift_conv_forward)->Arg(64)->Arg(128);

void group_conv_forward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto x = random_uniform<float>({1, 8, kGroupSize, n, n}, bench_rng);
  const auto w = random_uniform<float>({8, 8, kGroupSize, 3, 3}, bench_rng);
  const auto b = random_uniform<float>({8}, bench_rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::group_conv(x, w, b, 1, 1));
  }
}
BENCHMARK(group_conv_forward)->Arg(32)->Arg(64);

void group_conv_backward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto x = random_uniform<float>({1, 8, kGroupSize, n, n}, bench_rng);
  const auto w = random_uniform<float>({8, 8, kGroupSize, 3, 3}, bench_rng);
  const auto b = random_uniform<float>({8}, bench_rng);
  const auto dy = random_uniform<float>(ops::group_conv(x, w, b, 1, 1).shape(), bench_rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::group_conv_backward(dy, x, w, true, 1, 1));
  }
}
BENCHMARK(group_conv_backward)->Arg(32)->Arg(64);

void feature_transform(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto f = random_uniform<float>({1, 16, kGroupSize, n, n}, bench_rng);
  const GroupElement g = element_from_index(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transform_group_feature(g, f));
  }
}
BENCHMARK(feature_transform)->Arg(64)->Arg(128);

void hausdorff_distance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Tensor<uint8_t> pred({n, n}), gt({n, n});
  std::bernoulli_distribution fg(0.3);
  for (int64_t i = 0; i < pred.numel(); ++i) {
    pred[i] = fg(bench_rng) ? 1 : 0;
    gt[i] = fg(bench_rng) ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::hausdorff(pred, gt, 95.0));
  }
}
BENCHMARK(hausdorff_distance)->Arg(64)->Arg(256);

void model_forward(benchmark::State& state) {
  models::ModelConfig cfg;
  cfg.arch = state.range(0) == 0 ? "ger-unet" : "r-unet";
  cfg.base_channels = 16;
  auto model = models::build_model<float>(cfg);
  model->init_params(9);
  const auto x = random_uniform<float>({1, 1, 64, 64}, bench_rng, 0.0f, 1.0f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model->forward_eval(x));
  }
  state.SetLabel(cfg.arch);
}
BENCHMARK(model_forward)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();

// SPDX-License-Identifier: Apache-2.0
#include "hpsed/model.hpp"
#include "hpsed/nn/layers.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using hpsed::Matrix;

std::vector<Matrix<float>> inputs(const hpsed::ArchitectureConfig& c, int n) {
  std::vector<Matrix<float>> xs;
  for (int i = 0; i < n; ++i) xs.push_back((Matrix<float>::Random(c.n_mels, c.input_frames).array() * 4.f - 8.f).matrix());
  return xs;
}

void forward(benchmark::State& state, const hpsed::ArchitectureConfig& c) {
  const hpsed::PseCrnn<float> model(c);
  const auto params = model.init(1);
  const auto xs = inputs(c, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(params, xs, hpsed::Mode::Eval));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ForwardReduced(benchmark::State& state) { forward(state, hpsed::ArchitectureConfig::reduced()); }
BENCHMARK(BM_ForwardReduced)->Arg(1)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_ForwardFull(benchmark::State& state) { forward(state, hpsed::ArchitectureConfig{}); }
BENCHMARK(BM_ForwardFull)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainStepReduced(benchmark::State& state) {
  const auto c = hpsed::ArchitectureConfig::reduced();
  const hpsed::PseCrnn<float> model(c);
  const auto params = model.init(1);
  const auto xs = inputs(c, static_cast<int>(state.range(0)));
  const std::vector<Matrix<float>> d(xs.size(), Matrix<float>::Constant(c.output_frames(), c.classes, 1e-3f));
  auto grads = model.zero_grads();
  hpsed::ForwardCache<float> cache;
  for (auto _ : state) {
    model.forward(params, xs, hpsed::Mode::Train, &cache);
    model.backward(params, cache, d, {}, grads);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStepReduced)->Arg(12)->Unit(benchmark::kMillisecond);

// Gated-layer convolution at the first reduced layer's size.
void BM_Conv3x3(benchmark::State& state) {
  const int cin = static_cast<int>(state.range(0)), cout = static_cast<int>(state.range(1));
  const int freq = static_cast<int>(state.range(2)), time = 256;
  const Matrix<float> x = Matrix<float>::Random(cin, freq * time);
  const Matrix<float> w = Matrix<float>::Random(2 * cout, cin * 9);
  const hpsed::Vector<float> b = hpsed::Vector<float>::Zero(2 * cout);
  Matrix<float> y;
  for (auto _ : state) hpsed::nn::conv2d_forward<float>(x, freq, time, w, b, 3, y);
}
BENCHMARK(BM_Conv3x3)->Args({12, 4, 128})->Args({16, 32, 16})->Args({48, 16, 128})->Unit(benchmark::kMicrosecond);

void BM_Conv3x3Backward(benchmark::State& state) {
  const int cin = static_cast<int>(state.range(0)), cout = static_cast<int>(state.range(1));
  const int freq = static_cast<int>(state.range(2)), time = 256;
  const Matrix<float> x = Matrix<float>::Random(cin, freq * time);
  const Matrix<float> w = Matrix<float>::Random(2 * cout, cin * 9);
  const Matrix<float> dy = Matrix<float>::Random(2 * cout, freq * time);
  Matrix<float> dw = Matrix<float>::Zero(2 * cout, cin * 9), dx;
  hpsed::Vector<float> db = hpsed::Vector<float>::Zero(2 * cout);
  for (auto _ : state) hpsed::nn::conv2d_backward<float>(x, freq, time, w, 3, dy, dw, db, &dx);
}
BENCHMARK(BM_Conv3x3Backward)->Args({12, 4, 128})->Args({16, 32, 16})->Unit(benchmark::kMicrosecond);

}  // namespace

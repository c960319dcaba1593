// SPDX-License-Identifier: Apache-2.0
#include "hpsed/features.hpp"
#include "hpsed/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

const hpsed::Waveform& clip() {
  static const hpsed::Waveform w = hpsed::render_clip(hpsed::plan_pool(5, "strong", 1).front());
  return w;
}

void BM_LogMelFull(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(hpsed::log_mel(clip()));
}
BENCHMARK(BM_LogMelFull)->Unit(benchmark::kMillisecond);

void BM_LogMelReduced(benchmark::State& state) {
  const auto cfg = hpsed::FeatureConfig::reduced();
  for (auto _ : state) benchmark::DoNotOptimize(hpsed::log_mel(clip(), cfg));
}
BENCHMARK(BM_LogMelReduced)->Unit(benchmark::kMillisecond);

void BM_RenderClip(benchmark::State& state) {
  const auto plan = hpsed::plan_pool(5, "strong", 1).front();
  for (auto _ : state) benchmark::DoNotOptimize(hpsed::render_clip(plan));
}
BENCHMARK(BM_RenderClip)->Unit(benchmark::kMillisecond);

}  // namespace

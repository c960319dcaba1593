// SPDX-License-Identifier: Apache-2.0
#include "hpsed/metrics.hpp"
#include "hpsed/postprocess.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

namespace {

void BM_MedianFilter(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::vector<float> seq(256);
  for (auto& v : seq) v = u(rng);
  const int window = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hpsed::median_filter_1d(seq, window));
}
BENCHMARK(BM_MedianFilter)->Arg(1)->Arg(7)->Arg(13)->Arg(31);

void BM_DecodeClip(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  hpsed::Grid g(256, hpsed::kNumClasses);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
  hpsed::DecodingConfig cfg;
  cfg.median_window = 9;
  for (auto _ : state) benchmark::DoNotOptimize(hpsed::decode_events(g, cfg));
}
BENCHMARK(BM_DecodeClip);

hpsed::EventList random_list(std::mt19937_64& rng, int per_class) {
  std::uniform_real_distribution<double> on(0.0, 9.0), len(0.1, 1.0);
  hpsed::EventList out;
  for (int c = 0; c < hpsed::kNumClasses; ++c)
    for (int k = 0; k < per_class; ++k) {
      const double a = on(rng);
      out.push_back({c, a, std::min(10.0, a + len(rng))});
    }
  return out;
}

void BM_MatchEvents(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const int n = static_cast<int>(state.range(0));
  const auto ref = random_list(rng, n), est = random_list(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(hpsed::match_events(ref, est));
}
BENCHMARK(BM_MatchEvents)->Arg(1)->Arg(5)->Arg(20);

}  // namespace

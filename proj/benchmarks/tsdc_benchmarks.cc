// Copyright 2026 The tsdc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tsdc/baselines.h"
#include "tsdc/condense.h"
#include "tsdc/dataset.h"
#include "tsdc/numerics/ops.h"
#include "tsdc/numerics/tape.h"
#include "tsdc/tsfe.h"

namespace tsdc {
namespace {

Tensor Noise(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n;
  std::vector<float> v(static_cast<std::size_t>(NumElements(shape)));
  for (float& x : v) x = n(rng);
  return Tensor(shape, std::move(v));
}

TsfeConfig SmallModel(std::int64_t channels) {
  TsfeConfig c;
  c.lookback = 96;
  c.horizon = 24;
  c.channels = channels;
  c.model_dim = 32;
  c.num_heads = 4;
  c.num_operators = 2;
  c.ff_dim = 64;
  c.patch_len = 16;
  c.patch_stride = 8;
  return c;
}

void BM_MatMul(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  Tensor a = Noise({n, n}, 1), b = Noise({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_MatMul)->Arg(32)->Arg(128)->Arg(256);

void BM_TsfeForward(benchmark::State& state) {
  TsfeConfig cfg = SmallModel(3);
  ModelParams p = InitParams(cfg, 0);
  Tensor theta({p.size()}, p.values);
  Tensor x = Noise({state.range(0), cfg.lookback, cfg.channels}, 3);
  ForwardOptions f;
  for (auto _ : state) benchmark::DoNotOptimize(TsfeForward(x, theta, cfg, f));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TsfeForward)->Arg(8)->Arg(32);

void BM_InnerTrainStep(benchmark::State& state) {
  TsfeConfig cfg = SmallModel(1);
  ModelParams p = InitParams(cfg, 0);
  Tensor theta({p.size()}, p.values);
  const std::int64_t w = cfg.lookback + cfg.horizon;
  Tensor condensed = Noise({20, w, 1}, 4);
  std::vector<Tensor> original{Noise({32, w, 1}, 5)};
  for (auto _ : state) {
    Tape<float> tape;
    TapeScope<float> scope(tape);
    Tensor s = condensed.Detach();
    s.set_requires_grad(true);
    auto r = InnerTrain(theta, s, {}, {}, original, cfg,
                        {.steps = state.range(0), .alpha = 0.01, .lambda_fre = 1.0});
    benchmark::DoNotOptimize(r.theta_end);
  }
}
BENCHMARK(BM_InnerTrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_KCenter(benchmark::State& state) {
  WindowSet ws;
  ws.count = 2000;
  ws.lookback = 48;
  ws.horizon = 24;
  ws.channels = 1;
  Tensor v = Noise({ws.count * 72}, 6);
  ws.windows.assign(v.data().begin(), v.data().end());
  for (auto _ : state) benchmark::DoNotOptimize(KCenterCoreset(ws, state.range(0), 0));
}
BENCHMARK(BM_KCenter)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tsdc

BENCHMARK_MAIN();

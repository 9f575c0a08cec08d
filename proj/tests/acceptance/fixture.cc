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


#include "fixture.h"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "tsdc/baselines.h"
#include "tsdc/error.h"
#include "tsdc/eval.h"

namespace tsdc::acceptance {
namespace {

std::string Key(const nlohmann::json& j) {
  std::ostringstream s;
  s << std::hex << std::hash<std::string>{}(j.dump());
  return s.str();
}

}  // namespace

FixtureOptions DefaultFixtureOptions() {
  FixtureOptions o;
  o.series.steps = 20000;
  o.series.channels = 3;
  o.series.noise_fraction = 0.1;
  o.series.seed = 0;

  o.model.lookback = 48;
  o.model.horizon = 24;
  o.model.channels = 3;
  o.model.model_dim = 16;
  o.model.num_heads = 4;
  o.model.num_operators = 2;
  o.model.patch_len = 16;
  o.model.patch_stride = 8;
  o.model.ff_dim = 32;

  o.expert.epochs = 10;
  o.expert.lr = 0.2;
  o.expert.batch_size = 512;

  o.condense.n = 100;
  o.condense.outer_steps = 200;
  o.condense.inner_steps = 16;
  o.condense.expert_steps = 2;
  o.condense.inner_lr = 0.2;
  o.condense.condensed_lr = 1.0;
  o.condense.batch_size = 20;
  o.condense.lambda_fre = 0.01;

  o.downstream.epochs = 300;
  o.downstream.lr = 0.2;
  o.downstream.batch_size = 100;
  return o;
}

Fixture::Fixture(FixtureOptions options, std::string cache_dir, bool read_cache)
    : options_(std::move(options)), cache_dir_(std::move(cache_dir)), read_cache_(read_cache) {
  TimeSeriesDataset series = SeasonalSeries(options_.series);
  auto parts = SplitChronological(series, options_.split);
  const auto& m = options_.model;
  train_ = MakeWindows(Standardize(parts[0], parts[0]), m.lookback, m.horizon,
                       options_.train_stride);
  test_ = MakeWindows(Standardize(parts[2], parts[0]), m.lookback, m.horizon, 1);
  if (!cache_dir_.empty()) std::filesystem::create_directories(cache_dir_);
}

std::string Fixture::CachePath(const std::string& stem, const std::string& key) const {
  if (cache_dir_.empty()) return {};
  return (std::filesystem::path(cache_dir_) / (stem + "_" + key)).string();
}

const ExpertBuffer& Fixture::Buffer(std::uint64_t seed) {
  auto it = buffers_.find(seed);
  if (it != buffers_.end()) return it->second;
  const nlohmann::json id = {{"series", options_.series.seed},
                             {"stride", options_.train_stride},
                             {"model", options_.model},
                             {"expert", options_.expert},
                             {"k", options_.num_experts},
                             {"seed", seed}};
  const std::string path = CachePath("buffer", Key(id) + ".tdcb");
  const Fingerprint fp = ComputeFingerprint(options_.model, options_.expert, train_.count,
                                            train_.channels);
  if (read_cache_ && !path.empty() && std::filesystem::exists(path)) {
    try {
      return buffers_.emplace(seed, LoadBuffer(path, &fp)).first->second;
    } catch (const FormatError& e) {
      std::cerr << "  cache miss (" << e.what() << ")\n";
    }
  }
  ExpertBuffer b = TrainExpertBuffer(train_, options_.model, options_.expert,
                                     options_.num_experts, 1000 * seed + 17);
  if (!path.empty()) SaveBuffer(b, path);
  return buffers_.emplace(seed, std::move(b)).first->second;
}

CondensedDataset Fixture::Condensed(std::uint64_t seed, const CondenseConfig& config) {
  CondenseConfig cc = config;
  cc.seed = seed;
  const nlohmann::json id = {{"series", options_.series.seed},
                             {"stride", options_.train_stride},
                             {"model", options_.model},
                             {"expert", options_.expert},
                             {"k", options_.num_experts},
                             {"condense", cc}};
  const std::string path = CachePath("condensed", Key(id) + ".tdcs");
  if (read_cache_ && !path.empty() && std::filesystem::exists(path)) {
    try {
      return LoadCondensed(path, options_.model.lookback);
    } catch (const FormatError& e) {
      std::cerr << "  cache miss (" << e.what() << ")\n";
    }
  }
  CondensedDataset s = Condense(train_, Buffer(seed), options_.model, cc);
  if (!path.empty()) SaveCondensed(s, path);
  return s;
}

WindowSet Fixture::RandomWindows(std::int64_t n, std::uint64_t seed) const {
  return SelectWindows(train_, RandomCoreset(train_, n, seed).indices);
}

double Fixture::TestMse(const WindowSet& data, const TsfeConfig& model,
                        std::uint64_t seed) const {
  TrainOptions o = options_.downstream;
  o.seed = seed;
  TrainResult r = TrainDownstream(data, model, o);
  return Evaluate(r.params, test_).mse;
}

double Median(std::vector<double> v) {
  TSDC_CHECK(!v.empty(), "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace tsdc::acceptance

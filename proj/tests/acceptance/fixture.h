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


#ifndef TSDC_TESTS_ACCEPTANCE_FIXTURE_H_
#define TSDC_TESTS_ACCEPTANCE_FIXTURE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsdc/condense.h"
#include "tsdc/dataset.h"
#include "tsdc/synthetic.h"
#include "tsdc/training.h"
#include "tsdc/trajectory.h"
#include "tsdc/tsfe.h"

namespace tsdc::acceptance {

// Synthetic end-to-end setup shared by the condensation criteria.
struct FixtureOptions {
  SeasonalSeriesOptions series;
  SplitRatios split{0.7, 0.1, 0.2};
  std::int64_t train_stride = 4;
  TsfeConfig model;
  TrainOptions expert;
  std::int64_t num_experts = 5;
  CondenseConfig condense;
  TrainOptions downstream;
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

FixtureOptions DefaultFixtureOptions();

class Fixture {
 public:
  // Buffers and condensed sets are cached under `cache_dir` when non-empty.
  Fixture(FixtureOptions options, std::string cache_dir, bool read_cache = true);

  const FixtureOptions& options() const { return options_; }
  const WindowSet& train() const { return train_; }
  const WindowSet& test() const { return test_; }

  const ExpertBuffer& Buffer(std::uint64_t seed);
  CondensedDataset Condensed(std::uint64_t seed, const CondenseConfig& config);
  WindowSet RandomWindows(std::int64_t n, std::uint64_t seed) const;
  // Test MSE of a fresh model of shape `model` trained on `data`.
  double TestMse(const WindowSet& data, const TsfeConfig& model, std::uint64_t seed) const;

 private:
  std::string CachePath(const std::string& stem, const std::string& key) const;

  FixtureOptions options_;
  std::string cache_dir_;
  bool read_cache_;
  WindowSet train_;
  WindowSet test_;
  std::map<std::uint64_t, ExpertBuffer> buffers_;
};

double Median(std::vector<double> v);

}  // namespace tsdc::acceptance

#endif  // TSDC_TESTS_ACCEPTANCE_FIXTURE_H_

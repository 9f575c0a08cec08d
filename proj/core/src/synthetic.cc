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

#include "tsdc/synthetic.h"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tsdc/error.h"

namespace tsdc {
namespace {

TimeSeriesDataset Empty(std::int64_t steps, std::int64_t channels, const char* granularity) {
  TSDC_CHECK(steps >= 1 && channels >= 1, "need steps >= 1 and channels >= 1");
  TimeSeriesDataset ds;
  ds.time_steps = steps;
  ds.channels = channels;
  ds.values.assign(static_cast<std::size_t>(steps * channels), 0.0f);
  for (std::int64_t c = 0; c < channels; ++c) ds.channel_names.push_back("c" + std::to_string(c));
  ds.granularity = granularity;
  return ds;
}

void AddNoise(TimeSeriesDataset& ds, const std::vector<double>& clean, double fraction,
              std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::int64_t c = 0; c < ds.channels; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::int64_t t = 0; t < ds.time_steps; ++t) mean += clean[t * ds.channels + c];
    mean /= static_cast<double>(ds.time_steps);
    for (std::int64_t t = 0; t < ds.time_steps; ++t) {
      const double d = clean[t * ds.channels + c] - mean;
      sq += d * d;
    }
    const double sigma = fraction * std::sqrt(sq / static_cast<double>(ds.time_steps));
    for (std::int64_t t = 0; t < ds.time_steps; ++t) {
      const std::size_t i = t * ds.channels + c;
      ds.values[i] = static_cast<float>(clean[i] + sigma * normal(rng));
    }
  }
}

}  // namespace

TimeSeriesDataset SeasonalSeries(const SeasonalSeriesOptions& o) {
  TimeSeriesDataset ds = Empty(o.steps, o.channels, "synthetic");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> clean(ds.values.size());
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::int64_t c = 0; c < o.channels; ++c) {
    const double amp_a = 0.8 + 0.4 * unit(rng);
    const double amp_b = 0.4 + 0.4 * unit(rng);
    const double phase_a = kTwoPi * unit(rng);
    const double phase_b = kTwoPi * unit(rng);
    const double slope = o.trend_rise * (0.5 + unit(rng)) / static_cast<double>(o.steps);
    for (std::int64_t t = 0; t < o.steps; ++t) {
      const double x = static_cast<double>(t);
      clean[t * o.channels + c] = slope * x + amp_a * std::sin(kTwoPi * x / o.period_a + phase_a) +
                                  amp_b * std::sin(kTwoPi * x / o.period_b + phase_b);
    }
  }
  AddNoise(ds, clean, o.noise_fraction, rng);
  return ds;
}

TimeSeriesDataset TwoRegimeSeries(const TwoRegimeOptions& o) {
  TSDC_CHECK(o.shift_at > 0.0 && o.shift_at < 1.0, "shift_at must be in (0, 1)");
  TimeSeriesDataset ds = Empty(o.steps, o.channels, "synthetic-two-regime");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> clean(ds.values.size());
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const auto shift = RatioFloor(o.steps, o.shift_at);
  for (std::int64_t c = 0; c < o.channels; ++c) {
    const double phase_1 = kTwoPi * unit(rng);
    const double phase_2 = kTwoPi * unit(rng);
    for (std::int64_t t = 0; t < o.steps; ++t) {
      const double x = static_cast<double>(t);
      double v;
      if (t < shift) {
        v = std::sin(kTwoPi * x / 24.0 + phase_1) + 0.5 * std::sin(kTwoPi * x / 6.0);
      } else {
        v = 1.5 + 1.2 * std::sin(kTwoPi * x / 40.0 + phase_2) -
            0.6 * std::cos(kTwoPi * x / 10.0);
      }
      clean[t * o.channels + c] = v;
    }
  }
  AddNoise(ds, clean, o.noise_fraction, rng);
  return ds;
}

}  // namespace tsdc

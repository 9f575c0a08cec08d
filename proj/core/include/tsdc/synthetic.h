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

#ifndef TSDC_SYNTHETIC_H_
#define TSDC_SYNTHETIC_H_

#include <cstdint>

#include "tsdc/dataset.h"

namespace tsdc {

struct SeasonalSeriesOptions {
  std::int64_t steps = 20000;
  std::int64_t channels = 3;
  // Noise standard deviation relative to the clean signal's.
  double noise_fraction = 0.1;
  // Trend rise over the whole series, in units of the seasonal amplitude.
  double trend_rise = 0.5;
  double period_a = 24.0;
  // Irrational multiple of period_a.
  double period_b = 24.0 * 1.4142135623730951;
  std::uint64_t seed = 0;
};

// Per channel: linear trend + two sinusoids with incommensurate periods +
// Gaussian noise. Channels differ in phase, amplitude and slope.
TimeSeriesDataset SeasonalSeries(const SeasonalSeriesOptions& options);

struct TwoRegimeOptions {
  std::int64_t steps = 4000;
  std::int64_t channels = 1;
  // Fraction of the series before the regime shift.
  double shift_at = 0.7;
  double noise_fraction = 0.1;
  std::uint64_t seed = 0;
};

// Seasonal series whose periods, amplitudes and level change abruptly at
// shift_at * steps.
TimeSeriesDataset TwoRegimeSeries(const TwoRegimeOptions& options);

}  // namespace tsdc

#endif  // TSDC_SYNTHETIC_H_

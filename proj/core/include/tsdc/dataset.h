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

#ifndef TSDC_DATASET_H_
#define TSDC_DATASET_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdc/numerics/tensor.h"

namespace tsdc {

struct NormStats {
  std::vector<float> mean;
  std::vector<float> stddev;
};

// Multivariate series stored row-major as [time_steps x channels].
struct TimeSeriesDataset {
  std::int64_t time_steps = 0;
  std::int64_t channels = 0;
  std::vector<float> values;
  std::vector<std::string> channel_names;
  std::string granularity;
  std::optional<NormStats> norm_stats;
  // Row index of the first time step within the series this one was cut from.
  std::int64_t origin = 0;

  float at(std::int64_t t, std::int64_t c) const { return values[t * channels + c]; }
  void Validate() const;
};

struct CsvOptions {
  bool has_header = true;
  bool drop_first_column = false;
};

// Parses a comma-separated file: rows are time steps, columns are channels.
// Errors carry the 1-based line and column of the offending cell.
TimeSeriesDataset LoadCsv(const std::string& path, const CsvOptions& options = {});
void SaveCsv(const TimeSeriesDataset& ds, const std::string& path);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

// floor(ratio * n), tolerant of ratios like 0.7 that are not exact in binary.
std::int64_t RatioFloor(std::int64_t n, double ratio);

// Contiguous train/val/test segments. Each length is floor(ratio * steps);
// leftover rows go to the test segment.
std::array<TimeSeriesDataset, 3> SplitChronological(const TimeSeriesDataset& ds,
                                                    const SplitRatios& ratios);

NormStats ComputeNormStats(const TimeSeriesDataset& ds);
// Per-channel z-score with statistics of `stats_source`.
TimeSeriesDataset Standardize(const TimeSeriesDataset& ds,
                              const TimeSeriesDataset& stats_source);
TimeSeriesDataset Standardize(const TimeSeriesDataset& ds, const NormStats& stats);
TimeSeriesDataset Unstandardize(const TimeSeriesDataset& ds);

// Supervised windows laid out as [count x (lookback + horizon) x channels].
struct WindowSet {
  std::int64_t count = 0;
  std::int64_t lookback = 0;
  std::int64_t horizon = 0;
  std::int64_t channels = 0;
  std::vector<float> windows;
  // Absolute start row of each window (source origin included); empty for
  // windows that were not cut from a series.
  std::vector<std::int64_t> starts;
  std::optional<std::vector<int>> labels;
  int num_classes = 0;

  std::int64_t window_len() const { return lookback + horizon; }
  std::int64_t window_size() const { return window_len() * channels; }
  std::span<const float> window(std::int64_t i) const {
    return std::span<const float>(windows).subspan(i * window_size(), window_size());
  }
  void Validate() const;
};

WindowSet MakeWindows(const TimeSeriesDataset& ds, std::int64_t lookback,
                      std::int64_t horizon, std::int64_t stride = 1);

// One sample per row: the integer label sits in `label_column` (0-based) and
// the remaining cells form a univariate series. Produces lookback-only
// windows with labels.
WindowSet LoadClassificationCsv(const std::string& path, bool has_header,
                                int label_column);

WindowSet SelectWindows(const WindowSet& ws, std::span<const std::int64_t> indices);
WindowSet ConcatWindows(const WindowSet& a, const WindowSet& b);

// Stacks the selected windows into a [batch, lookback + horizon, channels] tensor.
template <typename Real>
BasicTensor<Real> WindowBatch(const WindowSet& ws, std::span<const std::int64_t> indices);

}  // namespace tsdc

#endif  // TSDC_DATASET_H_

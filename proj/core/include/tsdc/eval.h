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

#ifndef TSDC_EVAL_H_
#define TSDC_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsdc/condense.h"
#include "tsdc/dataset.h"
#include "tsdc/training.h"
#include "tsdc/tsfe.h"

namespace tsdc {

struct Metrics {
  double mae = 0.0;
  double mse = 0.0;
  std::optional<double> accuracy;
  std::optional<double> precision;
  double train_seconds = 0.0;
  std::int64_t num_params = 0;
};

struct RegressionScores {
  double mae = 0.0;
  double mse = 0.0;
};

RegressionScores RegressionMetrics(std::span<const float> prediction, std::span<const float> truth);
RegressionScores RegressionMetrics(const Tensor& prediction, const Tensor& truth);

struct ClassificationScores {
  double accuracy = 0.0;
  // Macro average of per-class TP / (TP + FP); never-predicted classes count 0.
  double precision = 0.0;
  // confusion[truth][predicted]
  std::vector<std::vector<std::int64_t>> confusion;
};

// logits: [batch, num_classes] row-major.
ClassificationScores ClassificationMetrics(std::span<const float> logits, std::int64_t num_classes,
                                           const std::vector<int>& labels);

// Fresh model from options.seed trained on `data`.
TrainResult TrainDownstream(const WindowSet& data, const TsfeConfig& cfg,
                            const TrainOptions& options);

// Inference-mode metrics in standardized space.
Metrics Evaluate(const ModelParams& params, const WindowSet& test, std::int64_t batch_size = 256);

// Trains each variant on `train` and evaluates it on `test`.
std::vector<Metrics> CrossArchTransfer(const WindowSet& train,
                                       const std::vector<TsfeConfig>& variants,
                                       const WindowSet& test, const TrainOptions& options);

enum class StreamPolicy { kCondensedReplay, kFineTune };

struct StreamConfig {
  TsfeConfig model;
  // Stage-1 training and stage-2 retraining.
  TrainOptions train;
  // Expert training on the base set (replay policy only).
  TrainOptions expert;
  std::int64_t num_experts = 5;
  CondenseConfig condense;
  std::int64_t window_stride = 1;
  // Stage-2 passes over the incremental data.
  std::int64_t retrain_epochs = 0;
  SplitRatios stage_split{0.7, 0.1, 0.2};
  double base_fraction = 0.7;
};

struct StreamSegments {
  // [begin, end) rows of the full series.
  std::int64_t base_begin = 0, base_end = 0;
  std::int64_t base_train_end = 0, base_test_begin = 0;
  std::int64_t inc_begin = 0, inc_train_end = 0, inc_test_begin = 0, inc_end = 0;
};

struct StreamResult {
  Metrics b0;
  Metrics b1;
  Metrics incremental;
  StreamSegments segments;
};

// Base/incremental protocol: chronological base:incremental split, each part
// split train/val/test. Stage 1 trains on base-train (B0 on base-test);
// stage 2 continues from the stage-1 model on incremental-train, joined by
// the condensed base-train under kCondensedReplay (B1 on base-test, I on
// incremental-test). Standardization uses base-train statistics throughout.
StreamResult StreamEval(const TimeSeriesDataset& ds, const StreamConfig& config,
                        StreamPolicy policy);

struct MetricsRecord {
  std::string method;
  std::string dataset;
  std::int64_t pl = 0;
  std::int64_t n_condensed = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
};

void to_json(nlohmann::json& j, const MetricsRecord& r);
void from_json(const nlohmann::json& j, MetricsRecord& r);

struct PcaPoint {
  std::string set;
  double x = 0.0;
  double y = 0.0;
};

// Projects original and condensed windows onto the top two principal
// components of their union.
std::vector<PcaPoint> PcaProjection(const WindowSet& original, const WindowSet& condensed);
void WritePcaCsv(const std::vector<PcaPoint>& points, const std::string& path);

}  // namespace tsdc

#endif  // TSDC_EVAL_H_

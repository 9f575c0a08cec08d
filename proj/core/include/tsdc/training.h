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

#ifndef TSDC_TRAINING_H_
#define TSDC_TRAINING_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsdc/dataset.h"
#include "tsdc/tsfe.h"

namespace tsdc {

enum class OptimizerKind { kSgd, kAdam };

struct TrainOptions {
  std::int64_t epochs = 10;
  double lr = 0.01;
  std::int64_t batch_size = 32;
  // Heavy-ball momentum for kSgd; ignored by kAdam.
  double momentum = 0.0;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const TrainOptions& o);
void from_json(const nlohmann::json& j, TrainOptions& o);

struct TrainResult {
  ModelParams params;
  // Mean mini-batch loss of every epoch.
  std::vector<double> epoch_losses;
  double train_seconds = 0.0;
};

// Called after every epoch with the 1-based epoch number.
using EpochCallback = std::function<void(std::int64_t epoch, const ModelParams& params)>;

// Mini-batch training on the task loss. Starts from InitParams(cfg, seed)
// unless `init` is given; batches are reshuffled every epoch from `seed`.
// Throws NumericError naming the epoch when the loss stops being finite.
TrainResult TrainModel(const WindowSet& data, const TsfeConfig& cfg, const TrainOptions& options,
                       const ModelParams* init = nullptr, const EpochCallback& on_epoch = {});

// Inference-mode forward over every window: [count, horizon, channels] or
// [count, num_classes], concatenated row-major.
std::vector<float> Predict(const ModelParams& params, const WindowSet& data,
                           std::int64_t batch_size = 256);

}  // namespace tsdc

#endif  // TSDC_TRAINING_H_

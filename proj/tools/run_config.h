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


#ifndef TSDC_TOOLS_RUN_CONFIG_H_
#define TSDC_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "tsdc/condense.h"
#include "tsdc/dataset.h"
#include "tsdc/training.h"
#include "tsdc/tsfe.h"

namespace tsdc::cli {

struct DataSection {
  std::string path;
  // "auto", "true" or "false".
  std::string drop_first_column = "auto";
  bool has_header = true;
  // "forecast" or "classify".
  std::string task = "forecast";
  int label_column = 0;
  SplitRatios split;
  std::int64_t window_stride = 1;
};

struct ExpertSection {
  TrainOptions train{.epochs = 10, .lr = 0.01, .batch_size = 32};
  std::int64_t num_experts = 10;
  int workers = 1;
};

struct CoresetSection {
  std::string method = "random";
  std::int64_t n = 100;
};

struct TrainEvalSection {
  TrainOptions train{.epochs = 30, .lr = 0.001, .batch_size = 32,
                     .optimizer = OptimizerKind::kAdam};
  // "csv", "tdcs" or "coreset-json".
  std::string source_kind = "csv";
  std::string source;
  // Label written into the metrics record; derived from the source when empty.
  std::string method;
};

struct StreamSection {
  // "replay", "finetune" or "both".
  std::string policy = "both";
  std::int64_t retrain_epochs = 0;
  double base_fraction = 0.7;
};

struct RunConfig {
  std::string command;
  DataSection data;
  TsfeConfig model;
  ExpertSection expert;
  CondenseConfig condense;
  std::string buffer;
  CoresetSection coreset;
  TrainEvalSection train_eval;
  StreamSection stream;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string run_dir;

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Overlays the keys present in `j` onto `c`.
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace tsdc::cli

#endif  // TSDC_TOOLS_RUN_CONFIG_H_

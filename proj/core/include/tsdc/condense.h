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

#ifndef TSDC_CONDENSE_H_
#define TSDC_CONDENSE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsdc/dataset.h"
#include "tsdc/decomp.h"
#include "tsdc/numerics/tensor.h"
#include "tsdc/trajectory.h"
#include "tsdc/tsfe.h"

namespace tsdc {

enum class InitMode { kRealSample, kGaussian };

std::string InitModeName(InitMode mode);
InitMode ParseInitMode(const std::string& name);

// N learnable windows laid out as [N, lookback + horizon, channels].
struct CondensedDataset {
  std::int64_t count = 0;
  std::int64_t lookback = 0;
  std::int64_t horizon = 0;
  std::int64_t channels = 0;
  std::vector<float> windows;
  // Fixed class labels (classification only).
  std::optional<std::vector<int>> labels;
  int num_classes = 0;
  InitMode init_mode = InitMode::kRealSample;
  std::uint64_t seed = 0;

  std::int64_t window_len() const { return lookback + horizon; }
  Tensor AsTensor() const;
  WindowSet ToWindowSet() const;
  void Validate() const;
};

// Real-sample mode draws N distinct source windows; gaussian mode draws unit
// normal values. Labelled sources get class-balanced labels (counts differ by
// at most one, earlier classes first) and real samples are drawn per class.
CondensedDataset InitCondensed(const WindowSet& source, std::int64_t n, InitMode mode,
                               std::uint64_t seed);

inline constexpr std::uint32_t kCondensedFormatVersion = 1;

void SaveCondensed(const CondensedDataset& data, const std::string& path);
// The file stores whole windows; `lookback` splits them into input and target
// (the whole window is input when omitted).
CondensedDataset LoadCondensed(const std::string& path,
                               std::optional<std::int64_t> lookback = std::nullopt);

struct CondenseConfig {
  std::int64_t outer_steps = 200;
  // b
  std::int64_t inner_steps = 16;
  // a
  std::int64_t expert_steps = 2;
  // alpha
  double inner_lr = 0.01;
  double condensed_lr = 0.05;
  double condensed_momentum = 0.5;
  std::int64_t n = 100;
  // Condensed windows per inner step; 0 uses all N.
  std::int64_t batch_size = 0;
  double lambda_task = 1.0;
  double lambda_fre = 1.0;
  double lambda_tmm = 1.0;
  std::int64_t kernel = kDefaultDecompKernel;
  InitMode init = InitMode::kRealSample;
  std::uint64_t seed = 0;

  void Validate() const;
};

void to_json(nlohmann::json& j, const CondenseConfig& c);
void from_json(const nlohmann::json& j, CondenseConfig& c);

struct InnerTrainOptions {
  std::int64_t steps = 16;
  double alpha = 0.01;
  // Weight of the frequency term inside the inner objective.
  double lambda_fre = 1.0;
  std::int64_t kernel = kDefaultDecompKernel;
};

template <typename Real>
struct InnerTrainResult {
  BasicTensor<Real> theta_end;
  // Sums over the inner steps.
  BasicTensor<Real> task_loss_sum;
  BasicTensor<Real> fre_loss_sum;
};

// Unrolled differentiable training from theta_start on the condensed windows
// [N, W, C]: theta <- theta - alpha * grad(L_task + lambda_fre * L_Fre). Step
// i trains on condensed rows syn_batches[i] (all rows when syn_batches is
// empty) and compares features against original_batches[i % size] ([B, W', C]
// with W' >= lookback). Everything is recorded on the active tape, or on a
// private one when none is active.
template <typename Real>
InnerTrainResult<Real> InnerTrain(const BasicTensor<Real>& theta_start,
                                  const BasicTensor<Real>& condensed,
                                  const std::vector<int>& labels,
                                  const std::vector<std::vector<std::int64_t>>& syn_batches,
                                  const std::vector<BasicTensor<Real>>& original_batches,
                                  const TsfeConfig& cfg, const InnerTrainOptions& options);

struct CondenseDiagnostics {
  std::int64_t step = 0;
  double l_task = 0.0;
  double l_fre = 0.0;
  double l_tmm = 0.0;
  double l_all = 0.0;
  std::int64_t expert_index = -1;
  std::int64_t e0 = -1;
  bool skipped = false;
};

void to_json(nlohmann::json& j, const CondenseDiagnostics& d);

// One outer optimization over the condensed windows. Each Step() samples e0,
// picks the next expert in curriculum order (re-ranked every K steps from an
// a-step pre-update), unrolls the inner loop from that expert's snapshot e0,
// and moves the windows along -grad(L_all) with momentum SGD.
class Condenser {
 public:
  Condenser(const WindowSet& original, const ExpertBuffer& buffer, const TsfeConfig& model,
            const CondenseConfig& config, CondensedDataset init);

  CondenseDiagnostics Step();
  const CondensedDataset& condensed() const { return condensed_; }
  std::int64_t steps_taken() const { return step_; }

 private:
  std::vector<std::vector<std::int64_t>> SampleSynBatches(std::int64_t steps);
  std::vector<Tensor> SampleOriginalBatches(std::int64_t steps, std::int64_t batch);
  std::int64_t NextExpert(std::int64_t e0);

  const WindowSet& original_;
  const ExpertBuffer& buffer_;
  TsfeConfig model_;
  CondenseConfig config_;
  CondensedDataset condensed_;
  std::vector<double> velocity_;
  std::mt19937_64 rng_;
  std::vector<std::int64_t> order_;
  std::int64_t cursor_ = 0;
  std::int64_t last_expert_ = 0;
  std::int64_t step_ = 0;
};

using DiagnosticsSink = std::function<void(const CondenseDiagnostics&)>;

// InitCondensed followed by config.outer_steps condenser steps.
CondensedDataset Condense(const WindowSet& original, const ExpertBuffer& buffer,
                          const TsfeConfig& model, const CondenseConfig& config,
                          const DiagnosticsSink& sink = {});

}  // namespace tsdc

#endif  // TSDC_CONDENSE_H_

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

#ifndef TSDC_TRAJECTORY_H_
#define TSDC_TRAJECTORY_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsdc/dataset.h"
#include "tsdc/numerics/tensor.h"
#include "tsdc/training.h"
#include "tsdc/tsfe.h"

namespace tsdc {

using Fingerprint = std::array<std::uint8_t, 32>;
using FlatParams = std::vector<float>;

inline constexpr std::uint32_t kBufferFormatVersion = 1;

// SHA-256 over the model config, epochs, learning rate, training data length
// and channel count.
Fingerprint ComputeFingerprint(const TsfeConfig& cfg, const TrainOptions& options,
                               std::int64_t data_length, std::int64_t channels);
std::string FingerprintHex(const Fingerprint& fp);

struct ExpertTrajectory {
  std::uint64_t seed = 0;
  // snapshots[e] holds the parameters after epoch e + 1.
  std::vector<FlatParams> snapshots;
  Fingerprint fingerprint{};

  std::int64_t epochs() const { return static_cast<std::int64_t>(snapshots.size()); }
  std::int64_t param_len() const {
    return snapshots.empty() ? 0 : static_cast<std::int64_t>(snapshots[0].size());
  }
};

struct ExpertBuffer {
  Fingerprint fingerprint{};
  std::vector<ExpertTrajectory> trajectories;

  std::int64_t size() const { return static_cast<std::int64_t>(trajectories.size()); }
  std::int64_t epochs() const { return trajectories.empty() ? 0 : trajectories[0].epochs(); }
  std::int64_t param_len() const {
    return trajectories.empty() ? 0 : trajectories[0].param_len();
  }
  void Validate() const;
};

// Trains one expert from InitParams(cfg, options.seed) and records the
// parameters after every one of options.epochs (>= 2) epochs.
ExpertTrajectory TrainExpert(const WindowSet& train, const TsfeConfig& cfg,
                             const TrainOptions& options);

// K experts with seeds base_seed, base_seed + 1, ... spread over `workers`
// threads. The result does not depend on the worker count.
ExpertBuffer TrainExpertBuffer(const WindowSet& train, const TsfeConfig& cfg,
                               const TrainOptions& options, std::int64_t num_experts,
                               std::uint64_t base_seed, int workers = 1);

void SaveBuffer(const ExpertBuffer& buffer, const std::string& path);
// Throws ChecksumError, VersionError, FormatError, or FingerprintError when
// `expected` is given and differs from the stored fingerprint.
ExpertBuffer LoadBuffer(const std::string& path, const Fingerprint* expected = nullptr);

// Scalar objective of the parameters at a given step.
using StepLoss = std::function<Tensor(const Tensor& theta, std::int64_t step)>;

// `steps` plain gradient steps theta <- theta - alpha * grad(loss). Returns
// every iterate, starting with theta0 (steps + 1 entries). No tape survives.
std::vector<FlatParams> GradientPath(const FlatParams& theta0, std::int64_t steps, double alpha,
                                     const StepLoss& loss);

// Task-loss steps on condensed windows [N, lookback + horizon, C]. Step i
// uses batches[i % batches.size()], or every window when `batches` is empty.
// Returns the a + 1 iterates theta0 .. theta_a.
std::vector<FlatParams> PreUpdatePath(const FlatParams& theta0, const Tensor& windows,
                                      const std::vector<int>& labels, std::int64_t a,
                                      double alpha, const TsfeConfig& cfg,
                                      const std::vector<std::vector<std::int64_t>>& batches = {});
FlatParams PreUpdate(const FlatParams& theta0, const Tensor& windows,
                     const std::vector<int>& labels, std::int64_t a, double alpha,
                     const TsfeConfig& cfg,
                     const std::vector<std::vector<std::int64_t>>& batches = {});

// Cosine similarity of the two segments, each concatenated into one vector.
double TrajectoryDistance(const std::vector<FlatParams>& a, const std::vector<FlatParams>& b);

// Indices ordered by similarity, most similar first; ties by ascending index.
std::vector<std::int64_t> RankBySimilarity(const std::vector<double>& similarities);

struct CurriculumRanking {
  std::vector<std::int64_t> order;
  // similarities[k] for trajectory k (not reordered).
  std::vector<double> similarities;
};

// `foreseen` holds a + 1 parameter vectors for steps e0 .. e0 + a, compared
// against snapshots e0 .. e0 + a of every expert.
CurriculumRanking CurriculumRank(const ExpertBuffer& buffer, const std::vector<FlatParams>& foreseen,
                                 std::int64_t e0, std::int64_t a);

// ||tilde_end - expert_end||^2 / ||start - expert_end||^2, differentiable in
// tilde_end. Empty when the denominator is below 1e-12.
template <typename Real>
std::optional<BasicTensor<Real>> TrajectoryMatchingLoss(const BasicTensor<Real>& tilde_end,
                                                        std::span<const float> expert_end,
                                                        std::span<const float> start);

}  // namespace tsdc

#endif  // TSDC_TRAJECTORY_H_

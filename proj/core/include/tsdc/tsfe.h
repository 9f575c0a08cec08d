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

#ifndef TSDC_TSFE_H_
#define TSDC_TSFE_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tsdc/numerics/tensor.h"

// Stacked-attention feature extractor over channel-independent patches, with
// forecasting and classification heads.

namespace tsdc {

enum class HeadKind { kForecast, kClassify };
enum class NormKind { kBatch, kPerSample, kNone };

struct TsfeConfig {
  std::int64_t num_operators = 3;
  std::int64_t num_heads = 16;
  std::int64_t model_dim = 64;
  std::int64_t ff_dim = 128;
  std::int64_t patch_len = 16;
  std::int64_t patch_stride = 8;
  std::int64_t lookback = 96;
  std::int64_t horizon = 96;
  std::int64_t channels = 1;
  HeadKind head = HeadKind::kForecast;
  std::int64_t num_classes = 0;
  NormKind norm = NormKind::kBatch;
  bool positional_encoding = true;

  std::int64_t num_patches() const;
  std::int64_t head_dim() const { return model_dim / num_heads; }
  void Validate() const;
};

void to_json(nlohmann::json& j, const TsfeConfig& c);
void from_json(const nlohmann::json& j, TsfeConfig& c);

// Closed-form trainable parameter count for `cfg`.
std::int64_t ParameterCount(const TsfeConfig& cfg);

struct ParamSlot {
  std::string name;
  Shape shape;
  std::int64_t offset = 0;
  std::int64_t size() const { return NumElements(shape); }
};

// Flat parameter ordering:
//   embed.weight [L, d], embed.bias [d], embed.position [P, d] (optional),
//   then per operator j: attn.{q,k,v,out}.{weight [d, d], bias [d]},
//   norm1.{scale, shift} [d], ff1.weight [d, f], ff1.bias [f],
//   ff2.weight [f, d], ff2.bias [d], norm2.{scale, shift} [d],
//   then head.weight / head.bias ([P*d, PL] / [PL] or [d, K] / [K]).
class ParamLayout {
 public:
  explicit ParamLayout(const TsfeConfig& cfg);
  const std::vector<ParamSlot>& slots() const { return slots_; }
  const ParamSlot& Find(const std::string& name) const;
  std::int64_t total() const { return total_; }

 private:
  void Add(std::string name, Shape shape);
  std::vector<ParamSlot> slots_;
  std::int64_t total_ = 0;
};

// Running statistics of every normalization layer (two per operator), each
// a run of model_dim values.
struct NormState {
  std::vector<float> mean;
  std::vector<float> var;
  float momentum = 0.1f;

  static NormState Initial(const TsfeConfig& cfg);
};

struct ModelParams {
  TsfeConfig config;
  std::vector<float> values;
  NormState norm_state;

  const std::vector<float>& Flatten() const { return values; }
  static ModelParams Unflatten(const TsfeConfig& cfg, std::vector<float> flat);
  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

// Seeded initialization: linear maps uniform in +-1/sqrt(fan_in), positions
// uniform in +-0.02, normalization scale 1 and shift 0.
ModelParams InitParams(const TsfeConfig& cfg, std::uint64_t seed);

struct ForwardOptions {
  // Batch statistics when true; `eval_stats` when false.
  bool training = true;
  // Updated from batch statistics during training when non-null.
  NormState* running_stats = nullptr;
  const NormState* eval_stats = nullptr;
  bool collect_features = true;
  bool capture_attention = false;
};

template <typename Real>
struct TsfeOutput {
  // One entry per operator, each [batch, channels, patches, model_dim].
  std::vector<BasicTensor<Real>> features;
  // [batch, horizon, channels] or [batch, num_classes].
  BasicTensor<Real> prediction;
  // Per operator [channels * batch * heads, patches, patches] when captured.
  std::vector<BasicTensor<Real>> attention;
};

// [B, n, C] -> C tensors of [B, n, 1].
template <typename Real>
std::vector<BasicTensor<Real>> ChannelSeparate(const BasicTensor<Real>& batch);

std::int64_t PatchCount(std::int64_t n, std::int64_t patch_len, std::int64_t stride);

// Patch layout over the series padded with stride-1 copies of its last value.
// Entry p*L + j is the padded position read by offset j of patch p; positions
// past the padded end read its last element.
struct PatchIndex {
  std::int64_t num_patches = 0;
  std::int64_t padded_length = 0;
  std::vector<std::int64_t> padded_positions;
};
PatchIndex PatchIndexMap(std::int64_t n, std::int64_t patch_len, std::int64_t stride);

// [B, n, 1] -> [B, P, L]
template <typename Real>
BasicTensor<Real> Patchify(const BasicTensor<Real>& series, std::int64_t patch_len,
                           std::int64_t stride);

// Tensors of one operator, viewed out of the flat parameter vector.
template <typename Real>
struct OperatorParams {
  BasicTensor<Real> wq, bq, wk, bk, wv, bv, wo, bo;
  BasicTensor<Real> norm1_scale, norm1_shift;
  BasicTensor<Real> ff1_w, ff1_b, ff2_w, ff2_b;
  BasicTensor<Real> norm2_scale, norm2_shift;
};

template <typename Real>
OperatorParams<Real> ViewOperator(const BasicTensor<Real>& flat, const ParamLayout& layout,
                                  std::int64_t index);

// One attention + fully-connected block on h: [rows, patches, model_dim].
// Self-attention with residual and normalization, then the position-wise
// fully-connected sublayer with residual and normalization.
template <typename Real>
BasicTensor<Real> TsOperatorForward(const BasicTensor<Real>& h, const OperatorParams<Real>& p,
                                    const TsfeConfig& cfg, const ForwardOptions& options,
                                    std::int64_t operator_index,
                                    BasicTensor<Real>* attention = nullptr);

// batch: [B, lookback, C]; flat_params: [ParameterCount(cfg)].
template <typename Real>
TsfeOutput<Real> TsfeForward(const BasicTensor<Real>& batch, const BasicTensor<Real>& flat_params,
                             const TsfeConfig& cfg, const ForwardOptions& options = {});

// Splits [B, lookback + horizon, C] windows into input and target.
template <typename Real>
std::pair<BasicTensor<Real>, BasicTensor<Real>> SplitInputTarget(const BasicTensor<Real>& windows,
                                                                 std::int64_t lookback);

// Rows `indices` of x along the first axis.
template <typename Real>
BasicTensor<Real> SelectSamples(const BasicTensor<Real>& x, std::span<const std::int64_t> indices);

// MSE for forecasting; mean cross-entropy against `labels` for classification.
template <typename Real>
BasicTensor<Real> TaskLoss(const BasicTensor<Real>& prediction, const BasicTensor<Real>& target,
                           HeadKind head, const std::vector<int>& labels = {});

}  // namespace tsdc

#endif  // TSDC_TSFE_H_

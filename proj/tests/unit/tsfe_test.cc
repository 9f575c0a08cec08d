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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tsdc/error.h"
#include "tsdc/numerics/autodiff.h"
#include "tsdc/numerics/ops.h"
#include "tsdc/numerics/tape.h"
#include "tsdc/tsfe.h"

namespace tsdc {
namespace {

using testing::RandomTensor;
using testing::TinyConfig;

Tensor Params(const ModelParams& p) { return Tensor({p.size()}, p.values); }

TEST(ChannelSeparate, SingleChannelIsIdentity) {
  std::mt19937_64 rng(1);
  Tensor x = RandomTensor({3, 5, 1}, rng);
  auto parts = ChannelSeparate(x);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(std::vector<float>(parts[0].data().begin(), parts[0].data().end()),
            std::vector<float>(x.data().begin(), x.data().end()));
}

TEST(ChannelSeparate, SlicesColumnsAndRoundTrips) {
  Tensor x({2, 3, 2}, {1, 10, 2, 20, 3, 30, 4, 40, 5, 50, 6, 60});
  auto parts = ChannelSeparate(x);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].shape(), (Shape{2, 3, 1}));
  const std::vector<float> c0(parts[0].data().begin(), parts[0].data().end());
  const std::vector<float> c1(parts[1].data().begin(), parts[1].data().end());
  EXPECT_EQ(c0, (std::vector<float>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(c1, (std::vector<float>{10, 20, 30, 40, 50, 60}));
  std::vector<float> joined;
  for (std::int64_t i = 0; i < 6; ++i) {
    joined.push_back(c0[i]);
    joined.push_back(c1[i]);
  }
  EXPECT_EQ(joined, std::vector<float>(x.data().begin(), x.data().end()));
}

TEST(Patchify, PatchCounts) {
  EXPECT_EQ(PatchCount(96, 16, 8), 12);
  EXPECT_EQ(PatchCount(16, 16, 8), 2);
  EXPECT_EQ(PatchCount(8, 4, 2), 4);
  EXPECT_EQ(PatchCount(336, 16, 8), 42);
}

TEST(Patchify, PaddingReplicatesLastValue) {
  PatchIndex map = PatchIndexMap(16, 16, 8);
  EXPECT_EQ(map.padded_length, 16 + 7);
  EXPECT_EQ(map.num_patches, 2);
  std::vector<float> v(16);
  for (int i = 0; i < 16; ++i) v[i] = static_cast<float>(i + 1);
  Tensor patches = Patchify(Tensor({1, 16, 1}, v), 16, 8);
  ASSERT_EQ(patches.shape(), (Shape{1, 2, 16}));
  auto d = patches.data();
  for (int j = 0; j < 16; ++j) EXPECT_EQ(d[j], v[j]);
  int padded = 0;
  for (int j = 0; j < 16; ++j) {
    const float expected = 8 + j < 16 ? v[8 + j] : 16.0f;
    EXPECT_EQ(d[16 + j], expected);
    if (8 + j >= 16 && 8 + j < map.padded_length) ++padded;
  }
  EXPECT_EQ(padded, 7);
}

TEST(Patchify, PatchesCoverStridedOffsets) {
  std::vector<float> v(96);
  for (int i = 0; i < 96; ++i) v[i] = static_cast<float>(i);
  Tensor patches = Patchify(Tensor({1, 96, 1}, v), 16, 8);
  ASSERT_EQ(patches.shape(), (Shape{1, 12, 16}));
  for (int p = 0; p < 12; ++p) {
    for (int j = 0; j < 16; ++j) {
      EXPECT_EQ(patches.data()[p * 16 + j], std::min(p * 8 + j, 95));
    }
  }
}

TEST(Patchify, RejectsOversizedPatch) {
  EXPECT_THROW(PatchIndexMap(4, 8, 2), ContractViolation);
  EXPECT_THROW(PatchIndexMap(4, 2, 0), ContractViolation);
}

TEST(ParamLayout, CountMatchesClosedFormFuzz) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    TsfeConfig c;
    c.num_heads = 1 + rng() % 4;
    c.model_dim = c.num_heads * (1 + rng() % 6);
    c.num_operators = 1 + rng() % 4;
    c.ff_dim = 1 + rng() % 40;
    c.lookback = 4 + rng() % 60;
    c.patch_len = 1 + rng() % c.lookback;
    c.patch_stride = 1 + rng() % 9;
    c.channels = 1 + rng() % 5;
    c.positional_encoding = rng() % 2;
    if (rng() % 2) {
      c.head = HeadKind::kClassify;
      c.num_classes = 2 + rng() % 6;
    } else {
      c.horizon = 1 + rng() % 30;
    }
    ParamLayout layout(c);
    EXPECT_EQ(layout.total(), ParameterCount(c));
    const std::int64_t d = c.model_dim, f = c.ff_dim, p = c.num_patches();
    std::int64_t expected = c.patch_len * d + d + (c.positional_encoding ? p * d : 0);
    expected += c.num_operators * (4 * (d * d + d) + 4 * d + d * f + f + f * d + d);
    expected += c.head == HeadKind::kForecast ? p * d * c.horizon + c.horizon
                                              : d * c.num_classes + c.num_classes;
    EXPECT_EQ(ParameterCount(c), expected);
    std::int64_t offset = 0;
    for (const auto& slot : layout.slots()) {
      EXPECT_EQ(slot.offset, offset);
      offset += slot.size();
    }
    EXPECT_EQ(offset, layout.total());
  }
}

TEST(ParamLayout, FlattenRoundTrip) {
  TsfeConfig c = TinyConfig();
  ModelParams p = InitParams(c, 7);
  ModelParams q = ModelParams::Unflatten(c, p.Flatten());
  EXPECT_EQ(q.values, p.values);
  EXPECT_EQ(p.size(), ParameterCount(c));
  EXPECT_THROW(ModelParams::Unflatten(c, std::vector<float>(3)), ContractViolation);
}

TEST(InitParams, DeterministicPerSeed) {
  TsfeConfig c = TinyConfig();
  EXPECT_EQ(InitParams(c, 1).values, InitParams(c, 1).values);
  EXPECT_NE(InitParams(c, 1).values, InitParams(c, 2).values);
  ModelParams p = InitParams(c, 1);
  ParamLayout layout(c);
  const ParamSlot& scale = layout.Find("op0.norm1.scale");
  for (std::int64_t i = 0; i < scale.size(); ++i) EXPECT_EQ(p.values[scale.offset + i], 1.0f);
}

TEST(TsfeConfig, JsonRoundTrip) {
  TsfeConfig c = TinyConfig();
  c.head = HeadKind::kClassify;
  c.num_classes = 4;
  c.norm = NormKind::kPerSample;
  nlohmann::json j = c;
  EXPECT_EQ(j["head"], "classify");
  EXPECT_EQ(j["norm"], "per_sample");
  TsfeConfig back = j.get<TsfeConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(TsfeConfig, RejectsInvalid) {
  TsfeConfig c = TinyConfig();
  c.num_heads = 3;
  EXPECT_THROW(c.Validate(), ContractViolation);
  c = TinyConfig();
  c.patch_len = 20;
  EXPECT_THROW(c.Validate(), ContractViolation);
}

TEST(TsfeForward, OutputShapes) {
  TsfeConfig c;
  c.num_heads = 4;
  c.model_dim = 16;
  c.ff_dim = 16;
  c.channels = 7;
  c.horizon = 96;
  ModelParams p = InitParams(c, 0);
  std::mt19937_64 rng(5);
  Tensor x = RandomTensor({4, 96, 7}, rng);
  auto out = TsfeForward(x, Params(p), c);
  EXPECT_EQ(out.prediction.shape(), (Shape{4, 96, 7}));
  ASSERT_EQ(out.features.size(), 3u);
  for (const auto& f : out.features) EXPECT_EQ(f.shape(), (Shape{4, 7, 12, 16}));
}

TEST(TsfeForward, DefaultHasThreeOperators) { EXPECT_EQ(TsfeConfig{}.num_operators, 3); }

TEST(TsfeForward, ClassifyShape) {
  TsfeConfig c = TinyConfig();
  c.head = HeadKind::kClassify;
  c.num_classes = 5;
  std::mt19937_64 rng(5);
  auto out = TsfeForward(RandomTensor({3, 8, 2}, rng), Params(InitParams(c, 0)), c);
  EXPECT_EQ(out.prediction.shape(), (Shape{3, 5}));
}

TEST(TsfeForward, IdenticalRowsGiveIdenticalPredictions) {
  TsfeConfig c = TinyConfig();
  std::mt19937_64 rng(8);
  Tensor row = RandomTensor({1, 8, 2}, rng);
  std::vector<float> v(row.data().begin(), row.data().end());
  v.insert(v.end(), row.data().begin(), row.data().end());
  Tensor x({2, 8, 2}, v);
  for (NormKind norm : {NormKind::kBatch, NormKind::kPerSample}) {
    c.norm = norm;
    auto out = TsfeForward(x, Params(InitParams(c, 3)), c);
    auto d = out.prediction.data();
    const std::int64_t half = d.size() / 2;
    for (std::int64_t i = 0; i < half; ++i) ASSERT_EQ(d[i], d[half + i]);
  }
}

TEST(TsfeForward, RejectsShapeMismatch) {
  TsfeConfig c = TinyConfig();
  std::mt19937_64 rng(8);
  Tensor p = Params(InitParams(c, 0));
  EXPECT_THROW(TsfeForward(RandomTensor({2, 9, 2}, rng), p, c), ContractViolation);
  EXPECT_THROW(TsfeForward(RandomTensor({2, 8, 3}, rng), p, c), ContractViolation);
  EXPECT_THROW(TsfeForward(RandomTensor({2, 8, 2}, rng), Tensor::Zeros({5}), c),
               ContractViolation);
}

TEST(TsfeForward, EvalModeNeedsStats) {
  TsfeConfig c = TinyConfig();
  ModelParams p = InitParams(c, 0);
  std::mt19937_64 rng(8);
  Tensor x = RandomTensor({2, 8, 2}, rng);
  EXPECT_THROW(TsfeForward(x, Params(p), c, {.training = false}), ContractViolation);
  auto out = TsfeForward(x, Params(p), c, {.training = false, .eval_stats = &p.norm_state});
  EXPECT_TRUE(out.prediction.AllFinite());
}

TEST(TsfeForward, RunningStatsMove) {
  TsfeConfig c = TinyConfig();
  ModelParams p = InitParams(c, 0);
  std::mt19937_64 rng(8);
  NormState before = p.norm_state;
  TsfeForward(RandomTensor({4, 8, 2}, rng, 2.0, 5.0), Params(p), c,
              {.training = true, .running_stats = &p.norm_state});
  EXPECT_NE(p.norm_state.mean, before.mean);
  EXPECT_NE(p.norm_state.var, before.var);
}

class OperatorTest : public ::testing::Test {
 protected:
  OperatorTest() {
    cfg_ = TinyConfig();
    cfg_.norm = NormKind::kNone;
  }
  TsfeConfig cfg_;
};

TEST_F(OperatorTest, ZeroWeightsPassResidualThrough) {
  ParamLayout layout(cfg_);
  Tensor flat = Tensor::Zeros({layout.total()});
  auto op = ViewOperator(flat, layout, 0);
  std::mt19937_64 rng(2);
  Tensor h = RandomTensor({3, 4, cfg_.model_dim}, rng);
  Tensor out = TsOperatorForward(h, op, cfg_, {}, 0);
  for (std::int64_t i = 0; i < h.numel(); ++i) ASSERT_EQ(out.data()[i], h.data()[i]);
}

TEST_F(OperatorTest, SinglePatchAttentionIsOne) {
  cfg_.norm = NormKind::kPerSample;
  ModelParams p = InitParams(cfg_, 4);
  ParamLayout layout(cfg_);
  std::mt19937_64 rng(2);
  Tensor h = RandomTensor({3, 1, cfg_.model_dim}, rng);
  Tensor attn;
  TsOperatorForward(h, ViewOperator(Params(p), layout, 0), cfg_, {}, 0, &attn);
  ASSERT_EQ(attn.numel(), 3 * cfg_.num_heads);
  for (float a : attn.data()) EXPECT_EQ(a, 1.0f);
}

TEST_F(OperatorTest, PermutationEquivariant) {
  cfg_.norm = NormKind::kPerSample;
  ModelParams p = InitParams(cfg_, 4);
  ParamLayout layout(cfg_);
  auto op = ViewOperator(Params(p), layout, 0);
  std::mt19937_64 rng(6);
  const std::int64_t d = cfg_.model_dim;
  Tensor h = RandomTensor({1, 3, d}, rng);
  std::vector<float> swapped(h.data().begin(), h.data().end());
  std::swap_ranges(swapped.begin(), swapped.begin() + d, swapped.begin() + 2 * d);
  Tensor a = TsOperatorForward(h, op, cfg_, {}, 0);
  Tensor b = TsOperatorForward(Tensor({1, 3, d}, swapped), op, cfg_, {}, 0);
  for (std::int64_t k = 0; k < d; ++k) {
    EXPECT_NEAR(a.data()[k], b.data()[2 * d + k], 1e-5);
    EXPECT_NEAR(a.data()[d + k], b.data()[d + k], 1e-5);
    EXPECT_NEAR(a.data()[2 * d + k], b.data()[k], 1e-5);
  }
}

TEST_F(OperatorTest, NonFiniteAttentionThrows) {
  ModelParams p = InitParams(cfg_, 4);
  ParamLayout layout(cfg_);
  std::vector<float> v(static_cast<std::size_t>(2 * 3 * cfg_.model_dim), 1.0f);
  v[5] = std::numeric_limits<float>::quiet_NaN();
  Tensor h({2, 3, cfg_.model_dim}, v);
  EXPECT_THROW(TsOperatorForward(h, ViewOperator(Params(p), layout, 0), cfg_, {}, 0),
               NumericError);
}

TEST(TsfeForward, AttentionRowsSumToOne) {
  TsfeConfig c = TinyConfig();
  c.num_operators = 2;
  std::mt19937_64 rng(10);
  auto out = TsfeForward(RandomTensor({3, 8, 2}, rng, -3, 3), Params(InitParams(c, 11)), c,
                         {.capture_attention = true});
  ASSERT_EQ(out.attention.size(), 2u);
  for (const auto& a : out.attention) {
    const std::int64_t p = a.dim(2);
    EXPECT_EQ(a.dim(0), 2 * 3 * c.num_heads);
    for (std::int64_t r = 0; r < a.numel() / p; ++r) {
      double s = 0;
      for (std::int64_t k = 0; k < p; ++k) s += a.data()[r * p + k];
      ASSERT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(TsfeForward, ChannelIndependence) {
  TsfeConfig c = TinyConfig();
  c.channels = 3;
  c.num_operators = 2;
  c.norm = NormKind::kPerSample;
  Tensor params = Params(InitParams(c, 12));
  std::mt19937_64 rng(13);
  Tensor x = RandomTensor({2, 8, 3}, rng);
  std::vector<float> v(x.data().begin(), x.data().end());
  for (std::int64_t b = 0; b < 2; ++b) {
    for (std::int64_t t = 0; t < 8; ++t) v[(b * 8 + t) * 3 + 1] += 0.5f * (t + 1);
  }
  auto a = TsfeForward(x, params, c);
  auto b = TsfeForward(Tensor({2, 8, 3}, v), params, c);
  for (std::size_t j = 0; j < a.features.size(); ++j) {
    const Tensor& fa = a.features[j];
    const Tensor& fb = b.features[j];
    const std::int64_t slice = fa.dim(2) * fa.dim(3);
    for (std::int64_t bi = 0; bi < 2; ++bi) {
      for (std::int64_t ch = 0; ch < 3; ++ch) {
        double diff = 0;
        for (std::int64_t k = 0; k < slice; ++k) {
          const std::int64_t i = (bi * 3 + ch) * slice + k;
          diff = std::max(diff, double(std::abs(fa.data()[i] - fb.data()[i])));
        }
        if (ch == 1) {
          EXPECT_GT(diff, 1e-4);
        } else {
          EXPECT_EQ(diff, 0.0) << "layer " << j << " channel " << ch;
        }
      }
    }
  }
}

template <typename X>
X TinyLoss(const X& flat, const X& input, const X& target, const TsfeConfig& c) {
  auto out = TsfeForward(input, flat, c);
  return TaskLoss(out.prediction, target, c.head);
}

TEST(TsfeForward, ParamGradientMatchesFiniteDifferences) {
  TsfeConfig c = TinyConfig();
  ModelParams p = InitParams(c, 21);
  std::mt19937_64 rng(22);
  Tensor x = RandomTensor({3, 8, 2}, rng);
  Tensor y = RandomTensor({3, 4, 2}, rng);
  auto f = [&](const auto& flat) {
    using T = std::decay_t<decltype(flat)>;
    using R = typename T::value_type;
    return TinyLoss<T>(flat, x.Cast<R>(), y.Cast<R>(), c);
  };
  auto report = GradientCheck(f, Params(p), 1e-4);
  EXPECT_EQ(testing::FractionAgreeing(report, 1e-3), 1.0) << "max " << report.max_relative_error;
}

TEST(TsfeForward, InputGradientMatchesFiniteDifferences) {
  TsfeConfig c = TinyConfig();
  Tensor params = Params(InitParams(c, 23));
  std::mt19937_64 rng(24);
  Tensor x = RandomTensor({3, 8, 2}, rng);
  Tensor y = RandomTensor({3, 4, 2}, rng);
  auto f = [&](const auto& in) {
    using T = std::decay_t<decltype(in)>;
    using R = typename T::value_type;
    return TinyLoss<T>(params.Cast<R>(), in, y.Cast<R>(), c);
  };
  auto report = GradientCheck(f, x, 1e-4);
  EXPECT_EQ(testing::FractionAgreeing(report, 1e-3), 1.0) << "max " << report.max_relative_error;
}

TEST(TaskLoss, Examples) {
  Tensor a({2}, {1, 2});
  EXPECT_EQ(TaskLoss(a, a, HeadKind::kForecast).item(), 0.0f);
  EXPECT_FLOAT_EQ(TaskLoss(a, Tensor({2}, {2, 4}), HeadKind::kForecast).item(), 2.5f);
  Tensor logits = Tensor::Zeros({3, 4});
  EXPECT_NEAR(TaskLoss(logits, Tensor(), HeadKind::kClassify, {0, 1, 3}).item(), std::log(4.0),
              1e-6);
  EXPECT_THROW(TaskLoss(logits, Tensor(), HeadKind::kClassify, {0, 1, 4}), ContractViolation);
  EXPECT_THROW(TaskLoss(a, Tensor({3}, {1, 2, 3}), HeadKind::kForecast), ContractViolation);
}

TEST(SplitInputTarget, SplitsAlongTime) {
  Tensor w({1, 5, 1}, {1, 2, 3, 4, 5});
  auto [in, out] = SplitInputTarget(w, 3);
  EXPECT_EQ(in.shape(), (Shape{1, 3, 1}));
  EXPECT_EQ(out.shape(), (Shape{1, 2, 1}));
  EXPECT_EQ(out.data()[0], 4.0f);
}

TEST(SelectSamples, GathersRows) {
  Tensor x({3, 2}, {1, 2, 3, 4, 5, 6});
  std::vector<std::int64_t> idx{2, 0};
  Tensor s = SelectSamples(x, std::span<const std::int64_t>(idx));
  EXPECT_EQ(std::vector<float>(s.data().begin(), s.data().end()), (std::vector<float>{5, 6, 1, 2}));
}

}  // namespace
}  // namespace tsdc

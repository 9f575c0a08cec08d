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

#include "tsdc/decomp.h"

#include <algorithm>

#include "tsdc/error.h"
#include "tsdc/numerics/ops.h"

namespace tsdc {
namespace {

template <typename R>
BasicTensor<R> BatchMean(const BasicTensor<R>& x) {
  const std::int64_t b = x.dim(0);
  const std::int64_t rest = x.numel() / b;
  return Scale(SumRows(Reshape(x, {b, rest})), R(1) / static_cast<R>(b));
}

}  // namespace

std::int64_t EffectiveKernel(std::int64_t kernel, std::int64_t num_patches) {
  TSDC_CHECK(kernel >= 1 && kernel % 2 == 1, "decomposition kernel must be odd and >= 1, got ",
             kernel);
  TSDC_CHECK(num_patches >= 1, "num_patches must be >= 1");
  return std::min(kernel, 2 * num_patches - 1);
}

template <typename R>
FrequencyPair<R> SeriesDecompose(const BasicTensor<R>& h, std::int64_t kernel) {
  TSDC_CHECK(kernel >= 1 && kernel % 2 == 1, "decomposition kernel must be odd and >= 1, got ",
             kernel);
  TSDC_CHECK(h.rank() >= 2, "SeriesDecompose expects [..., patches, features], got ",
             ShapeToString(h.shape()));
  const std::int64_t length = h.dim(h.rank() - 2);
  const std::int64_t inner = h.dim(h.rank() - 1);
  const std::int64_t outer = length * inner == 0 ? 0 : h.numel() / (length * inner);
  FrequencyPair<R> pair;
  pair.trend = MovingAverage(h, outer, length, inner, kernel);
  pair.seasonality = Sub(h, pair.trend);
  return pair;
}

template <typename R>
BasicTensor<R> FrequencyMatchingLoss(const std::vector<BasicTensor<R>>& original,
                                     const std::vector<BasicTensor<R>>& condensed,
                                     std::int64_t kernel) {
  TSDC_CHECK(!original.empty() && original.size() == condensed.size(),
             "feature lists must be non-empty and of equal length (", original.size(), " vs ",
             condensed.size(), ")");
  BasicTensor<R> total;
  for (std::size_t j = 0; j < original.size(); ++j) {
    const auto& ht = original[j];
    const auto& hs = condensed[j];
    TSDC_CHECK(ht.rank() >= 3 && hs.rank() == ht.rank(), "layer ", j,
               ": features must be [batch, ..., patches, features]");
    TSDC_CHECK(ht.numel() / ht.dim(0) == hs.numel() / hs.dim(0), "layer ", j,
               ": per-sample feature shapes differ (", ShapeToString(ht.shape()), " vs ",
               ShapeToString(hs.shape()), ")");
    const std::int64_t k = EffectiveKernel(kernel, ht.dim(ht.rank() - 2));
    FrequencyPair<R> ft = SeriesDecompose(ht, k);
    FrequencyPair<R> fs = SeriesDecompose(hs, k);
    BasicTensor<R> term =
        Add(CosineSimilarity(BatchMean(ft.trend), BatchMean(fs.trend)),
            CosineSimilarity(BatchMean(ft.seasonality), BatchMean(fs.seasonality)));
    total = j == 0 ? term : Add(total, term);
  }
  return Scale(total, R(-1) / static_cast<R>(original.size()));
}

template FrequencyPair<float> SeriesDecompose(const Tensor&, std::int64_t);
template FrequencyPair<double> SeriesDecompose(const Tensor64&, std::int64_t);
template Tensor FrequencyMatchingLoss(const std::vector<Tensor>&, const std::vector<Tensor>&,
                                      std::int64_t);
template Tensor64 FrequencyMatchingLoss(const std::vector<Tensor64>&,
                                        const std::vector<Tensor64>&, std::int64_t);

}  // namespace tsdc

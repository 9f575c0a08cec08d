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

#ifndef TSDC_DECOMP_H_
#define TSDC_DECOMP_H_

#include <cstdint>
#include <vector>

#include "tsdc/numerics/tensor.h"

namespace tsdc {

inline constexpr std::int64_t kDefaultDecompKernel = 25;

template <typename Real>
struct FrequencyPair {
  BasicTensor<Real> trend;
  BasicTensor<Real> seasonality;
};

// Largest odd kernel <= min(kernel, 2 * num_patches - 1). `kernel` itself
// must be odd.
std::int64_t EffectiveKernel(std::int64_t kernel, std::int64_t num_patches);

// h: [..., patches, features]. Trend is the replicate-padded moving average
// along the patch axis; seasonality is h - trend.
template <typename Real>
FrequencyPair<Real> SeriesDecompose(const BasicTensor<Real>& h, std::int64_t kernel);

// Per layer: decompose both feature maps ([batch, C, P, d]), average trend
// and seasonality over the batch, and score them by cosine similarity.
// Returns -(1/layers) * sum_j (cos_trend_j + cos_seasonality_j), in [-2, 2].
// The kernel is clamped per layer with EffectiveKernel.
template <typename Real>
BasicTensor<Real> FrequencyMatchingLoss(const std::vector<BasicTensor<Real>>& original,
                                        const std::vector<BasicTensor<Real>>& condensed,
                                        std::int64_t kernel = kDefaultDecompKernel);

}  // namespace tsdc

#endif  // TSDC_DECOMP_H_

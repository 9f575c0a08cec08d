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

#ifndef TSDC_BASELINES_H_
#define TSDC_BASELINES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsdc/dataset.h"

namespace tsdc {

enum class CoresetMethod { kRandom, kHerding, kKCenter };

std::string CoresetMethodName(CoresetMethod m);
CoresetMethod ParseCoresetMethod(const std::string& name);

struct CoresetSelection {
  // Sorted ascending.
  std::vector<std::int64_t> indices;
  // Order in which the selector picked the points.
  std::vector<std::int64_t> pick_order;
  CoresetMethod method = CoresetMethod::kRandom;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const CoresetSelection& s);
void from_json(const nlohmann::json& j, CoresetSelection& s);

CoresetSelection RandomCoreset(const WindowSet& windows, std::int64_t n, std::uint64_t seed);
// Greedy farthest-point traversal under Euclidean distance on flattened
// windows. The first center is drawn from `seed`; ties go to the lowest index.
CoresetSelection KCenterCoreset(const WindowSet& windows, std::int64_t n, std::uint64_t seed);
// Kernel herding toward the mean of the flattened windows.
CoresetSelection HerdingCoreset(const WindowSet& windows, std::int64_t n);

CoresetSelection SelectCoreset(const WindowSet& windows, CoresetMethod method, std::int64_t n,
                               std::uint64_t seed);

// Max over points of the distance to the nearest chosen center.
double CoveringRadius(const WindowSet& windows, const std::vector<std::int64_t>& centers);

}  // namespace tsdc

#endif  // TSDC_BASELINES_H_

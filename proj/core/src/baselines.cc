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

#include "tsdc/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tsdc/error.h"

namespace tsdc {
namespace {

void CheckSize(const WindowSet& windows, std::int64_t n) {
  windows.Validate();
  TSDC_CHECK(n >= 1, "coreset size must be >= 1, got ", n);
  if (n > windows.count) {
    throw Error("coreset size " + std::to_string(n) + " exceeds the " +
                std::to_string(windows.count) + " available windows");
  }
}

double SquaredDistance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

CoresetSelection Finish(std::vector<std::int64_t> order, CoresetMethod method,
                        std::uint64_t seed) {
  CoresetSelection s;
  s.pick_order = order;
  std::sort(order.begin(), order.end());
  s.indices = std::move(order);
  s.method = method;
  s.seed = seed;
  return s;
}

}  // namespace

std::string CoresetMethodName(CoresetMethod m) {
  switch (m) {
    case CoresetMethod::kRandom: return "random";
    case CoresetMethod::kHerding: return "herding";
    case CoresetMethod::kKCenter: return "kcenter";
  }
  return "random";
}

CoresetMethod ParseCoresetMethod(const std::string& name) {
  if (name == "random") return CoresetMethod::kRandom;
  if (name == "herding") return CoresetMethod::kHerding;
  if (name == "kcenter" || name == "k-center") return CoresetMethod::kKCenter;
  throw ContractViolation("unknown coreset method '" + name + "'");
}

void to_json(nlohmann::json& j, const CoresetSelection& s) {
  j = nlohmann::json{{"method", CoresetMethodName(s.method)},
                     {"seed", s.seed},
                     {"indices", s.indices},
                     {"pick_order", s.pick_order}};
}

void from_json(const nlohmann::json& j, CoresetSelection& s) {
  s.method = ParseCoresetMethod(j.at("method").get<std::string>());
  s.seed = j.value("seed", std::uint64_t{0});
  s.indices = j.at("indices").get<std::vector<std::int64_t>>();
  s.pick_order = j.value("pick_order", s.indices);
  TSDC_CHECK(std::is_sorted(s.indices.begin(), s.indices.end()) &&
                 std::adjacent_find(s.indices.begin(), s.indices.end()) == s.indices.end(),
             "coreset indices must be unique and ascending");
}

CoresetSelection RandomCoreset(const WindowSet& windows, std::int64_t n, std::uint64_t seed) {
  CheckSize(windows, n);
  std::vector<std::int64_t> all(static_cast<std::size_t>(windows.count));
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (std::int64_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::int64_t> pick(i, windows.count - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(static_cast<std::size_t>(n));
  return Finish(std::move(all), CoresetMethod::kRandom, seed);
}

CoresetSelection KCenterCoreset(const WindowSet& windows, std::int64_t n, std::uint64_t seed) {
  CheckSize(windows, n);
  const std::int64_t count = windows.count;
  std::mt19937_64 rng(seed);
  std::int64_t current = std::uniform_int_distribution<std::int64_t>(0, count - 1)(rng);
  std::vector<double> min_dist(static_cast<std::size_t>(count),
                               std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(count), 0);
  std::vector<std::int64_t> order;
  order.reserve(static_cast<std::size_t>(n));
  for (std::int64_t c = 0; c < n; ++c) {
    order.push_back(current);
    chosen[current] = 1;
    const auto center = windows.window(current);
    for (std::int64_t i = 0; i < count; ++i) {
      min_dist[i] = std::min(min_dist[i], SquaredDistance(windows.window(i), center));
    }
    if (c + 1 == n) break;
    std::int64_t best = -1;
    double best_dist = -1.0;
    for (std::int64_t i = 0; i < count; ++i) {
      if (!chosen[i] && min_dist[i] > best_dist) {
        best = i;
        best_dist = min_dist[i];
      }
    }
    current = best;
  }
  return Finish(std::move(order), CoresetMethod::kKCenter, seed);
}

CoresetSelection HerdingCoreset(const WindowSet& windows, std::int64_t n) {
  CheckSize(windows, n);
  const std::int64_t count = windows.count, dim = windows.window_size();
  std::vector<double> mu(static_cast<std::size_t>(dim), 0.0);
  for (std::int64_t i = 0; i < count; ++i) {
    auto w = windows.window(i);
    for (std::int64_t d = 0; d < dim; ++d) mu[d] += w[d];
  }
  for (double& m : mu) m /= static_cast<double>(count);
  std::vector<double> w = mu;
  std::vector<char> chosen(static_cast<std::size_t>(count), 0);
  std::vector<std::int64_t> order;
  for (std::int64_t step = 0; step < n; ++step) {
    std::int64_t best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < count; ++i) {
      if (chosen[i]) continue;
      auto x = windows.window(i);
      double score = 0.0;
      for (std::int64_t d = 0; d < dim; ++d) score += w[d] * x[d];
      if (score > best_score) {
        best = i;
        best_score = score;
      }
    }
    chosen[best] = 1;
    order.push_back(best);
    auto x = windows.window(best);
    for (std::int64_t d = 0; d < dim; ++d) w[d] += mu[d] - x[d];
  }
  return Finish(std::move(order), CoresetMethod::kHerding, 0);
}

CoresetSelection SelectCoreset(const WindowSet& windows, CoresetMethod method, std::int64_t n,
                               std::uint64_t seed) {
  switch (method) {
    case CoresetMethod::kRandom: return RandomCoreset(windows, n, seed);
    case CoresetMethod::kHerding: return HerdingCoreset(windows, n);
    case CoresetMethod::kKCenter: return KCenterCoreset(windows, n, seed);
  }
  return RandomCoreset(windows, n, seed);
}

double CoveringRadius(const WindowSet& windows, const std::vector<std::int64_t>& centers) {
  TSDC_CHECK(!centers.empty(), "need at least one center");
  double radius = 0.0;
  for (std::int64_t i = 0; i < windows.count; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t c : centers) best = std::min(best, SquaredDistance(windows.window(i), windows.window(c)));
    radius = std::max(radius, best);
  }
  return std::sqrt(radius);
}

}  // namespace tsdc

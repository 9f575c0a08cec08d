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

#include "tsdc/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "tsdc/error.h"
#include "tsdc/numerics/autodiff.h"
#include "tsdc/numerics/ops.h"
#include "tsdc/numerics/tape.h"

namespace tsdc {

void to_json(nlohmann::json& j, const TrainOptions& o) {
  j = nlohmann::json{{"epochs", o.epochs},
                     {"lr", o.lr},
                     {"batch_size", o.batch_size},
                     {"momentum", o.momentum},
                     {"optimizer", o.optimizer == OptimizerKind::kSgd ? "sgd" : "adam"},
                     {"seed", o.seed}};
}

void from_json(const nlohmann::json& j, TrainOptions& o) {
  o.epochs = j.value("epochs", o.epochs);
  o.lr = j.value("lr", o.lr);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.momentum = j.value("momentum", o.momentum);
  o.seed = j.value("seed", o.seed);
  if (j.contains("optimizer")) {
    const auto name = j.at("optimizer").get<std::string>();
    TSDC_CHECK(name == "sgd" || name == "adam", "unknown optimizer '", name, "'");
    o.optimizer = name == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  }
}

TrainResult TrainModel(const WindowSet& data, const TsfeConfig& cfg, const TrainOptions& options,
                       const ModelParams* init, const EpochCallback& on_epoch) {
  data.Validate();
  TSDC_CHECK(data.count >= 1, "training data is empty");
  TSDC_CHECK(options.epochs >= 0 && options.batch_size >= 1, "invalid training options");
  TSDC_CHECK(data.lookback == cfg.lookback && data.channels == cfg.channels,
             "windows (lookback ", data.lookback, ", channels ", data.channels,
             ") do not match the model config (lookback ", cfg.lookback, ", channels ",
             cfg.channels, ")");
  if (cfg.head == HeadKind::kForecast) {
    TSDC_CHECK(data.horizon == cfg.horizon, "window horizon ", data.horizon,
               " does not match model horizon ", cfg.horizon);
  } else {
    TSDC_CHECK(data.labels.has_value(), "classification training needs labels");
  }
  const auto start_time = std::chrono::steady_clock::now();

  TrainResult result;
  result.params = init != nullptr ? *init : InitParams(cfg, options.seed);
  TSDC_CHECK(result.params.size() == ParameterCount(cfg), "initial parameters do not match config");
  std::vector<float>& theta = result.params.values;
  std::vector<double> m1(theta.size(), 0.0), m2(theta.size(), 0.0);
  std::int64_t step = 0;

  std::mt19937_64 rng(options.seed ^ 0x5bd1e995ULL);
  std::vector<std::int64_t> order(static_cast<std::size_t>(data.count));
  std::iota(order.begin(), order.end(), 0);

  for (std::int64_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::int64_t batches = 0;
    for (std::int64_t lo = 0; lo < data.count; lo += options.batch_size) {
      const std::int64_t hi = std::min(data.count, lo + options.batch_size);
      std::span<const std::int64_t> idx(order.data() + lo, static_cast<std::size_t>(hi - lo));
      std::vector<int> labels;
      if (data.labels) {
        for (std::int64_t i : idx) labels.push_back((*data.labels)[i]);
      }
      Tape<float> tape;
      TapeScope<float> scope(tape);
      Tensor flat({static_cast<std::int64_t>(theta.size())}, theta);
      flat.set_requires_grad(true);
      auto [input, target] = SplitInputTarget(WindowBatch<float>(data, idx), cfg.lookback);
      ForwardOptions fwd;
      fwd.collect_features = false;
      fwd.running_stats = &result.params.norm_state;
      Tensor loss;
      try {
        loss = TaskLoss(TsfeForward(input, flat, cfg, fwd).prediction, target, cfg.head, labels);
      } catch (const NumericError& e) {
        throw NumericError("training diverged in epoch " + std::to_string(epoch) + ": " +
                           e.what());
      }
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("training diverged in epoch " + std::to_string(epoch));
      }
      Tensor grad = Differentiate<float>(loss, {flat})[0];
      auto g = grad.data();
      ++step;
      if (options.optimizer == OptimizerKind::kSgd) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
          m1[i] = options.momentum * m1[i] + g[i];
          theta[i] = static_cast<float>(theta[i] - options.lr * m1[i]);
        }
      } else {
        constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t i = 0; i < theta.size(); ++i) {
          m1[i] = kBeta1 * m1[i] + (1 - kBeta1) * g[i];
          m2[i] = kBeta2 * m2[i] + (1 - kBeta2) * g[i] * g[i];
          theta[i] = static_cast<float>(theta[i] -
                                        options.lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + kEps));
        }
      }
      loss_sum += value;
      ++batches;
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    if (!std::all_of(theta.begin(), theta.end(), [](float v) { return std::isfinite(v); })) {
      throw NumericError("training diverged in epoch " + std::to_string(epoch));
    }
    result.epoch_losses.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, result.params);
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

std::vector<float> Predict(const ModelParams& params, const WindowSet& data,
                           std::int64_t batch_size) {
  const TsfeConfig& cfg = params.config;
  TSDC_CHECK(data.count >= 1, "cannot predict on an empty window set");
  TSDC_CHECK(data.lookback == cfg.lookback && data.channels == cfg.channels,
             "windows do not match the model config");
  TSDC_CHECK(batch_size >= 1, "batch_size must be >= 1");
  NoGradScope<float> no_grad;
  Tensor flat({params.size()}, params.values);
  ForwardOptions fwd;
  fwd.training = false;
  fwd.eval_stats = &params.norm_state;
  fwd.collect_features = false;
  std::vector<float> out;
  std::vector<std::int64_t> idx;
  for (std::int64_t lo = 0; lo < data.count; lo += batch_size) {
    const std::int64_t hi = std::min(data.count, lo + batch_size);
    idx.resize(static_cast<std::size_t>(hi - lo));
    std::iota(idx.begin(), idx.end(), lo);
    Tensor input = SplitInputTarget(WindowBatch<float>(data, idx), cfg.lookback).first;
    Tensor pred = TsfeForward(input, flat, cfg, fwd).prediction;
    out.insert(out.end(), pred.data().begin(), pred.data().end());
  }
  return out;
}

}  // namespace tsdc

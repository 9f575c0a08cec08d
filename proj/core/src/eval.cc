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

#include "tsdc/eval.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "tsdc/error.h"
#include "tsdc/trajectory.h"

namespace tsdc {
namespace {

void CheckTrainingRange(const WindowSet& ws, std::int64_t begin, std::int64_t end,
                        const char* what) {
  for (std::int64_t s : ws.starts) {
    TSDC_CHECK(s >= begin && s + ws.window_len() <= end, what, ": window at row ", s,
               " leaves the training rows [", begin, ", ", end, ")");
  }
}

std::array<std::int64_t, 3> SplitLengths(std::int64_t n, const SplitRatios& r) {
  const auto train = RatioFloor(n, r.train);
  const auto val = RatioFloor(n, r.val);
  return {train, val, n - train - val};
}

}  // namespace

RegressionScores RegressionMetrics(std::span<const float> prediction,
                                   std::span<const float> truth) {
  TSDC_CHECK(prediction.size() == truth.size(), "prediction has ", prediction.size(),
             " values, truth has ", truth.size());
  TSDC_CHECK(!prediction.empty(), "no values to score");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - truth[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(truth.size());
  const RegressionScores r{abs_sum / n, sq_sum / n};
  TSDC_CHECK(r.mae <= std::sqrt(r.mse) * (1.0 + 1e-12) + 1e-300, "MAE ", r.mae,
             " exceeds sqrt(MSE) ", std::sqrt(r.mse));
  return r;
}

RegressionScores RegressionMetrics(const Tensor& prediction, const Tensor& truth) {
  TSDC_CHECK(prediction.shape() == truth.shape(), "shape mismatch ",
             ShapeToString(prediction.shape()), " vs ", ShapeToString(truth.shape()));
  return RegressionMetrics(prediction.data(), truth.data());
}

ClassificationScores ClassificationMetrics(std::span<const float> logits, std::int64_t num_classes,
                                           const std::vector<int>& labels) {
  if (labels.empty()) throw Error("classification metrics on an empty batch");
  TSDC_CHECK(num_classes >= 1 &&
                 static_cast<std::int64_t>(logits.size()) ==
                     static_cast<std::int64_t>(labels.size()) * num_classes,
             "logits hold ", logits.size(), " values for ", labels.size(), " labels and ",
             num_classes, " classes");
  ClassificationScores s;
  s.confusion.assign(static_cast<std::size_t>(num_classes),
                     std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0));
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    TSDC_CHECK(labels[i] >= 0 && labels[i] < num_classes, "label ", labels[i], " out of range");
    auto row = logits.subspan(i * num_classes, num_classes);
    const auto pred = std::max_element(row.begin(), row.end()) - row.begin();
    ++s.confusion[labels[i]][pred];
    if (pred == labels[i]) ++correct;
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  double sum = 0.0;
  for (std::int64_t c = 0; c < num_classes; ++c) {
    std::int64_t predicted = 0;
    for (std::int64_t t = 0; t < num_classes; ++t) predicted += s.confusion[t][c];
    if (predicted > 0) sum += static_cast<double>(s.confusion[c][c]) / predicted;
  }
  s.precision = sum / static_cast<double>(num_classes);
  return s;
}

TrainResult TrainDownstream(const WindowSet& data, const TsfeConfig& cfg,
                            const TrainOptions& options) {
  TSDC_CHECK(data.count >= 1, "downstream training data is empty");
  return TrainModel(data, cfg, options);
}

Metrics Evaluate(const ModelParams& params, const WindowSet& test, std::int64_t batch_size) {
  if (test.count == 0) throw Error("cannot evaluate on an empty test set");
  test.Validate();
  const TsfeConfig& cfg = params.config;
  Metrics m;
  m.num_params = params.size();
  const std::vector<float> pred = Predict(params, test, batch_size);
  if (cfg.head == HeadKind::kForecast) {
    TSDC_CHECK(test.horizon == cfg.horizon, "test horizon ", test.horizon,
               " does not match model horizon ", cfg.horizon);
    std::vector<float> truth;
    truth.reserve(pred.size());
    for (std::int64_t i = 0; i < test.count; ++i) {
      auto w = test.window(i);
      truth.insert(truth.end(), w.begin() + test.lookback * test.channels, w.end());
    }
    const RegressionScores r = RegressionMetrics(pred, truth);
    m.mae = r.mae;
    m.mse = r.mse;
  } else {
    TSDC_CHECK(test.labels.has_value(), "classification test set has no labels");
    const ClassificationScores c = ClassificationMetrics(pred, cfg.num_classes, *test.labels);
    m.accuracy = c.accuracy;
    m.precision = c.precision;
  }
  return m;
}

std::vector<Metrics> CrossArchTransfer(const WindowSet& train,
                                       const std::vector<TsfeConfig>& variants,
                                       const WindowSet& test, const TrainOptions& options) {
  std::vector<Metrics> out;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const TsfeConfig& cfg = variants[v];
    if (cfg.lookback != train.lookback || cfg.channels != train.channels ||
        (cfg.head == HeadKind::kForecast && cfg.horizon != train.horizon)) {
      throw Error("variant " + std::to_string(v) + " expects lookback " +
                  std::to_string(cfg.lookback) + ", horizon " + std::to_string(cfg.horizon) +
                  ", channels " + std::to_string(cfg.channels) + " but the data has " +
                  std::to_string(train.lookback) + ", " + std::to_string(train.horizon) + ", " +
                  std::to_string(train.channels));
    }
    TrainResult trained = TrainDownstream(train, cfg, options);
    Metrics m = Evaluate(trained.params, test);
    m.train_seconds = trained.train_seconds;
    out.push_back(m);
  }
  return out;
}

StreamResult StreamEval(const TimeSeriesDataset& ds, const StreamConfig& config,
                        StreamPolicy policy) {
  ds.Validate();
  const TsfeConfig& cfg = config.model;
  cfg.Validate();
  TSDC_CHECK(config.base_fraction > 0.0 && config.base_fraction < 1.0,
             "base_fraction must be in (0, 1)");
  const std::int64_t w = cfg.lookback + cfg.horizon;

  auto segments_for = [&](std::int64_t total) {
    StreamSegments s;
    s.base_begin = 0;
    s.base_end = RatioFloor(total, config.base_fraction);
    s.inc_begin = s.base_end;
    s.inc_end = total;
    const auto b = SplitLengths(s.base_end - s.base_begin, config.stage_split);
    const auto i = SplitLengths(s.inc_end - s.inc_begin, config.stage_split);
    s.base_train_end = s.base_begin + b[0];
    s.base_test_begin = s.base_train_end + b[1];
    s.inc_train_end = s.inc_begin + i[0];
    s.inc_test_begin = s.inc_train_end + i[1];
    return s;
  };
  auto long_enough = [&](const StreamSegments& s) {
    return s.base_train_end - s.base_begin >= w && s.base_end - s.base_test_begin >= w &&
           s.inc_train_end - s.inc_begin >= w && s.inc_end - s.inc_test_begin >= w;
  };
  const StreamSegments seg = segments_for(ds.time_steps);
  if (!long_enough(seg)) {
    std::int64_t need = w;
    while (!long_enough(segments_for(need))) ++need;
    throw Error("series of " + std::to_string(ds.time_steps) +
                " steps is too short for the streaming protocol; need at least " +
                std::to_string(need) + " steps for windows of length " + std::to_string(w));
  }

  auto slice = [&](std::int64_t begin, std::int64_t end) {
    TimeSeriesDataset out;
    out.time_steps = end - begin;
    out.channels = ds.channels;
    out.values.assign(ds.values.begin() + begin * ds.channels, ds.values.begin() + end * ds.channels);
    out.channel_names = ds.channel_names;
    out.granularity = ds.granularity;
    out.origin = ds.origin + begin;
    return out;
  };
  const TimeSeriesDataset base = slice(seg.base_begin, seg.base_end);
  const TimeSeriesDataset inc = slice(seg.inc_begin, seg.inc_end);
  const auto base_parts = SplitChronological(base, config.stage_split);
  const auto inc_parts = SplitChronological(inc, config.stage_split);
  const NormStats stats = ComputeNormStats(base_parts[0]);
  const std::int64_t stride = config.window_stride;
  const WindowSet base_train =
      MakeWindows(Standardize(base_parts[0], stats), cfg.lookback, cfg.horizon, stride);
  const WindowSet base_test =
      MakeWindows(Standardize(base_parts[2], stats), cfg.lookback, cfg.horizon, 1);
  const WindowSet inc_train =
      MakeWindows(Standardize(inc_parts[0], stats), cfg.lookback, cfg.horizon, stride);
  const WindowSet inc_test =
      MakeWindows(Standardize(inc_parts[2], stats), cfg.lookback, cfg.horizon, 1);
  CheckTrainingRange(base_train, ds.origin + seg.base_begin, ds.origin + seg.base_train_end,
                     "base training");
  CheckTrainingRange(inc_train, ds.origin + seg.inc_begin, ds.origin + seg.inc_train_end,
                     "incremental training");

  StreamResult result;
  result.segments = seg;
  TrainResult stage1 = TrainModel(base_train, cfg, config.train);
  result.b0 = Evaluate(stage1.params, base_test);
  result.b0.train_seconds = stage1.train_seconds;

  WindowSet stage2_data = inc_train;
  if (policy == StreamPolicy::kCondensedReplay) {
    const ExpertBuffer buffer = TrainExpertBuffer(base_train, cfg, config.expert,
                                                  config.num_experts, config.expert.seed);
    const CondensedDataset condensed = Condense(base_train, buffer, cfg, config.condense);
    stage2_data = ConcatWindows(condensed.ToWindowSet(), inc_train);
  }
  TrainOptions retrain = config.train;
  if (config.retrain_epochs > 0) retrain.epochs = config.retrain_epochs;
  TrainResult stage2 = TrainModel(stage2_data, cfg, retrain, &stage1.params);
  result.b1 = Evaluate(stage2.params, base_test);
  result.incremental = Evaluate(stage2.params, inc_test);
  result.b1.train_seconds = result.incremental.train_seconds = stage2.train_seconds;
  return result;
}

void to_json(nlohmann::json& j, const MetricsRecord& r) {
  j = nlohmann::json{{"method", r.method},
                     {"dataset", r.dataset},
                     {"pl", r.pl},
                     {"n_condensed", r.n_condensed},
                     {"seed", r.seed},
                     {"mae", r.metrics.mae},
                     {"mse", r.metrics.mse},
                     {"train_seconds", r.metrics.train_seconds},
                     {"num_params", r.metrics.num_params}};
  if (r.metrics.accuracy) j["accuracy"] = *r.metrics.accuracy;
  if (r.metrics.precision) j["precision"] = *r.metrics.precision;
}

void from_json(const nlohmann::json& j, MetricsRecord& r) {
  r.method = j.at("method").get<std::string>();
  r.dataset = j.value("dataset", std::string{});
  r.pl = j.at("pl").get<std::int64_t>();
  r.n_condensed = j.value("n_condensed", std::int64_t{0});
  r.seed = j.value("seed", std::uint64_t{0});
  r.metrics.mae = j.at("mae").get<double>();
  r.metrics.mse = j.at("mse").get<double>();
  r.metrics.train_seconds = j.value("train_seconds", 0.0);
  r.metrics.num_params = j.value("num_params", std::int64_t{0});
  if (j.contains("accuracy")) r.metrics.accuracy = j.at("accuracy").get<double>();
  if (j.contains("precision")) r.metrics.precision = j.at("precision").get<double>();
}

std::vector<PcaPoint> PcaProjection(const WindowSet& original, const WindowSet& condensed) {
  TSDC_CHECK(original.window_size() == condensed.window_size(),
             "original and condensed windows differ in size");
  const std::int64_t dim = original.window_size();
  const std::int64_t rows = original.count + condensed.count;
  TSDC_CHECK(rows >= 1 && dim >= 1, "nothing to project");
  Eigen::MatrixXd x(rows, dim);
  for (std::int64_t i = 0; i < rows; ++i) {
    auto w = i < original.count ? original.window(i) : condensed.window(i - original.count);
    for (std::int64_t d = 0; d < dim; ++d) x(i, d) = w[d];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, rows - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  // Eigenvalues ascend; take the last two columns.
  Eigen::MatrixXd basis(dim, 2);
  basis.col(0) = solver.eigenvectors().col(dim - 1);
  basis.col(1) = dim >= 2 ? Eigen::VectorXd(solver.eigenvectors().col(dim - 2))
                          : Eigen::VectorXd::Zero(dim);
  for (int c = 0; c < 2; ++c) {
    // Fix the sign so the largest-magnitude loading is positive.
    Eigen::Index at = 0;
    basis.col(c).cwiseAbs().maxCoeff(&at);
    if (basis(at, c) < 0) basis.col(c) *= -1.0;
  }
  const Eigen::MatrixXd proj = x * basis;
  std::vector<PcaPoint> out;
  out.reserve(static_cast<std::size_t>(rows));
  for (std::int64_t i = 0; i < rows; ++i) {
    out.push_back({i < original.count ? "original" : "condensed", proj(i, 0), proj(i, 1)});
  }
  return out;
}

void WritePcaCsv(const std::vector<PcaPoint>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "set,x,y\n" << std::setprecision(9);
  for (const auto& p : points) out << p.set << ',' << p.x << ',' << p.y << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace tsdc

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

#include "tsdc/condense.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <unordered_set>

#include "tsdc/binary_io.h"
#include "tsdc/error.h"
#include "tsdc/numerics/autodiff.h"
#include "tsdc/numerics/ops.h"
#include "tsdc/numerics/tape.h"

namespace tsdc {
namespace {

// Floyd's algorithm: k distinct values from [0, population).
std::vector<std::int64_t> DrawDistinct(std::mt19937_64& rng, std::int64_t population,
                                       std::int64_t k) {
  std::unordered_set<std::int64_t> chosen;
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(k));
  for (std::int64_t j = population - k; j < population; ++j) {
    const std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, j)(rng);
    const std::int64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  return out;
}

double SquaredDistance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::string InitModeName(InitMode mode) {
  return mode == InitMode::kRealSample ? "real" : "gaussian";
}

InitMode ParseInitMode(const std::string& name) {
  if (name == "real" || name == "real-sample") return InitMode::kRealSample;
  if (name == "gaussian") return InitMode::kGaussian;
  throw ContractViolation("unknown init mode '" + name + "' (expected real or gaussian)");
}

Tensor CondensedDataset::AsTensor() const {
  return Tensor({count, window_len(), channels}, windows);
}

WindowSet CondensedDataset::ToWindowSet() const {
  WindowSet ws;
  ws.count = count;
  ws.lookback = lookback;
  ws.horizon = horizon;
  ws.channels = channels;
  ws.windows = windows;
  ws.labels = labels;
  ws.num_classes = num_classes;
  return ws;
}

void CondensedDataset::Validate() const {
  TSDC_CHECK(count >= 1, "condensed set must hold at least one window");
  TSDC_CHECK(lookback >= 1 && horizon >= 0 && channels >= 1, "invalid condensed window shape");
  TSDC_CHECK(static_cast<std::int64_t>(windows.size()) == count * window_len() * channels,
             "condensed payload has ", windows.size(), " values, expected ",
             count * window_len() * channels);
  if (labels) {
    TSDC_CHECK(static_cast<std::int64_t>(labels->size()) == count, "label count mismatch");
    for (int l : *labels) {
      TSDC_CHECK(l >= 0 && l < num_classes, "label ", l, " outside [0, ", num_classes, ")");
    }
  }
}

CondensedDataset InitCondensed(const WindowSet& source, std::int64_t n, InitMode mode,
                               std::uint64_t seed) {
  source.Validate();
  TSDC_CHECK(n >= 1, "condensed size must be >= 1, got ", n);
  CondensedDataset out;
  out.count = n;
  out.lookback = source.lookback;
  out.horizon = source.horizon;
  out.channels = source.channels;
  out.init_mode = mode;
  out.seed = seed;
  out.num_classes = source.num_classes;
  std::mt19937_64 rng(seed);
  const std::int64_t size = source.window_size();

  std::vector<std::int64_t> picks;
  if (source.labels) {
    const int k = source.num_classes;
    TSDC_CHECK(k >= 1, "labelled source needs num_classes >= 1");
    std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < source.count; ++i) by_class[(*source.labels)[i]].push_back(i);
    out.labels.emplace();
    for (int c = 0; c < k; ++c) {
      const std::int64_t want = n / k + (c < n % k ? 1 : 0);
      if (mode == InitMode::kRealSample) {
        auto& pool = by_class[c];
        if (static_cast<std::int64_t>(pool.size()) < want) {
          throw Error("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                      " windows, cannot draw " + std::to_string(want));
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        picks.insert(picks.end(), pool.begin(), pool.begin() + want);
      }
      out.labels->insert(out.labels->end(), static_cast<std::size_t>(want), c);
    }
  } else if (mode == InitMode::kRealSample) {
    if (n > source.count) {
      throw Error("cannot draw " + std::to_string(n) + " real windows from a source of " +
                  std::to_string(source.count));
    }
    std::vector<std::int64_t> all(static_cast<std::size_t>(source.count));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    picks.assign(all.begin(), all.begin() + n);
  }

  out.windows.resize(static_cast<std::size_t>(n * size));
  if (mode == InitMode::kRealSample) {
    for (std::int64_t i = 0; i < n; ++i) {
      auto w = source.window(picks[i]);
      std::copy(w.begin(), w.end(), out.windows.begin() + i * size);
    }
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (float& v : out.windows) v = static_cast<float>(normal(rng));
  }
  return out;
}

void SaveCondensed(const CondensedDataset& data, const std::string& path) {
  data.Validate();
  BinaryWriter w;
  w.Bytes("TDCS", 4);
  w.U32(kCondensedFormatVersion);
  w.U32(static_cast<std::uint32_t>(data.count));
  w.U32(static_cast<std::uint32_t>(data.window_len()));
  w.U32(static_cast<std::uint32_t>(data.channels));
  w.U8(data.labels ? 1 : 0);
  w.F32(data.windows);
  if (data.labels) {
    for (int l : *data.labels) w.I32(l);
  }
  w.AppendCrc();
  WriteFileBytes(path, w.buffer());
}

CondensedDataset LoadCondensed(const std::string& path, std::optional<std::int64_t> lookback) {
  const std::string image = ReadFileBytes(path);
  const std::string what = "condensed file '" + path + "'";
  BinaryReader r(VerifyCrc(image, what), what);
  char magic[4];
  r.Bytes(magic, 4);
  if (std::string_view(magic, 4) != "TDCS") throw FormatError(what + ": bad magic");
  const std::uint32_t version = r.U32();
  if (version != kCondensedFormatVersion) {
    throw VersionError(what + ": format version " + std::to_string(version) +
                       ", this build reads version " + std::to_string(kCondensedFormatVersion));
  }
  CondensedDataset out;
  out.count = r.U32();
  const std::int64_t window_len = r.U32();
  out.channels = r.U32();
  const std::uint8_t has_labels = r.U8();
  if (out.count == 0 || window_len == 0 || out.channels == 0 || has_labels > 1) {
    throw FormatError(what + ": invalid header");
  }
  out.lookback = lookback.value_or(window_len);
  if (out.lookback < 1 || out.lookback > window_len) {
    throw FormatError(what + ": lookback " + std::to_string(out.lookback) +
                      " does not fit windows of length " + std::to_string(window_len));
  }
  out.horizon = window_len - out.lookback;
  const std::uint64_t values = static_cast<std::uint64_t>(out.count) * window_len * out.channels;
  const std::uint64_t need = 4 * values + (has_labels ? 4ull * out.count : 0);
  if (r.remaining() != need) {
    throw FormatError(what + ": payload holds " + std::to_string(r.remaining()) +
                      " bytes, header implies " + std::to_string(need));
  }
  out.windows.resize(values);
  r.F32(out.windows);
  if (has_labels) {
    out.labels.emplace(static_cast<std::size_t>(out.count));
    int max_label = -1;
    for (int& l : *out.labels) {
      l = r.I32();
      if (l < 0) throw FormatError(what + ": negative label");
      max_label = std::max(max_label, l);
    }
    out.num_classes = max_label + 1;
  }
  return out;
}

void CondenseConfig::Validate() const {
  TSDC_CHECK(outer_steps >= 0, "outer_steps must be >= 0");
  TSDC_CHECK(inner_steps >= 1, "inner_steps must be >= 1");
  TSDC_CHECK(expert_steps >= 1, "expert_steps must be >= 1");
  TSDC_CHECK(inner_lr >= 0.0, "inner_lr must be >= 0");
  TSDC_CHECK(condensed_lr >= 0.0, "condensed_lr must be >= 0");
  TSDC_CHECK(condensed_momentum >= 0.0 && condensed_momentum < 1.0,
             "condensed_momentum must be in [0, 1)");
  TSDC_CHECK(n >= 1, "n must be >= 1");
  TSDC_CHECK(batch_size >= 0, "batch_size must be >= 0");
  TSDC_CHECK(lambda_task >= 0.0 && lambda_fre >= 0.0 && lambda_tmm >= 0.0,
             "loss weights must be non-negative");
  TSDC_CHECK(kernel >= 1 && kernel % 2 == 1, "kernel must be odd and >= 1");
}

void to_json(nlohmann::json& j, const CondenseConfig& c) {
  j = nlohmann::json{{"outer_steps", c.outer_steps},
                     {"inner_steps", c.inner_steps},
                     {"expert_steps", c.expert_steps},
                     {"inner_lr", c.inner_lr},
                     {"condensed_lr", c.condensed_lr},
                     {"condensed_momentum", c.condensed_momentum},
                     {"n", c.n},
                     {"batch_size", c.batch_size},
                     {"lambda_task", c.lambda_task},
                     {"lambda_fre", c.lambda_fre},
                     {"lambda_tmm", c.lambda_tmm},
                     {"kernel", c.kernel},
                     {"init", InitModeName(c.init)},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CondenseConfig& c) {
  c.outer_steps = j.value("outer_steps", c.outer_steps);
  c.inner_steps = j.value("inner_steps", c.inner_steps);
  c.expert_steps = j.value("expert_steps", c.expert_steps);
  c.inner_lr = j.value("inner_lr", c.inner_lr);
  c.condensed_lr = j.value("condensed_lr", c.condensed_lr);
  c.condensed_momentum = j.value("condensed_momentum", c.condensed_momentum);
  c.n = j.value("n", c.n);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lambda_task = j.value("lambda_task", c.lambda_task);
  c.lambda_fre = j.value("lambda_fre", c.lambda_fre);
  c.lambda_tmm = j.value("lambda_tmm", c.lambda_tmm);
  c.kernel = j.value("kernel", c.kernel);
  if (j.contains("init")) c.init = ParseInitMode(j.at("init").get<std::string>());
  c.seed = j.value("seed", c.seed);
}

template <typename R>
InnerTrainResult<R> InnerTrain(const BasicTensor<R>& theta_start,
                               const BasicTensor<R>& condensed, const std::vector<int>& labels,
                               const std::vector<std::vector<std::int64_t>>& syn_batches,
                               const std::vector<BasicTensor<R>>& original_batches,
                               const TsfeConfig& cfg, const InnerTrainOptions& options) {
  TSDC_CHECK(options.steps >= 1, "inner training needs at least one step");
  TSDC_CHECK(options.alpha >= 0.0, "inner learning rate must be non-negative");
  TSDC_CHECK(condensed.rank() == 3 && condensed.dim(0) >= 1 && condensed.dim(2) == cfg.channels,
             "condensed windows must be [N, W, ", cfg.channels, "], got ",
             ShapeToString(condensed.shape()));
  TSDC_CHECK(!original_batches.empty(), "inner training needs original batches");
  TSDC_CHECK(syn_batches.empty() ||
                 static_cast<std::int64_t>(syn_batches.size()) >= options.steps,
             "need one condensed batch per inner step");
  TSDC_CHECK(theta_start.numel() == ParameterCount(cfg), "theta has ", theta_start.numel(),
             " values, config needs ", ParameterCount(cfg));

  std::optional<Tape<R>> own_tape;
  std::optional<TapeScope<R>> scope;
  if (Tape<R>::Active() == nullptr) {
    own_tape.emplace();
    scope.emplace(*own_tape);
  }
  BasicTensor<R> theta = theta_start;
  if (!theta.requires_grad()) {
    theta = theta_start.Detach();
    theta.set_requires_grad(true);
  }
  std::vector<std::int64_t> all(static_cast<std::size_t>(condensed.dim(0)));
  std::iota(all.begin(), all.end(), 0);

  InnerTrainResult<R> result;
  for (std::int64_t i = 0; i < options.steps; ++i) {
    const auto& idx = syn_batches.empty() ? all : syn_batches[i];
    std::vector<int> batch_labels;
    if (!labels.empty()) {
      for (std::int64_t r : idx) batch_labels.push_back(labels[r]);
    }
    auto [input, target] = SplitInputTarget(SelectSamples(condensed, idx), cfg.lookback);
    ForwardOptions fwd;
    TsfeOutput<R> syn = TsfeForward(input, theta, cfg, fwd);
    BasicTensor<R> task = TaskLoss(syn.prediction, target, cfg.head, batch_labels);
    const auto& orig = original_batches[static_cast<std::size_t>(i) % original_batches.size()];
    TsfeOutput<R> real = TsfeForward(SplitInputTarget(orig, cfg.lookback).first, theta, cfg, fwd);
    BasicTensor<R> fre = FrequencyMatchingLoss(real.features, syn.features, options.kernel);
    if (!task.AllFinite() || !fre.AllFinite()) {
      throw NumericError("non-finite loss in inner step " + std::to_string(i));
    }
    BasicTensor<R> objective =
        options.lambda_fre != 0.0 ? Add(task, Scale(fre, static_cast<R>(options.lambda_fre)))
                                  : task;
    BasicTensor<R> grad = Differentiate<R>(objective, {theta}, {.create_graph = true})[0];
    theta = Sub(theta, Scale(grad, static_cast<R>(options.alpha)));
    if (!theta.AllFinite()) {
      throw NumericError("non-finite parameters after inner step " + std::to_string(i));
    }
    result.task_loss_sum = i == 0 ? task : Add(result.task_loss_sum, task);
    result.fre_loss_sum = i == 0 ? fre : Add(result.fre_loss_sum, fre);
  }
  result.theta_end = theta;
  return result;
}

template InnerTrainResult<float> InnerTrain(const Tensor&, const Tensor&, const std::vector<int>&,
                                            const std::vector<std::vector<std::int64_t>>&,
                                            const std::vector<Tensor>&, const TsfeConfig&,
                                            const InnerTrainOptions&);
template InnerTrainResult<double> InnerTrain(const Tensor64&, const Tensor64&,
                                             const std::vector<int>&,
                                             const std::vector<std::vector<std::int64_t>>&,
                                             const std::vector<Tensor64>&, const TsfeConfig&,
                                             const InnerTrainOptions&);

void to_json(nlohmann::json& j, const CondenseDiagnostics& d) {
  j = nlohmann::json{{"step", d.step},   {"L_task", d.l_task},
                     {"L_Fre", d.l_fre}, {"L_tmm", d.l_tmm},
                     {"L_all", d.l_all}, {"expert_index", d.expert_index},
                     {"e0", d.e0}};
  if (d.skipped) j["skipped"] = true;
}

Condenser::Condenser(const WindowSet& original, const ExpertBuffer& buffer,
                     const TsfeConfig& model, const CondenseConfig& config,
                     CondensedDataset init)
    : original_(original),
      buffer_(buffer),
      model_(model),
      config_(config),
      condensed_(std::move(init)),
      rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
  model_.Validate();
  config_.Validate();
  buffer_.Validate();
  condensed_.Validate();
  original_.Validate();
  TSDC_CHECK(buffer_.param_len() == ParameterCount(model_), "expert buffer stores ",
             buffer_.param_len(), " parameters per snapshot, model needs ",
             ParameterCount(model_));
  TSDC_CHECK(buffer_.epochs() > config_.expert_steps, "expert trajectories have ",
             buffer_.epochs(), " snapshots; expert_steps ", config_.expert_steps,
             " needs more");
  TSDC_CHECK(original_.lookback == model_.lookback && original_.channels == model_.channels &&
                 original_.count >= 1,
             "original windows do not match the model config");
  TSDC_CHECK(condensed_.lookback == model_.lookback && condensed_.channels == model_.channels,
             "condensed windows do not match the model config");
  if (model_.head == HeadKind::kForecast) {
    TSDC_CHECK(condensed_.horizon == model_.horizon, "condensed horizon does not match model");
  } else {
    TSDC_CHECK(condensed_.labels.has_value(), "classification condensation needs labels");
  }
  velocity_.assign(condensed_.windows.size(), 0.0);
}

std::vector<std::vector<std::int64_t>> Condenser::SampleSynBatches(std::int64_t steps) {
  const std::int64_t n = condensed_.count;
  if (config_.batch_size == 0 || config_.batch_size >= n) return {};
  std::vector<std::vector<std::int64_t>> out;
  for (std::int64_t i = 0; i < steps; ++i) out.push_back(DrawDistinct(rng_, n, config_.batch_size));
  return out;
}

std::vector<Tensor> Condenser::SampleOriginalBatches(std::int64_t steps, std::int64_t batch) {
  std::vector<Tensor> out;
  batch = std::min(batch, original_.count);
  for (std::int64_t i = 0; i < steps; ++i) {
    const auto idx = DrawDistinct(rng_, original_.count, batch);
    out.push_back(WindowBatch<float>(original_, idx));
  }
  return out;
}

std::int64_t Condenser::NextExpert(std::int64_t e0) {
  const std::int64_t k = buffer_.size();
  if (k == 1) return 0;
  if (order_.empty() || (step_ - 1) % k == 0) {
    const auto& start = buffer_.trajectories[last_expert_].snapshots[e0];
    std::vector<int> labels = condensed_.labels.value_or(std::vector<int>{});
    const auto foreseen =
        PreUpdatePath(start, condensed_.AsTensor(), labels, config_.expert_steps,
                      config_.inner_lr, model_, SampleSynBatches(config_.expert_steps));
    order_ = CurriculumRank(buffer_, foreseen, e0, config_.expert_steps).order;
    cursor_ = 0;
  }
  last_expert_ = order_[cursor_ % k];
  ++cursor_;
  return last_expert_;
}

CondenseDiagnostics Condenser::Step() {
  ++step_;
  CondenseDiagnostics diag;
  diag.step = step_;
  const std::int64_t a = config_.expert_steps;
  std::uniform_int_distribution<std::int64_t> pick_e0(0, buffer_.epochs() - a - 1);
  std::int64_t e0 = pick_e0(rng_);
  const std::int64_t k = NextExpert(e0);
  const auto& snaps = buffer_.trajectories[k].snapshots;
  if (SquaredDistance(snaps[e0], snaps[e0 + a]) < 1e-12) {
    e0 = pick_e0(rng_);
    if (SquaredDistance(snaps[e0], snaps[e0 + a]) < 1e-12) {
      std::cerr << "warning: condense step " << step_ << ": expert " << k
                << " has a degenerate segment; step skipped\n";
      diag.expert_index = k;
      diag.e0 = e0;
      diag.skipped = true;
      return diag;
    }
  }
  diag.expert_index = k;
  diag.e0 = e0;
  const FlatParams& start = snaps[e0];
  const FlatParams& target = snaps[e0 + a];
  const std::int64_t b = config_.inner_steps;
  const std::int64_t batch =
      config_.batch_size == 0 ? condensed_.count : std::min(config_.batch_size, condensed_.count);

  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor windows = condensed_.AsTensor();
  windows.set_requires_grad(true);
  Tensor theta({static_cast<std::int64_t>(start.size())}, start);
  theta.set_requires_grad(true);
  InnerTrainOptions inner{b, config_.inner_lr, config_.lambda_fre, config_.kernel};
  const auto syn_batches = SampleSynBatches(b);
  const auto orig_batches = SampleOriginalBatches(b, batch);
  InnerTrainResult<float> res =
      InnerTrain(theta, windows, condensed_.labels.value_or(std::vector<int>{}), syn_batches,
                 orig_batches, model_, inner);
  const float inv_b = 1.0f / static_cast<float>(b);
  Tensor l_task = Scale(res.task_loss_sum, inv_b);
  Tensor l_fre = Scale(res.fre_loss_sum, inv_b);
  std::optional<Tensor> l_tmm = TrajectoryMatchingLoss(res.theta_end, target, start);
  TSDC_CHECK(l_tmm.has_value(), "degenerate trajectory segment after screening");

  Tensor l_all;
  auto add_term = [&](const Tensor& term, double weight) {
    if (weight == 0.0) return;
    Tensor scaled = Scale(term, static_cast<float>(weight));
    l_all = l_all.defined() ? Add(l_all, scaled) : scaled;
  };
  add_term(l_task, config_.lambda_task);
  add_term(l_fre, config_.lambda_fre);
  add_term(*l_tmm, config_.lambda_tmm);

  diag.l_task = l_task.item();
  diag.l_fre = l_fre.item();
  diag.l_tmm = l_tmm->item();
  diag.l_all = l_all.defined() ? l_all.item() : 0.0;
  if (!std::isfinite(diag.l_all) || !std::isfinite(diag.l_task) || !std::isfinite(diag.l_fre) ||
      !std::isfinite(diag.l_tmm)) {
    throw NumericError("non-finite condensation loss at step " + std::to_string(step_));
  }
  std::vector<float> grad(condensed_.windows.size(), 0.0f);
  if (l_all.defined() && l_all.on_tape()) {
    Tensor g = Differentiate<float>(l_all, {windows})[0];
    grad.assign(g.data().begin(), g.data().end());
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("non-finite condensation gradient at step " + std::to_string(step_));
    }
    velocity_[i] = config_.condensed_momentum * velocity_[i] + grad[i];
    condensed_.windows[i] =
        static_cast<float>(condensed_.windows[i] - config_.condensed_lr * velocity_[i]);
  }
  return diag;
}

CondensedDataset Condense(const WindowSet& original, const ExpertBuffer& buffer,
                          const TsfeConfig& model, const CondenseConfig& config,
                          const DiagnosticsSink& sink) {
  config.Validate();
  CondensedDataset init = InitCondensed(original, config.n, config.init, config.seed);
  if (config.outer_steps == 0) return init;
  Condenser condenser(original, buffer, model, config, std::move(init));
  for (std::int64_t s = 0; s < config.outer_steps; ++s) {
    CondenseDiagnostics d = condenser.Step();
    if (sink) sink(d);
  }
  return condenser.condensed();
}

}  // namespace tsdc

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

#include "tsdc/tsfe.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "tsdc/error.h"
#include "tsdc/numerics/ops.h"

namespace tsdc {
namespace {

template <typename R>
using T = BasicTensor<R>;

constexpr double kNormEps = 1e-5;

std::int64_t FloorDiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

template <typename R>
T<R> Linear(const T<R>& x, const T<R>& w, const T<R>& b) {
  return Add(MatMul(x, w), BroadcastRows(b, x.dim(0)));
}

template <typename R>
T<R> Normalize(const T<R>& x, const T<R>& scale, const T<R>& shift, const TsfeConfig& cfg,
               const ForwardOptions& options, std::int64_t slot) {
  const std::int64_t rows = x.dim(0), d = x.dim(1);
  switch (cfg.norm) {
    case NormKind::kNone:
      return x;
    case NormKind::kPerSample: {
      T<R> mu = Scale(SumCols(x), R(1) / static_cast<R>(d));
      T<R> xc = Sub(x, BroadcastCols(mu, d));
      T<R> var = Scale(SumCols(Mul(xc, xc)), R(1) / static_cast<R>(d));
      T<R> inv = Reciprocal(Sqrt(AddScalar(var, static_cast<R>(kNormEps))));
      T<R> y = Mul(xc, BroadcastCols(inv, d));
      return Add(Mul(y, BroadcastRows(scale, rows)), BroadcastRows(shift, rows));
    }
    case NormKind::kBatch:
      break;
  }
  if (!options.training) {
    TSDC_CHECK(options.eval_stats != nullptr,
               "batch normalization in evaluation mode needs running statistics");
    const NormState& st = *options.eval_stats;
    std::vector<R> mean(d), inv(d);
    for (std::int64_t i = 0; i < d; ++i) {
      mean[i] = static_cast<R>(st.mean[slot * d + i]);
      inv[i] = static_cast<R>(1.0 / std::sqrt(static_cast<double>(st.var[slot * d + i]) + kNormEps));
    }
    T<R> xc = Sub(x, BroadcastRows(T<R>({d}, std::move(mean)), rows));
    T<R> factor = Mul(T<R>({d}, std::move(inv)), scale);
    return Add(Mul(xc, BroadcastRows(factor, rows)), BroadcastRows(shift, rows));
  }
  TSDC_CHECK(rows >= 1, "batch normalization over an empty batch");
  T<R> mu = Scale(SumRows(x), R(1) / static_cast<R>(rows));
  T<R> xc = Sub(x, BroadcastRows(mu, rows));
  T<R> var = Scale(SumRows(Mul(xc, xc)), R(1) / static_cast<R>(rows));
  if (options.running_stats != nullptr) {
    NormState& st = *options.running_stats;
    const float m = st.momentum;
    const double unbias = rows > 1 ? static_cast<double>(rows) / (rows - 1) : 1.0;
    for (std::int64_t i = 0; i < d; ++i) {
      float& rm = st.mean[slot * d + i];
      float& rv = st.var[slot * d + i];
      rm = (1 - m) * rm + m * static_cast<float>(mu.data()[i]);
      rv = (1 - m) * rv + m * static_cast<float>(var.data()[i] * unbias);
    }
  }
  T<R> inv = Reciprocal(Sqrt(AddScalar(var, static_cast<R>(kNormEps))));
  return Add(Mul(xc, BroadcastRows(Mul(inv, scale), rows)), BroadcastRows(shift, rows));
}

std::string EnumName(HeadKind h) { return h == HeadKind::kForecast ? "forecast" : "classify"; }

std::string EnumName(NormKind n) {
  switch (n) {
    case NormKind::kBatch: return "batch";
    case NormKind::kPerSample: return "per_sample";
    case NormKind::kNone: return "none";
  }
  return "batch";
}

}  // namespace

std::int64_t PatchCount(std::int64_t n, std::int64_t patch_len, std::int64_t stride) {
  return FloorDiv(n - patch_len, stride) + 2;
}

std::int64_t TsfeConfig::num_patches() const {
  return PatchCount(lookback, patch_len, patch_stride);
}

void TsfeConfig::Validate() const {
  TSDC_CHECK(num_operators >= 1, "num_operators must be >= 1");
  TSDC_CHECK(num_heads >= 1 && model_dim >= 1 && model_dim % num_heads == 0,
             "model_dim (", model_dim, ") must be divisible by num_heads (", num_heads, ")");
  TSDC_CHECK(ff_dim >= 1, "ff_dim must be >= 1");
  TSDC_CHECK(patch_stride >= 1, "patch_stride must be >= 1");
  TSDC_CHECK(patch_len >= 1 && patch_len <= lookback, "patch_len (", patch_len,
             ") must be in [1, lookback=", lookback, "]");
  TSDC_CHECK(channels >= 1, "channels must be >= 1");
  if (head == HeadKind::kForecast) {
    TSDC_CHECK(horizon >= 1, "forecast head needs horizon >= 1");
  } else {
    TSDC_CHECK(num_classes >= 2, "classification head needs num_classes >= 2");
  }
}

void to_json(nlohmann::json& j, const TsfeConfig& c) {
  j = nlohmann::json{{"num_operators", c.num_operators},
                     {"num_heads", c.num_heads},
                     {"model_dim", c.model_dim},
                     {"ff_dim", c.ff_dim},
                     {"patch_len", c.patch_len},
                     {"patch_stride", c.patch_stride},
                     {"lookback", c.lookback},
                     {"horizon", c.horizon},
                     {"channels", c.channels},
                     {"head", EnumName(c.head)},
                     {"num_classes", c.num_classes},
                     {"norm", EnumName(c.norm)},
                     {"positional_encoding", c.positional_encoding}};
}

void from_json(const nlohmann::json& j, TsfeConfig& c) {
  c.num_operators = j.value("num_operators", c.num_operators);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.model_dim = j.value("model_dim", c.model_dim);
  c.ff_dim = j.value("ff_dim", c.ff_dim);
  c.patch_len = j.value("patch_len", c.patch_len);
  c.patch_stride = j.value("patch_stride", c.patch_stride);
  c.lookback = j.value("lookback", c.lookback);
  c.horizon = j.value("horizon", c.horizon);
  c.channels = j.value("channels", c.channels);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.positional_encoding = j.value("positional_encoding", c.positional_encoding);
  if (j.contains("head")) {
    const auto h = j.at("head").get<std::string>();
    TSDC_CHECK(h == "forecast" || h == "classify", "unknown head kind '", h, "'");
    c.head = h == "forecast" ? HeadKind::kForecast : HeadKind::kClassify;
  }
  if (j.contains("norm")) {
    const auto n = j.at("norm").get<std::string>();
    if (n == "batch") {
      c.norm = NormKind::kBatch;
    } else if (n == "per_sample") {
      c.norm = NormKind::kPerSample;
    } else if (n == "none") {
      c.norm = NormKind::kNone;
    } else {
      TSDC_CHECK(false, "unknown norm kind '", n, "'");
    }
  }
}

std::int64_t ParameterCount(const TsfeConfig& cfg) {
  const std::int64_t d = cfg.model_dim, f = cfg.ff_dim, p = cfg.num_patches();
  const std::int64_t embed = cfg.patch_len * d + d + (cfg.positional_encoding ? p * d : 0);
  const std::int64_t per_operator = 4 * (d * d + d) + 4 * d + (d * f + f) + (f * d + d);
  const std::int64_t head = cfg.head == HeadKind::kForecast
                                ? p * d * cfg.horizon + cfg.horizon
                                : d * cfg.num_classes + cfg.num_classes;
  return embed + cfg.num_operators * per_operator + head;
}

ParamLayout::ParamLayout(const TsfeConfig& cfg) {
  cfg.Validate();
  const std::int64_t d = cfg.model_dim, f = cfg.ff_dim, p = cfg.num_patches();
  Add("embed.weight", {cfg.patch_len, d});
  Add("embed.bias", {d});
  if (cfg.positional_encoding) Add("embed.position", {p, d});
  for (std::int64_t j = 0; j < cfg.num_operators; ++j) {
    const std::string pre = "op" + std::to_string(j) + ".";
    for (const char* m : {"q", "k", "v", "out"}) {
      Add(pre + "attn." + m + ".weight", {d, d});
      Add(pre + "attn." + m + ".bias", {d});
    }
    Add(pre + "norm1.scale", {d});
    Add(pre + "norm1.shift", {d});
    Add(pre + "ff1.weight", {d, f});
    Add(pre + "ff1.bias", {f});
    Add(pre + "ff2.weight", {f, d});
    Add(pre + "ff2.bias", {d});
    Add(pre + "norm2.scale", {d});
    Add(pre + "norm2.shift", {d});
  }
  if (cfg.head == HeadKind::kForecast) {
    Add("head.weight", {p * d, cfg.horizon});
    Add("head.bias", {cfg.horizon});
  } else {
    Add("head.weight", {d, cfg.num_classes});
    Add("head.bias", {cfg.num_classes});
  }
}

void ParamLayout::Add(std::string name, Shape shape) {
  ParamSlot slot{std::move(name), std::move(shape), total_};
  total_ += slot.size();
  slots_.push_back(std::move(slot));
}

const ParamSlot& ParamLayout::Find(const std::string& name) const {
  for (const auto& s : slots_) {
    if (s.name == name) return s;
  }
  throw ContractViolation("no parameter named '" + name + "'");
}

NormState NormState::Initial(const TsfeConfig& cfg) {
  NormState st;
  const auto n = static_cast<std::size_t>(2 * cfg.num_operators * cfg.model_dim);
  st.mean.assign(n, 0.0f);
  st.var.assign(n, 1.0f);
  return st;
}

ModelParams ModelParams::Unflatten(const TsfeConfig& cfg, std::vector<float> flat) {
  TSDC_CHECK(static_cast<std::int64_t>(flat.size()) == ParameterCount(cfg), "flat vector has ",
             flat.size(), " values, config needs ", ParameterCount(cfg));
  ModelParams p;
  p.config = cfg;
  p.values = std::move(flat);
  p.norm_state = NormState::Initial(cfg);
  return p;
}

ModelParams InitParams(const TsfeConfig& cfg, std::uint64_t seed) {
  ParamLayout layout(cfg);
  std::mt19937_64 rng(seed);
  std::vector<float> values(static_cast<std::size_t>(layout.total()));
  std::int64_t fan_in = 1;
  for (const auto& slot : layout.slots()) {
    const auto ends_with = [&](const std::string& suffix) {
      return slot.name.size() >= suffix.size() &&
             slot.name.compare(slot.name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    float* out = values.data() + slot.offset;
    if (ends_with(".scale")) {
      std::fill(out, out + slot.size(), 1.0f);
      continue;
    }
    if (ends_with(".shift")) {
      std::fill(out, out + slot.size(), 0.0f);
      continue;
    }
    double bound = 0.02;
    if (ends_with(".weight")) {
      fan_in = slot.shape[0];
      bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    } else if (ends_with(".bias")) {
      bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::int64_t i = 0; i < slot.size(); ++i) out[i] = static_cast<float>(dist(rng));
  }
  ModelParams p = ModelParams::Unflatten(cfg, std::move(values));
  return p;
}

template <typename R>
std::vector<T<R>> ChannelSeparate(const T<R>& batch) {
  TSDC_CHECK(batch.rank() == 3 && batch.dim(2) >= 1, "ChannelSeparate expects [B, n, C], got ",
             ShapeToString(batch.shape()));
  const std::int64_t b = batch.dim(0), n = batch.dim(1), c = batch.dim(2);
  std::vector<T<R>> out;
  out.reserve(c);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    auto index = std::make_shared<std::vector<std::int64_t>>(b * n);
    for (std::int64_t i = 0; i < b * n; ++i) (*index)[i] = i * c + ch;
    out.push_back(Gather(batch, std::move(index), {b, n, 1}));
  }
  return out;
}

PatchIndex PatchIndexMap(std::int64_t n, std::int64_t patch_len, std::int64_t stride) {
  TSDC_CHECK(stride >= 1, "patch stride must be >= 1, got ", stride);
  TSDC_CHECK(n >= 1 && patch_len >= 1, "series and patch lengths must be positive");
  PatchIndex map;
  map.padded_length = n + stride - 1;
  TSDC_CHECK(patch_len <= map.padded_length, "patch length ", patch_len,
             " exceeds the padded series length ", map.padded_length, " (n=", n,
             ", stride=", stride, ")");
  map.num_patches = PatchCount(n, patch_len, stride);
  TSDC_CHECK(map.num_patches >= 1, "no complete patch fits: n=", n, ", L=", patch_len,
             ", S=", stride);
  map.padded_positions.resize(static_cast<std::size_t>(map.num_patches * patch_len));
  for (std::int64_t p = 0; p < map.num_patches; ++p) {
    for (std::int64_t j = 0; j < patch_len; ++j) {
      map.padded_positions[p * patch_len + j] =
          std::min(p * stride + j, map.padded_length - 1);
    }
  }
  return map;
}

template <typename R>
T<R> Patchify(const T<R>& series, std::int64_t patch_len, std::int64_t stride) {
  TSDC_CHECK(series.rank() == 3 && series.dim(2) == 1, "Patchify expects [B, n, 1], got ",
             ShapeToString(series.shape()));
  const std::int64_t b = series.dim(0), n = series.dim(1);
  const PatchIndex map = PatchIndexMap(n, patch_len, stride);
  const std::int64_t per_row = map.num_patches * patch_len;
  auto index = std::make_shared<std::vector<std::int64_t>>(b * per_row);
  for (std::int64_t r = 0; r < b; ++r) {
    for (std::int64_t i = 0; i < per_row; ++i) {
      // Padded positions beyond n-1 hold copies of the last value.
      (*index)[r * per_row + i] = r * n + std::min(map.padded_positions[i], n - 1);
    }
  }
  return Gather(series, std::move(index), {b, map.num_patches, patch_len});
}

template <typename R>
OperatorParams<R> ViewOperator(const T<R>& flat, const ParamLayout& layout, std::int64_t index) {
  const std::string pre = "op" + std::to_string(index) + ".";
  auto view = [&](const std::string& name) {
    const ParamSlot& s = layout.Find(pre + name);
    return Narrow(flat, s.offset, s.shape);
  };
  OperatorParams<R> p;
  p.wq = view("attn.q.weight");
  p.bq = view("attn.q.bias");
  p.wk = view("attn.k.weight");
  p.bk = view("attn.k.bias");
  p.wv = view("attn.v.weight");
  p.bv = view("attn.v.bias");
  p.wo = view("attn.out.weight");
  p.bo = view("attn.out.bias");
  p.norm1_scale = view("norm1.scale");
  p.norm1_shift = view("norm1.shift");
  p.ff1_w = view("ff1.weight");
  p.ff1_b = view("ff1.bias");
  p.ff2_w = view("ff2.weight");
  p.ff2_b = view("ff2.bias");
  p.norm2_scale = view("norm2.scale");
  p.norm2_shift = view("norm2.shift");
  return p;
}

template <typename R>
T<R> TsOperatorForward(const T<R>& h, const OperatorParams<R>& p, const TsfeConfig& cfg,
                       const ForwardOptions& options, std::int64_t operator_index,
                       T<R>* attention) {
  TSDC_CHECK(h.rank() == 3 && h.dim(2) == cfg.model_dim, "operator input must be [rows, P, ",
             cfg.model_dim, "], got ", ShapeToString(h.shape()));
  const std::int64_t rows = h.dim(0), np = h.dim(1), d = cfg.model_dim;
  const std::int64_t heads = cfg.num_heads, dk = cfg.head_dim();
  T<R> x = Reshape(h, {rows * np, d});

  auto split_heads = [&](const T<R>& t) {
    return Reshape(Permute(Reshape(t, {rows, np, heads, dk}), {0, 2, 1, 3}),
                   {rows * heads, np, dk});
  };
  T<R> q = split_heads(Linear(x, p.wq, p.bq));
  T<R> k = split_heads(Linear(x, p.wk, p.bk));
  T<R> v = split_heads(Linear(x, p.wv, p.bv));
  T<R> scores = Scale(MatMul(q, k, false, true), static_cast<R>(1.0 / std::sqrt(double(dk))));
  T<R> weights = Softmax(scores);
  if (!weights.AllFinite()) {
    throw NumericError("non-finite attention weights in operator " +
                       std::to_string(operator_index));
  }
  if (attention != nullptr) *attention = weights.Detach();
  T<R> context = Reshape(Permute(Reshape(MatMul(weights, v), {rows, heads, np, dk}),
                                 {0, 2, 1, 3}),
                         {rows * np, d});
  T<R> attended = Linear(context, p.wo, p.bo);
  T<R> y = Normalize(Add(x, attended), p.norm1_scale, p.norm1_shift, cfg, options,
                     2 * operator_index);
  T<R> ff = Linear(Gelu(Linear(y, p.ff1_w, p.ff1_b)), p.ff2_w, p.ff2_b);
  T<R> z = Normalize(Add(y, ff), p.norm2_scale, p.norm2_shift, cfg, options,
                     2 * operator_index + 1);
  return Reshape(z, {rows, np, d});
}

template <typename R>
TsfeOutput<R> TsfeForward(const T<R>& batch, const T<R>& flat_params, const TsfeConfig& cfg,
                          const ForwardOptions& options) {
  const ParamLayout layout(cfg);
  TSDC_CHECK(batch.rank() == 3 && batch.dim(1) == cfg.lookback && batch.dim(2) == cfg.channels,
             "batch must be [B, ", cfg.lookback, ", ", cfg.channels, "], got ",
             ShapeToString(batch.shape()));
  TSDC_CHECK(flat_params.numel() == layout.total(), "parameter vector has ",
             flat_params.numel(), " values, config needs ", layout.total());
  const std::int64_t b = batch.dim(0), c = cfg.channels, d = cfg.model_dim;
  const std::int64_t np = cfg.num_patches(), rows = c * b;
  auto view = [&](const std::string& name) {
    const ParamSlot& s = layout.Find(name);
    return Narrow(flat_params, s.offset, s.shape);
  };

  // Channel-major rows: row c * B + b holds channel c of sample b.
  std::vector<T<R>> patches;
  for (const T<R>& series : ChannelSeparate(batch)) {
    patches.push_back(Patchify(series, cfg.patch_len, cfg.patch_stride));
  }
  T<R> tokens = Reshape(ConcatFlat(patches), {rows * np, cfg.patch_len});
  T<R> h = Linear(tokens, view("embed.weight"), view("embed.bias"));
  if (cfg.positional_encoding) {
    h = Add(Reshape(h, {rows, np * d}),
            BroadcastRows(Reshape(view("embed.position"), {np * d}), rows));
  }
  h = Reshape(h, {rows, np, d});

  TsfeOutput<R> out;
  for (std::int64_t j = 0; j < cfg.num_operators; ++j) {
    T<R> attn;
    h = TsOperatorForward(h, ViewOperator(flat_params, layout, j), cfg, options, j,
                          options.capture_attention ? &attn : nullptr);
    if (options.capture_attention) out.attention.push_back(attn);
    if (options.collect_features) {
      out.features.push_back(Permute(Reshape(h, {c, b, np, d}), {1, 0, 2, 3}));
    }
  }

  if (cfg.head == HeadKind::kForecast) {
    T<R> flat = Reshape(h, {rows, np * d});
    T<R> pred = Linear(flat, view("head.weight"), view("head.bias"));
    out.prediction = Permute(Reshape(pred, {c, b, cfg.horizon}), {1, 2, 0});
  } else {
    T<R> per_sample = Reshape(Permute(Reshape(h, {c, b, np, d}), {1, 0, 2, 3}), {b, c * np, d});
    T<R> avg = T<R>::Full({b, 1, c * np}, static_cast<R>(1.0 / double(c * np)));
    T<R> pooled = Reshape(MatMul(avg, per_sample), {b, d});
    out.prediction = Linear(pooled, view("head.weight"), view("head.bias"));
  }
  return out;
}

template <typename R>
std::pair<T<R>, T<R>> SplitInputTarget(const T<R>& windows, std::int64_t lookback) {
  TSDC_CHECK(windows.rank() == 3 && windows.dim(1) >= lookback,
             "windows must be [B, >=lookback, C], got ", ShapeToString(windows.shape()));
  const std::int64_t b = windows.dim(0), w = windows.dim(1), c = windows.dim(2);
  const std::int64_t horizon = w - lookback;
  auto in_index = std::make_shared<std::vector<std::int64_t>>();
  auto out_index = std::make_shared<std::vector<std::int64_t>>();
  in_index->reserve(b * lookback * c);
  out_index->reserve(b * horizon * c);
  for (std::int64_t r = 0; r < b; ++r) {
    for (std::int64_t t = 0; t < w; ++t) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        (t < lookback ? in_index : out_index)->push_back((r * w + t) * c + ch);
      }
    }
  }
  return {Gather(windows, std::move(in_index), {b, lookback, c}),
          Gather(windows, std::move(out_index), {b, horizon, c})};
}

template <typename R>
T<R> SelectSamples(const T<R>& x, std::span<const std::int64_t> indices) {
  TSDC_CHECK(x.rank() >= 1, "SelectSamples needs a batch axis");
  const std::int64_t rows = x.dim(0);
  const std::int64_t per = rows == 0 ? 0 : x.numel() / rows;
  auto index = std::make_shared<std::vector<std::int64_t>>();
  index->reserve(indices.size() * per);
  for (std::int64_t r : indices) {
    TSDC_CHECK(r >= 0 && r < rows, "sample index ", r, " out of range [0, ", rows, ")");
    for (std::int64_t i = 0; i < per; ++i) index->push_back(r * per + i);
  }
  Shape shape = x.shape();
  shape[0] = static_cast<std::int64_t>(indices.size());
  return Gather(x, std::move(index), std::move(shape));
}

template <typename R>
T<R> TaskLoss(const T<R>& prediction, const T<R>& target, HeadKind head,
              const std::vector<int>& labels) {
  if (head == HeadKind::kForecast) return MseLoss(prediction, target);
  return CrossEntropy(prediction, labels);
}

#define TSDC_INSTANTIATE_TSFE(R)                                                           \
  template std::vector<T<R>> ChannelSeparate(const T<R>&);                                 \
  template T<R> Patchify(const T<R>&, std::int64_t, std::int64_t);                         \
  template OperatorParams<R> ViewOperator(const T<R>&, const ParamLayout&, std::int64_t);  \
  template T<R> TsOperatorForward(const T<R>&, const OperatorParams<R>&, const TsfeConfig&, \
                                  const ForwardOptions&, std::int64_t, T<R>*);             \
  template TsfeOutput<R> TsfeForward(const T<R>&, const T<R>&, const TsfeConfig&,          \
                                     const ForwardOptions&);                               \
  template std::pair<T<R>, T<R>> SplitInputTarget(const T<R>&, std::int64_t);              \
  template T<R> SelectSamples(const T<R>&, std::span<const std::int64_t>);                 \
  template T<R> TaskLoss(const T<R>&, const T<R>&, HeadKind, const std::vector<int>&);

TSDC_INSTANTIATE_TSFE(float)
TSDC_INSTANTIATE_TSFE(double)

}  // namespace tsdc

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


#include "run_config.h"

#include <cmath>
#include <exception>
#include <functional>
#include <set>

#include "tsdc/baselines.h"
#include "tsdc/error.h"

namespace tsdc::cli {
namespace {

using nlohmann::json;

// Runs `fn`, turning any parse or contract failure into a ConfigError for `field`.
void Guard(const std::string& field, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("invalid config field '" + field + "': " + e.what());
  }
}

void Require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("invalid config field '" + field + "': " + why);
}

template <typename T>
void Take(const json& j, const char* key, T& dst, const std::string& prefix) {
  if (!j.contains(key)) return;
  Guard(prefix + key, [&] { dst = j.at(key).get<T>(); });
}

void CheckKeys(const json& j, const std::string& where, const std::set<std::string>& known) {
  Require(j.is_object(), where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    Require(known.count(key) > 0, where.empty() ? key : where + "." + key, "unknown key");
  }
}

// Overlays a library struct one key at a time so errors name the exact field.
template <typename T>
void Overlay(const json& j, const std::string& where, T& dst) {
  const json current = dst;
  std::set<std::string> known;
  for (const auto& [key, value] : current.items()) known.insert(key);
  CheckKeys(j, where, known);
  for (const auto& [key, value] : j.items()) {
    Guard(where + "." + key, [&] { from_json(json{{key, value}}, dst); });
  }
}

}  // namespace

void to_json(json& j, const RunConfig& c) {
  j = json{
      {"command", c.command},
      {"data",
       {{"path", c.data.path},
        {"drop_first_column", c.data.drop_first_column},
        {"has_header", c.data.has_header},
        {"task", c.data.task},
        {"label_column", c.data.label_column},
        {"split", {{"train", c.data.split.train}, {"val", c.data.split.val},
                   {"test", c.data.split.test}}},
        {"window_stride", c.data.window_stride}}},
      {"model", c.model},
      {"expert",
       {{"train", c.expert.train},
        {"num_experts", c.expert.num_experts},
        {"workers", c.expert.workers}}},
      {"condense", c.condense},
      {"buffer", c.buffer},
      {"coreset", {{"method", c.coreset.method}, {"n", c.coreset.n}}},
      {"train_eval",
       {{"train", c.train_eval.train},
        {"source_kind", c.train_eval.source_kind},
        {"source", c.train_eval.source},
        {"method", c.train_eval.method}}},
      {"stream",
       {{"policy", c.stream.policy},
        {"retrain_epochs", c.stream.retrain_epochs},
        {"base_fraction", c.stream.base_fraction}}},
      {"seed", c.seed},
      {"out", c.out},
      {"run_dir", c.run_dir}};
}

void from_json(const json& j, RunConfig& c) {
  CheckKeys(j, "", {"command", "data", "model", "expert", "condense", "buffer", "coreset",
                    "train_eval", "stream", "seed", "out", "run_dir"});
  Take(j, "command", c.command, "");
  Take(j, "buffer", c.buffer, "");
  Take(j, "seed", c.seed, "");
  Take(j, "out", c.out, "");
  Take(j, "run_dir", c.run_dir, "");
  if (j.contains("data")) {
    const json& d = j.at("data");
    CheckKeys(d, "data", {"path", "drop_first_column", "has_header", "task", "label_column",
                          "split", "window_stride"});
    Take(d, "path", c.data.path, "data.");
    Take(d, "drop_first_column", c.data.drop_first_column, "data.");
    Take(d, "has_header", c.data.has_header, "data.");
    Take(d, "task", c.data.task, "data.");
    Take(d, "label_column", c.data.label_column, "data.");
    Take(d, "window_stride", c.data.window_stride, "data.");
    if (d.contains("split")) {
      const json& s = d.at("split");
      CheckKeys(s, "data.split", {"train", "val", "test"});
      Take(s, "train", c.data.split.train, "data.split.");
      Take(s, "val", c.data.split.val, "data.split.");
      Take(s, "test", c.data.split.test, "data.split.");
    }
  }
  if (j.contains("model")) Overlay(j.at("model"), "model", c.model);
  if (j.contains("expert")) {
    const json& e = j.at("expert");
    CheckKeys(e, "expert", {"train", "num_experts", "workers"});
    if (e.contains("train")) Overlay(e.at("train"), "expert.train", c.expert.train);
    Take(e, "num_experts", c.expert.num_experts, "expert.");
    Take(e, "workers", c.expert.workers, "expert.");
  }
  if (j.contains("condense")) Overlay(j.at("condense"), "condense", c.condense);
  if (j.contains("coreset")) {
    const json& s = j.at("coreset");
    CheckKeys(s, "coreset", {"method", "n"});
    Take(s, "method", c.coreset.method, "coreset.");
    Take(s, "n", c.coreset.n, "coreset.");
  }
  if (j.contains("train_eval")) {
    const json& t = j.at("train_eval");
    CheckKeys(t, "train_eval", {"train", "source_kind", "source", "method"});
    if (t.contains("train")) Overlay(t.at("train"), "train_eval.train", c.train_eval.train);
    Take(t, "source_kind", c.train_eval.source_kind, "train_eval.");
    Take(t, "source", c.train_eval.source, "train_eval.");
    Take(t, "method", c.train_eval.method, "train_eval.");
  }
  if (j.contains("stream")) {
    const json& s = j.at("stream");
    CheckKeys(s, "stream", {"policy", "retrain_epochs", "base_fraction"});
    Take(s, "policy", c.stream.policy, "stream.");
    Take(s, "retrain_epochs", c.stream.retrain_epochs, "stream.");
    Take(s, "base_fraction", c.stream.base_fraction, "stream.");
  }
}

void RunConfig::Validate() const {
  Require(command == "train-experts" || command == "condense" || command == "select-coreset" ||
              command == "train-eval" || command == "stream-eval" || command == "report",
          "command", "unknown subcommand '" + command + "'");
  if (command == "report") {
    Require(!run_dir.empty(), "run_dir", "required");
    return;
  }
  Require(!out.empty(), "out", "required");
  Require(!data.path.empty(), "data.path", "required");
  Require(data.drop_first_column == "auto" || data.drop_first_column == "true" ||
              data.drop_first_column == "false",
          "data.drop_first_column", "expected auto, true or false");
  Require(data.task == "forecast" || data.task == "classify", "data.task",
          "expected forecast or classify");
  Require(data.label_column >= 0, "data.label_column", "must be >= 0");
  for (const auto& [name, r] : {std::pair{"train", data.split.train},
                                std::pair{"val", data.split.val},
                                std::pair{"test", data.split.test}}) {
    Require(std::isfinite(r) && r >= 0.0 && r <= 1.0, std::string("data.split.") + name,
            "must lie in [0, 1]");
  }
  Require(std::abs(data.split.train + data.split.val + data.split.test - 1.0) < 1e-9,
          "data.split", "ratios must sum to 1");
  Require(data.split.train > 0.0 && data.split.test > 0.0, "data.split",
          "train and test ratios must be positive");
  Require(data.window_stride >= 1, "data.window_stride", "must be >= 1");
  if (data.task == "forecast") {
    Require(model.lookback >= 1, "model.lookback", "must be >= 1");
    Require(model.horizon >= 1, "model.horizon", "must be >= 1");
    Require(model.patch_len >= 1 && model.patch_len <= model.lookback, "model.patch_len",
            "must lie in [1, lookback]");
  }
  Require(model.num_operators >= 1, "model.num_operators", "must be >= 1");
  Require(model.num_heads >= 1, "model.num_heads", "must be >= 1");
  Require(model.model_dim >= 1 && model.model_dim % model.num_heads == 0, "model.model_dim",
          "must be a positive multiple of num_heads");
  Require(model.ff_dim >= 1, "model.ff_dim", "must be >= 1");
  Require(model.patch_stride >= 1, "model.patch_stride", "must be >= 1");
  auto check_train = [](const TrainOptions& t, const std::string& where) {
    Require(t.epochs >= 0, where + ".epochs", "must be >= 0");
    Require(std::isfinite(t.lr) && t.lr > 0.0, where + ".lr", "must be positive");
    Require(t.batch_size >= 1, where + ".batch_size", "must be >= 1");
    Require(t.momentum >= 0.0 && t.momentum < 1.0, where + ".momentum", "must lie in [0, 1)");
  };
  if (command == "train-experts" || command == "condense" || command == "stream-eval") {
    check_train(expert.train, "expert.train");
    Require(expert.train.epochs >= 2, "expert.train.epochs", "must be >= 2");
    Require(expert.num_experts >= 1, "expert.num_experts", "must be >= 1");
    Require(expert.workers >= 1, "expert.workers", "must be >= 1");
  }
  if (command == "condense" || command == "stream-eval") {
    Guard("condense", [&] { condense.Validate(); });
  }
  if (command == "condense") Require(!buffer.empty(), "buffer", "required");
  if (command == "select-coreset") {
    Guard("coreset.method", [&] { ParseCoresetMethod(coreset.method); });
    Require(coreset.n >= 1, "coreset.n", "must be >= 1");
  }
  if (command == "train-eval" || command == "stream-eval") {
    check_train(train_eval.train, "train_eval.train");
  }
  if (command == "train-eval") {
    Require(train_eval.source_kind == "csv" || train_eval.source_kind == "tdcs" ||
                train_eval.source_kind == "coreset-json",
            "train_eval.source_kind", "expected csv, tdcs or coreset-json");
    Require(train_eval.source_kind == "csv" || !train_eval.source.empty(), "train_eval.source",
            "required for source kind '" + train_eval.source_kind + "'");
  }
  if (command == "stream-eval") {
    Require(stream.policy == "replay" || stream.policy == "finetune" || stream.policy == "both",
            "stream.policy", "expected replay, finetune or both");
    Require(stream.retrain_epochs >= 0, "stream.retrain_epochs", "must be >= 0");
    Require(stream.base_fraction > 0.0 && stream.base_fraction < 1.0, "stream.base_fraction",
            "must lie in (0, 1)");
    Require(data.task == "forecast", "data.task", "stream-eval supports forecasting only");
  }
}

}  // namespace tsdc::cli

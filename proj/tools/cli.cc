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


#include "cli.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.h"
#include "tsdc/baselines.h"
#include "tsdc/condense.h"
#include "tsdc/dataset.h"
#include "tsdc/error.h"
#include "tsdc/eval.h"
#include "tsdc/trajectory.h"

namespace tsdc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Binding {
  CLI::Option* option = nullptr;
  std::string field;
  std::function<void(RunConfig&)> apply;
};

class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* Add(const std::string& name, const std::string& field,
                   std::function<void(RunConfig&, const T&)> set, const std::string& help) {
    auto store = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *store, help);
    bindings_.push_back({opt, field, [store, set](RunConfig& c) { set(c, *store); }});
    return opt;
  }

  CLI::Option* AddSwitch(const std::string& name, const std::string& field,
                         std::function<void(RunConfig&)> set, const std::string& help) {
    CLI::Option* opt = app_->add_flag(name, help);
    bindings_.push_back({opt, field, set});
    return opt;
  }

  void Apply(RunConfig& c) const {
    for (const Binding& b : bindings_) {
      if (b.option->count() == 0) continue;
      try {
        b.apply(c);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError("invalid config field '" + b.field + "': " + e.what());
      }
    }
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<Binding> bindings_;
};

#define TSDC_FIELD(type, path) \
  std::function<void(RunConfig&, const type&)>([](RunConfig& c, const type& v) { c.path = v; })

void AddDataFlags(Flags& f) {
  f.Add<std::string>("--data", "data.path", TSDC_FIELD(std::string, data.path), "Input CSV");
  f.Add<std::string>("--drop-first-column", "data.drop_first_column",
                     TSDC_FIELD(std::string, data.drop_first_column),
                     "Drop a leading timestamp column: auto, true or false");
  f.AddSwitch("--no-header", "data.has_header",
              [](RunConfig& c) { c.data.has_header = false; }, "CSV has no header row");
  f.Add<std::string>("--task", "data.task", TSDC_FIELD(std::string, data.task),
                     "forecast or classify");
  f.Add<int>("--label-column", "data.label_column", TSDC_FIELD(int, data.label_column),
             "Label column for classification CSVs");
  f.Add<double>("--train-ratio", "data.split.train", TSDC_FIELD(double, data.split.train),
                "Chronological train fraction");
  f.Add<double>("--val-ratio", "data.split.val", TSDC_FIELD(double, data.split.val),
                "Chronological validation fraction");
  f.Add<double>("--test-ratio", "data.split.test", TSDC_FIELD(double, data.split.test),
                "Chronological test fraction");
  f.Add<std::int64_t>("--stride", "data.window_stride",
                      TSDC_FIELD(std::int64_t, data.window_stride), "Training window stride");
}

void AddModelFlags(Flags& f) {
  f.Add<std::int64_t>("--lookback", "model.lookback", TSDC_FIELD(std::int64_t, model.lookback),
                      "Lookback length");
  f.Add<std::int64_t>("--pl", "model.horizon", TSDC_FIELD(std::int64_t, model.horizon),
                      "Prediction length");
  f.Add<std::int64_t>("--operators", "model.num_operators",
                      TSDC_FIELD(std::int64_t, model.num_operators), "TSOperator count");
  f.Add<std::int64_t>("--heads", "model.num_heads", TSDC_FIELD(std::int64_t, model.num_heads),
                      "Attention heads");
  f.Add<std::int64_t>("--d-model", "model.model_dim", TSDC_FIELD(std::int64_t, model.model_dim),
                      "Model width");
  f.Add<std::int64_t>("--ff-dim", "model.ff_dim", TSDC_FIELD(std::int64_t, model.ff_dim),
                      "Feed-forward width");
  f.Add<std::int64_t>("--patch-len", "model.patch_len", TSDC_FIELD(std::int64_t, model.patch_len),
                      "Patch length");
  f.Add<std::int64_t>("--patch-stride", "model.patch_stride",
                      TSDC_FIELD(std::int64_t, model.patch_stride), "Patch stride");
  f.Add<std::string>("--norm", "model.norm",
                     std::function<void(RunConfig&, const std::string&)>(
                         [](RunConfig& c, const std::string& v) {
                           from_json(json{{"norm", v}}, c.model);
                         }),
                     "batch, per_sample or none");
}

void AddCommonFlags(Flags& f, std::string* config_path) {
  f.app()->add_option("--config", *config_path, "JSON RunConfig overlay");
  f.Add<std::uint64_t>("--seed", "seed", TSDC_FIELD(std::uint64_t, seed), "Random seed")
      ->required();
  f.Add<std::string>("--out", "out", TSDC_FIELD(std::string, out), "Output directory");
}

void AddExpertFlags(Flags& f, const std::string& prefix) {
  f.Add<std::int64_t>("--k", "expert.num_experts", TSDC_FIELD(std::int64_t, expert.num_experts),
                      "Number of experts");
  f.Add<std::int64_t>("--" + prefix + "epochs", "expert.train.epochs",
                      TSDC_FIELD(std::int64_t, expert.train.epochs), "Expert epochs");
  f.Add<double>("--" + prefix + "lr", "expert.train.lr", TSDC_FIELD(double, expert.train.lr),
                "Expert learning rate");
  f.Add<std::int64_t>("--" + prefix + "batch", "expert.train.batch_size",
                      TSDC_FIELD(std::int64_t, expert.train.batch_size), "Expert batch size");
  f.Add<int>("--workers", "expert.workers", TSDC_FIELD(int, expert.workers),
             "Parallel expert workers");
}

void AddCondenseFlags(Flags& f) {
  f.Add<std::int64_t>("--n", "condense.n", TSDC_FIELD(std::int64_t, condense.n),
                      "Condensed windows");
  f.Add<std::int64_t>("--outer", "condense.outer_steps",
                      TSDC_FIELD(std::int64_t, condense.outer_steps), "Outer steps");
  f.Add<std::int64_t>("--inner", "condense.inner_steps",
                      TSDC_FIELD(std::int64_t, condense.inner_steps), "Inner steps");
  f.Add<std::int64_t>("--expert-steps", "condense.expert_steps",
                      TSDC_FIELD(std::int64_t, condense.expert_steps), "Expert epochs spanned");
  f.Add<double>("--alpha", "condense.inner_lr", TSDC_FIELD(double, condense.inner_lr),
                "Inner learning rate");
  f.Add<double>("--lr-syn", "condense.condensed_lr", TSDC_FIELD(double, condense.condensed_lr),
                "Condensed data learning rate");
  f.Add<double>("--momentum-syn", "condense.condensed_momentum",
                TSDC_FIELD(double, condense.condensed_momentum), "Condensed data momentum");
  f.Add<std::string>("--init", "condense.init",
                     std::function<void(RunConfig&, const std::string&)>(
                         [](RunConfig& c, const std::string& v) {
                           c.condense.init = ParseInitMode(v);
                         }),
                     "real or gaussian");
  f.Add<double>("--lambda-task", "condense.lambda_task", TSDC_FIELD(double, condense.lambda_task),
                "Task loss weight");
  f.Add<double>("--lambda-fre", "condense.lambda_fre", TSDC_FIELD(double, condense.lambda_fre),
                "Decomposition loss weight");
  f.Add<double>("--lambda-tmm", "condense.lambda_tmm", TSDC_FIELD(double, condense.lambda_tmm),
                "Trajectory matching weight");
  f.Add<std::int64_t>("--syn-batch", "condense.batch_size",
                      TSDC_FIELD(std::int64_t, condense.batch_size),
                      "Condensed windows per inner step (0 = all)");
  f.Add<std::int64_t>("--kernel", "condense.kernel", TSDC_FIELD(std::int64_t, condense.kernel),
                      "Moving-average kernel");
}

void AddTrainFlags(Flags& f) {
  f.Add<std::int64_t>("--epochs", "train_eval.train.epochs",
                      TSDC_FIELD(std::int64_t, train_eval.train.epochs), "Training epochs");
  f.Add<double>("--lr", "train_eval.train.lr", TSDC_FIELD(double, train_eval.train.lr),
                "Learning rate");
  f.Add<std::int64_t>("--batch", "train_eval.train.batch_size",
                      TSDC_FIELD(std::int64_t, train_eval.train.batch_size), "Batch size");
  f.Add<std::string>("--optimizer", "train_eval.train.optimizer",
                     std::function<void(RunConfig&, const std::string&)>(
                         [](RunConfig& c, const std::string& v) {
                           from_json(json{{"optimizer", v}}, c.train_eval.train);
                         }),
                     "sgd or adam");
}

#undef TSDC_FIELD

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

json ReadJson(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

std::string SidecarPath(const std::string& buffer) { return buffer + ".json"; }

bool LooksNumeric(const std::string& field) {
  std::size_t b = field.find_first_not_of(" \t\"");
  std::size_t e = field.find_last_not_of(" \t\"\r");
  if (b == std::string::npos) return false;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data() + b, field.data() + e + 1, v);
  return ec == std::errc() && ptr == field.data() + e + 1;
}

bool ResolveDropFirstColumn(const DataSection& d) {
  if (d.drop_first_column != "auto") return d.drop_first_column == "true";
  std::ifstream f(d.path);
  if (!f) throw Error("cannot open '" + d.path + "'");
  std::string line;
  if (d.has_header) std::getline(f, line);
  while (std::getline(f, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return !LooksNumeric(line.substr(0, line.find(',')));
  }
  return false;
}

struct Prepared {
  TsfeConfig model;
  WindowSet train;
  WindowSet test;
  std::string dataset;
};

// Chronological split; statistics come from the training part only.
Prepared Prepare(const RunConfig& c) {
  Prepared p;
  p.model = c.model;
  p.dataset = fs::path(c.data.path).stem().string();
  if (c.data.task == "classify") {
    WindowSet all = LoadClassificationCsv(c.data.path, c.data.has_header, c.data.label_column);
    const std::int64_t n_train = RatioFloor(all.count, c.data.split.train);
    const std::int64_t n_val = RatioFloor(all.count, c.data.split.val);
    if (n_train < 1 || n_train + n_val >= all.count) {
      throw Error("classification data has too few samples (" + std::to_string(all.count) +
                  ") for the requested split");
    }
    double sum = 0.0, sq = 0.0;
    const std::int64_t train_values = n_train * all.window_size();
    for (std::int64_t i = 0; i < train_values; ++i) sum += all.windows[i];
    const double mean = sum / static_cast<double>(train_values);
    for (std::int64_t i = 0; i < train_values; ++i) {
      sq += (all.windows[i] - mean) * (all.windows[i] - mean);
    }
    const double sd = std::max(std::sqrt(sq / static_cast<double>(train_values)), 1e-8);
    for (float& v : all.windows) v = static_cast<float>((v - mean) / sd);
    std::vector<std::int64_t> train_idx(n_train), test_idx(all.count - n_train - n_val);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::iota(test_idx.begin(), test_idx.end(), n_train + n_val);
    p.train = SelectWindows(all, train_idx);
    p.test = SelectWindows(all, test_idx);
    p.model.head = HeadKind::kClassify;
    p.model.num_classes = all.num_classes;
    p.model.lookback = all.lookback;
    p.model.horizon = 0;
    p.model.channels = all.channels;
  } else {
    CsvOptions opts;
    opts.has_header = c.data.has_header;
    opts.drop_first_column = ResolveDropFirstColumn(c.data);
    TimeSeriesDataset ds = LoadCsv(c.data.path, opts);
    auto parts = SplitChronological(ds, c.data.split);
    p.model.channels = ds.channels;
    p.model.head = HeadKind::kForecast;
    const std::int64_t need = c.model.lookback + c.model.horizon;
    if (parts[0].time_steps < need || parts[2].time_steps < need) {
      throw Error("series of " + std::to_string(ds.time_steps) +
                  " steps is too short for lookback " + std::to_string(c.model.lookback) +
                  " + horizon " + std::to_string(c.model.horizon) + " in both splits");
    }
    p.train = MakeWindows(Standardize(parts[0], parts[0]), c.model.lookback, c.model.horizon,
                          c.data.window_stride);
    p.test = MakeWindows(Standardize(parts[2], parts[0]), c.model.lookback, c.model.horizon, 1);
  }
  try {
    p.model.Validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid config field 'model': ") + e.what());
  }
  return p;
}

void PrepareOut(const RunConfig& c) { fs::create_directories(c.out); }

void SaveRunConfig(const RunConfig& c, const fs::path& dir) {
  WriteText(dir / ("run_config." + c.command + ".json"), json(c).dump(2) + "\n");
}

TrainOptions ExpertOptions(const RunConfig& c) {
  TrainOptions o = c.expert.train;
  o.seed = c.seed;
  return o;
}

int TrainExperts(const RunConfig& c, std::ostream& out) {
  Prepared p = Prepare(c);
  PrepareOut(c);
  SaveRunConfig(c, c.out);
  ExpertBuffer buffer = TrainExpertBuffer(p.train, p.model, ExpertOptions(c),
                                          c.expert.num_experts, c.seed, c.expert.workers);
  const fs::path path = fs::path(c.out) / "buffer.tdcb";
  SaveBuffer(buffer, path.string());
  json side = {{"fingerprint", FingerprintHex(buffer.fingerprint)},
               {"train_windows", p.train.count},
               {"channels", p.train.channels}};
  json full = c;
  side["data"] = full["data"];
  side["model"] = full["model"];
  side["expert"] = full["expert"];
  WriteText(SidecarPath(path.string()), side.dump(2) + "\n");
  out << "wrote " << path.string() << " (" << buffer.size() << " experts, " << buffer.epochs()
      << " epochs)\n";
  return kExitOk;
}

int CondenseCommand(const RunConfig& c, std::ostream& out) {
  Prepared p = Prepare(c);
  const Fingerprint expected =
      ComputeFingerprint(p.model, ExpertOptions(c), p.train.count, p.train.channels);
  ExpertBuffer buffer = LoadBuffer(c.buffer, &expected);
  PrepareOut(c);
  SaveRunConfig(c, c.out);
  CondenseConfig cc = c.condense;
  cc.seed = c.seed;
  const fs::path diag_path = fs::path(c.out) / "diag.jsonl";
  std::ofstream diag(diag_path);
  if (!diag) throw Error("cannot open '" + diag_path.string() + "' for writing");
  CondensedDataset s = Condense(p.train, buffer, p.model, cc,
                                [&](const CondenseDiagnostics& d) { diag << json(d).dump() << "\n"; });
  diag.close();
  const fs::path path = fs::path(c.out) / "condensed.tdcs";
  SaveCondensed(s, path.string());
  WritePcaCsv(PcaProjection(p.train, s.ToWindowSet()), (fs::path(c.out) / "pca.csv").string());
  out << "wrote " << path.string() << " (" << s.count << " windows)\n";
  return kExitOk;
}

int SelectCoresetCommand(const RunConfig& c, std::ostream& out) {
  Prepared p = Prepare(c);
  PrepareOut(c);
  SaveRunConfig(c, c.out);
  CoresetSelection sel =
      SelectCoreset(p.train, ParseCoresetMethod(c.coreset.method), c.coreset.n, c.seed);
  json j = sel;
  j["train_windows"] = p.train.count;
  const fs::path path = fs::path(c.out) / ("coreset_" + c.coreset.method + ".json");
  WriteText(path, j.dump(2) + "\n");
  out << "wrote " << path.string() << " (" << sel.indices.size() << " windows)\n";
  return kExitOk;
}

int TrainEvalCommand(const RunConfig& c, std::ostream& out) {
  Prepared p = Prepare(c);
  WindowSet train;
  std::string method = c.train_eval.method;
  const std::string& kind = c.train_eval.source_kind;
  if (kind == "csv") {
    train = p.train;
    if (method.empty()) method = "full";
  } else if (kind == "tdcs") {
    CondensedDataset s = LoadCondensed(c.train_eval.source, p.train.lookback);
    if (s.horizon != p.train.horizon || s.channels != p.train.channels) {
      throw Error("condensed set '" + c.train_eval.source + "' has horizon " +
                  std::to_string(s.horizon) + " and " + std::to_string(s.channels) +
                  " channels; the run expects " + std::to_string(p.train.horizon) + " and " +
                  std::to_string(p.train.channels));
    }
    train = s.ToWindowSet();
    if (method.empty()) method = "condensed";
  } else {
    json j = ReadJson(c.train_eval.source);
    CoresetSelection sel;
    try {
      sel = j.get<CoresetSelection>();
    } catch (const std::exception& e) {
      throw FormatError("invalid coreset file '" + c.train_eval.source + "': " + e.what());
    }
    if (j.value("train_windows", p.train.count) != p.train.count) {
      throw Error("coreset '" + c.train_eval.source + "' was selected from " +
                  std::to_string(j.at("train_windows").get<std::int64_t>()) +
                  " windows; this run has " + std::to_string(p.train.count));
    }
    for (std::int64_t i : sel.indices) {
      if (i < 0 || i >= p.train.count) {
        throw Error("coreset '" + c.train_eval.source + "' index " + std::to_string(i) +
                    " is out of range");
      }
    }
    train = SelectWindows(p.train, sel.indices);
    if (method.empty()) method = CoresetMethodName(sel.method);
  }
  PrepareOut(c);
  SaveRunConfig(c, c.out);
  TrainOptions opts = c.train_eval.train;
  opts.seed = c.seed;
  TrainResult result = TrainDownstream(train, p.model, opts);
  MetricsRecord rec;
  rec.method = method;
  rec.dataset = p.dataset;
  rec.pl = p.model.horizon;
  rec.n_condensed = train.count;
  rec.seed = c.seed;
  rec.metrics = Evaluate(result.params, p.test);
  rec.metrics.train_seconds = result.train_seconds;
  const fs::path path = fs::path(c.out) / ("metrics_" + method + "_pl" +
                                           std::to_string(rec.pl) + "_seed" +
                                           std::to_string(c.seed) + ".json");
  WriteText(path, json(rec).dump(2) + "\n");
  out << "wrote " << path.string() << " (mse " << rec.metrics.mse << ", mae " << rec.metrics.mae
      << ")\n";
  return kExitOk;
}

json MetricsJson(const Metrics& m) {
  return json{{"mae", m.mae}, {"mse", m.mse}, {"train_seconds", m.train_seconds}};
}

int StreamEvalCommand(const RunConfig& c, std::ostream& out) {
  CsvOptions opts;
  opts.has_header = c.data.has_header;
  opts.drop_first_column = ResolveDropFirstColumn(c.data);
  TimeSeriesDataset ds = LoadCsv(c.data.path, opts);
  StreamConfig sc;
  sc.model = c.model;
  sc.model.channels = ds.channels;
  sc.train = c.train_eval.train;
  sc.train.seed = c.seed;
  sc.expert = ExpertOptions(c);
  sc.num_experts = c.expert.num_experts;
  sc.condense = c.condense;
  sc.condense.seed = c.seed;
  sc.window_stride = c.data.window_stride;
  sc.retrain_epochs = c.stream.retrain_epochs;
  sc.stage_split = c.data.split;
  sc.base_fraction = c.stream.base_fraction;
  PrepareOut(c);
  SaveRunConfig(c, c.out);
  json result = json::object();
  std::vector<std::pair<std::string, StreamPolicy>> policies;
  if (c.stream.policy != "finetune") policies.emplace_back("replay", StreamPolicy::kCondensedReplay);
  if (c.stream.policy != "replay") policies.emplace_back("finetune", StreamPolicy::kFineTune);
  for (const auto& [name, policy] : policies) {
    StreamResult r = StreamEval(ds, sc, policy);
    result[name] = {{"b0", MetricsJson(r.b0)},
                    {"b1", MetricsJson(r.b1)},
                    {"incremental", MetricsJson(r.incremental)}};
    out << name << ": b0 mse " << r.b0.mse << ", b1 mse " << r.b1.mse << ", incremental mse "
        << r.incremental.mse << "\n";
  }
  const fs::path path = fs::path(c.out) / "stream.json";
  WriteText(path, result.dump(2) + "\n");
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

std::string Num(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

int ReportCommand(const RunConfig& c, std::ostream& out) {
  if (!fs::is_directory(c.run_dir)) throw Error("run directory '" + c.run_dir + "' not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(c.run_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("metrics", 0) == 0 &&
        entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw Error("no metrics JSON files in '" + c.run_dir + "'");
  std::sort(files.begin(), files.end());

  struct Cell {
    std::vector<MetricsRecord> records;
  };
  std::map<std::tuple<std::string, std::string, std::int64_t>, Cell> cells;
  for (const fs::path& file : files) {
    json j = ReadJson(file);
    MetricsRecord rec;
    try {
      rec = j.get<MetricsRecord>();
    } catch (const std::exception& e) {
      throw FormatError("invalid metrics record '" + file.string() + "': " + e.what());
    }
    cells[{rec.dataset, rec.method, rec.pl}].records.push_back(rec);
  }

  json rows = json::array();
  std::string csv = "dataset,method,pl,seeds,n_condensed,mae,mse,accuracy,precision,train_seconds\n";
  for (const auto& [key, cell] : cells) {
    const auto& recs = cell.records;
    const double n = static_cast<double>(recs.size());
    auto mean = [&](auto get) {
      double s = 0.0;
      for (const auto& r : recs) s += get(r);
      return s / n;
    };
    const double mae = mean([](const MetricsRecord& r) { return r.metrics.mae; });
    const double mse = mean([](const MetricsRecord& r) { return r.metrics.mse; });
    const double secs = mean([](const MetricsRecord& r) { return r.metrics.train_seconds; });
    const double n_cond = mean([](const MetricsRecord& r) { return double(r.n_condensed); });
    const bool has_cls = std::all_of(recs.begin(), recs.end(), [](const MetricsRecord& r) {
      return r.metrics.accuracy.has_value() && r.metrics.precision.has_value();
    });
    json row = {{"dataset", std::get<0>(key)},
                {"method", std::get<1>(key)},
                {"pl", std::get<2>(key)},
                {"seeds", recs.size()},
                {"n_condensed", n_cond},
                {"mae", mae},
                {"mse", mse},
                {"train_seconds", secs}};
    std::string acc, prec;
    if (has_cls) {
      const double a = mean([](const MetricsRecord& r) { return *r.metrics.accuracy; });
      const double pr = mean([](const MetricsRecord& r) { return *r.metrics.precision; });
      row["accuracy"] = a;
      row["precision"] = pr;
      acc = Num(a);
      prec = Num(pr);
    }
    rows.push_back(row);
    csv += std::get<0>(key) + "," + std::get<1>(key) + "," + std::to_string(std::get<2>(key)) +
           "," + std::to_string(recs.size()) + "," + Num(n_cond) + "," + Num(mae) + "," +
           Num(mse) + "," + acc + "," + prec + "," + Num(secs) + "\n";
  }
  const fs::path dir = c.out.empty() ? fs::path(c.run_dir) : fs::path(c.out);
  fs::create_directories(dir);
  WriteText(dir / "report.csv", csv);
  WriteText(dir / "report.json", json{{"rows", rows}}.dump(2) + "\n");
  out << "wrote " << (dir / "report.csv").string() << " (" << rows.size() << " rows from "
      << files.size() << " files)\n";
  return kExitOk;
}

void PrintError(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"status", "error"}, {"kind", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time series dataset condensation pipeline", "tsdc"};
  app.require_subcommand(1, 1);
  app.fallthrough(false);

  std::string config_path;
  std::vector<std::pair<CLI::App*, std::unique_ptr<Flags>>> subs;
  auto add = [&](const std::string& name, const std::string& help) -> Flags& {
    CLI::App* sub = app.add_subcommand(name, help);
    subs.emplace_back(sub, std::make_unique<Flags>(sub));
    return *subs.back().second;
  };

  {
    Flags& f = add("train-experts", "Train K expert trajectories and save the buffer");
    AddCommonFlags(f, &config_path);
    AddDataFlags(f);
    AddModelFlags(f);
    AddExpertFlags(f, "");
  }
  {
    Flags& f = add("condense", "Condense the training windows against an expert buffer");
    AddCommonFlags(f, &config_path);
    AddDataFlags(f);
    AddModelFlags(f);
    f.Add<std::string>("--buffer", "buffer",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.buffer = v; }),
                       "Expert buffer written by train-experts");
    AddCondenseFlags(f);
  }
  {
    Flags& f = add("select-coreset", "Select a coreset baseline");
    AddCommonFlags(f, &config_path);
    AddDataFlags(f);
    AddModelFlags(f);
    f.Add<std::string>("--method", "coreset.method",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.coreset.method = v; }),
                       "random, herding or kcenter");
    f.Add<std::int64_t>("--n", "coreset.n",
                        std::function<void(RunConfig&, const std::int64_t&)>(
                            [](RunConfig& c, const std::int64_t& v) { c.coreset.n = v; }),
                        "Coreset size");
  }
  {
    Flags& f = add("train-eval", "Train a fresh model and evaluate it on the test split");
    AddCommonFlags(f, &config_path);
    AddDataFlags(f);
    AddModelFlags(f);
    AddTrainFlags(f);
    f.Add<std::string>("--train-source", "train_eval.source_kind",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) {
                             c.train_eval.source_kind = v;
                           }),
                       "csv, tdcs or coreset-json");
    f.Add<std::string>("--source", "train_eval.source",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.train_eval.source = v; }),
                       "Condensed set or coreset file");
    f.Add<std::string>("--method", "train_eval.method",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.train_eval.method = v; }),
                       "Method label for the metrics record");
  }
  {
    Flags& f = add("stream-eval", "Two-stage streaming evaluation");
    AddCommonFlags(f, &config_path);
    AddDataFlags(f);
    AddModelFlags(f);
    AddTrainFlags(f);
    AddExpertFlags(f, "expert-");
    AddCondenseFlags(f);
    f.Add<std::string>("--policy", "stream.policy",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.stream.policy = v; }),
                       "replay, finetune or both");
    f.Add<std::int64_t>("--retrain-epochs", "stream.retrain_epochs",
                        std::function<void(RunConfig&, const std::int64_t&)>(
                            [](RunConfig& c, const std::int64_t& v) {
                              c.stream.retrain_epochs = v;
                            }),
                        "Stage-2 epochs (0 = same as --epochs)");
    f.Add<double>("--base-fraction", "stream.base_fraction",
                  std::function<void(RunConfig&, const double&)>(
                      [](RunConfig& c, const double& v) { c.stream.base_fraction = v; }),
                  "Fraction of the series in the base set");
  }
  {
    Flags& f = add("report", "Merge metrics files into a table");
    f.app()->add_option("--config", config_path, "JSON RunConfig overlay");
    f.Add<std::string>("--run-dir", "run_dir",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.run_dir = v; }),
                       "Directory holding metrics JSON files")
        ->required();
    f.Add<std::string>("--out", "out",
                       std::function<void(RunConfig&, const std::string&)>(
                           [](RunConfig& c, const std::string& v) { c.out = v; }),
                       "Output directory (defaults to --run-dir)");
  }

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' &&
      std::none_of(subs.begin(), subs.end(),
                   [&](const auto& s) { return s.first->get_name() == args[0]; })) {
    PrintError(err, "usage", "unknown subcommand '" + args[0] + "'");
    err << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto& [sub, flags] : subs) {
      if (sub->parsed()) target = sub;
    }
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    PrintError(err, "usage", e.what());
    err << app.help();
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const Flags* flags = nullptr;
  for (const auto& [sub, f] : subs) {
    if (sub == chosen) flags = f.get();
  }

  RunConfig cfg;
  const std::string command = chosen->get_name();
  try {
    cfg.command = command;
    if (command == "report") cfg.out.clear();
    json file = json::object();
    if (!config_path.empty()) {
      try {
        file = ReadJson(config_path);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
      }
    }
    if (command == "condense") {
      // The buffer's sidecar sits beneath the config file and flags.
      RunConfig probe = cfg;
      from_json(file, probe);
      flags->Apply(probe);
      const std::string side = SidecarPath(probe.buffer);
      if (!probe.buffer.empty() && fs::exists(side)) {
        json s;
        try {
          s = ReadJson(side);
        } catch (const std::exception& e) {
          throw ConfigError(std::string("buffer sidecar: ") + e.what());
        }
        json layer = json::object();
        for (const char* key : {"data", "model", "expert"}) {
          if (s.contains(key)) layer[key] = s.at(key);
        }
        from_json(layer, cfg);
      }
    }
    from_json(file, cfg);
    flags->Apply(cfg);
    cfg.command = command;
    if (command == "report" && cfg.out.empty()) cfg.out = cfg.run_dir;
    cfg.Validate();
  } catch (const ConfigError& e) {
    PrintError(err, "config", e.what());
    return kExitUsage;
  }

  out << json(cfg).dump(2) << "\n";
  try {
    if (command == "train-experts") return TrainExperts(cfg, out);
    if (command == "condense") return CondenseCommand(cfg, out);
    if (command == "select-coreset") return SelectCoresetCommand(cfg, out);
    if (command == "train-eval") return TrainEvalCommand(cfg, out);
    if (command == "stream-eval") return StreamEvalCommand(cfg, out);
    return ReportCommand(cfg, out);
  } catch (const ConfigError& e) {
    PrintError(err, "config", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    PrintError(err, "runtime", e.what());
    return kExitRuntime;
  }
}

}  // namespace tsdc::cli

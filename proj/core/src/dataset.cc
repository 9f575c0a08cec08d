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

#include "tsdc/dataset.h"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tsdc/error.h"

namespace tsdc {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitCells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool ParseFloat(const std::string& cell, float* out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + cell.size() || errno == ERANGE || !std::isfinite(v)) return false;
  *out = static_cast<float>(v);
  return true;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable ReadTable(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
      line.erase(0, 3);
    }
    if (Trim(line).empty()) continue;
    auto cells = SplitCells(line);
    if (header_pending) {
      table.header = std::move(cells);
      header_pending = false;
      continue;
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (table.rows.empty()) throw Error(path + ": zero rows");
  return table;
}

}  // namespace

void TimeSeriesDataset::Validate() const {
  TSDC_CHECK(time_steps >= 1 && channels >= 1, "dataset must have at least one step and channel");
  TSDC_CHECK(static_cast<std::int64_t>(values.size()) == time_steps * channels,
             "value buffer size does not match [", time_steps, " x ", channels, "]");
  TSDC_CHECK(channel_names.empty() || static_cast<std::int64_t>(channel_names.size()) == channels,
             "channel name count mismatch");
  if (norm_stats) {
    for (float s : norm_stats->stddev) TSDC_CHECK(s > 0.0f, "non-positive std in norm stats");
  }
}

TimeSeriesDataset LoadCsv(const std::string& path, const CsvOptions& options) {
  CsvTable table = ReadTable(path, options.has_header);
  const std::size_t skip = options.drop_first_column ? 1 : 0;
  const std::size_t width = table.rows.front().size();
  if (width <= skip) throw Error(path + ": no data columns");

  TimeSeriesDataset ds;
  ds.time_steps = static_cast<std::int64_t>(table.rows.size());
  ds.channels = static_cast<std::int64_t>(width - skip);
  ds.values.reserve(table.rows.size() * (width - skip));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != width) {
      throw Error(internal::StrCat(path, ": line ", table.line_numbers[r], " has ",
                                   row.size(), " cells, expected ", width));
    }
    for (std::size_t c = skip; c < width; ++c) {
      float v = 0.0f;
      if (!ParseFloat(row[c], &v)) {
        throw Error(internal::StrCat(path, ": cannot parse '", row[c], "' at line ",
                                     table.line_numbers[r], ", column ", c + 1));
      }
      ds.values.push_back(v);
    }
  }
  if (!table.header.empty() && table.header.size() == width) {
    ds.channel_names.assign(table.header.begin() + skip, table.header.end());
  } else {
    for (std::int64_t c = 0; c < ds.channels; ++c) {
      ds.channel_names.push_back("ch" + std::to_string(c));
    }
  }
  return ds;
}

void SaveCsv(const TimeSeriesDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (std::int64_t c = 0; c < ds.channels; ++c) {
    if (c) out << ',';
    out << (ds.channel_names.empty() ? "ch" + std::to_string(c) : ds.channel_names[c]);
  }
  out << '\n' << std::setprecision(9);
  for (std::int64_t t = 0; t < ds.time_steps; ++t) {
    for (std::int64_t c = 0; c < ds.channels; ++c) {
      if (c) out << ',';
      out << ds.at(t, c);
    }
    out << '\n';
  }
}

std::int64_t RatioFloor(std::int64_t n, double ratio) {
  return static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

std::array<TimeSeriesDataset, 3> SplitChronological(const TimeSeriesDataset& ds,
                                                    const SplitRatios& ratios) {
  TSDC_CHECK(ratios.train > 0 && ratios.val > 0 && ratios.test > 0,
             "all split ratios must be positive");
  TSDC_CHECK(std::abs(ratios.train + ratios.val + ratios.test - 1.0) <= 1e-9,
             "split ratios must sum to 1");
  const auto n = ds.time_steps;
  const auto n_train = RatioFloor(n, ratios.train);
  const auto n_val = RatioFloor(n, ratios.val);
  const std::int64_t lengths[3] = {n_train, n_val, n - n_train - n_val};
  std::array<TimeSeriesDataset, 3> out;
  std::int64_t start = 0;
  for (int i = 0; i < 3; ++i) {
    auto& part = out[i];
    part.time_steps = lengths[i];
    part.channels = ds.channels;
    part.channel_names = ds.channel_names;
    part.granularity = ds.granularity;
    part.norm_stats = ds.norm_stats;
    part.origin = ds.origin + start;
    part.values.assign(ds.values.begin() + start * ds.channels,
                       ds.values.begin() + (start + lengths[i]) * ds.channels);
    start += lengths[i];
  }
  return out;
}

NormStats ComputeNormStats(const TimeSeriesDataset& ds) {
  NormStats stats;
  stats.mean.resize(ds.channels);
  stats.stddev.resize(ds.channels);
  for (std::int64_t c = 0; c < ds.channels; ++c) {
    double sum = 0.0;
    for (std::int64_t t = 0; t < ds.time_steps; ++t) sum += ds.at(t, c);
    const double mean = sum / static_cast<double>(ds.time_steps);
    double sq = 0.0;
    for (std::int64_t t = 0; t < ds.time_steps; ++t) {
      const double d = ds.at(t, c) - mean;
      sq += d * d;
    }
    stats.mean[c] = static_cast<float>(mean);
    stats.stddev[c] = static_cast<float>(std::sqrt(sq / static_cast<double>(ds.time_steps)));
  }
  return stats;
}

TimeSeriesDataset Standardize(const TimeSeriesDataset& ds, const NormStats& stats) {
  TSDC_CHECK(static_cast<std::int64_t>(stats.mean.size()) == ds.channels,
             "statistics cover ", stats.mean.size(), " channels, dataset has ", ds.channels);
  for (std::int64_t c = 0; c < ds.channels; ++c) {
    if (!(stats.stddev[c] > 1e-8f)) {
      const std::string name = ds.channel_names.empty() ? "ch" + std::to_string(c)
                                                         : ds.channel_names[c];
      throw Error("channel '" + name + "' has near-zero standard deviation");
    }
  }
  TimeSeriesDataset out = ds;
  for (std::int64_t t = 0; t < ds.time_steps; ++t) {
    for (std::int64_t c = 0; c < ds.channels; ++c) {
      out.values[t * ds.channels + c] = (ds.at(t, c) - stats.mean[c]) / stats.stddev[c];
    }
  }
  out.norm_stats = stats;
  return out;
}

TimeSeriesDataset Standardize(const TimeSeriesDataset& ds,
                              const TimeSeriesDataset& stats_source) {
  TSDC_CHECK(stats_source.channels == ds.channels, "channel count mismatch: ",
             stats_source.channels, " vs ", ds.channels);
  return Standardize(ds, ComputeNormStats(stats_source));
}

TimeSeriesDataset Unstandardize(const TimeSeriesDataset& ds) {
  TSDC_CHECK(ds.norm_stats.has_value(), "dataset carries no normalization statistics");
  const auto& stats = *ds.norm_stats;
  TimeSeriesDataset out = ds;
  for (std::int64_t t = 0; t < ds.time_steps; ++t) {
    for (std::int64_t c = 0; c < ds.channels; ++c) {
      out.values[t * ds.channels + c] = ds.at(t, c) * stats.stddev[c] + stats.mean[c];
    }
  }
  out.norm_stats.reset();
  return out;
}

void WindowSet::Validate() const {
  TSDC_CHECK(count >= 0 && lookback >= 1 && horizon >= 0 && channels >= 1,
             "invalid window geometry");
  TSDC_CHECK(static_cast<std::int64_t>(windows.size()) == count * window_size(),
             "window buffer size mismatch");
  if (labels) {
    TSDC_CHECK(static_cast<std::int64_t>(labels->size()) == count, "label count mismatch");
    for (int l : *labels) {
      TSDC_CHECK(l >= 0 && l < num_classes, "label ", l, " outside [0, ", num_classes, ")");
    }
  }
}

WindowSet MakeWindows(const TimeSeriesDataset& ds, std::int64_t lookback,
                      std::int64_t horizon, std::int64_t stride) {
  TSDC_CHECK(lookback >= 1, "lookback must be >= 1");
  TSDC_CHECK(horizon >= 0, "horizon must be >= 0");
  TSDC_CHECK(stride >= 1, "stride must be >= 1");
  if (ds.time_steps < lookback + horizon) {
    throw Error(internal::StrCat("series of ", ds.time_steps,
                                 " steps is too short: windows need at least ",
                                 lookback + horizon, " steps"));
  }
  WindowSet ws;
  ws.lookback = lookback;
  ws.horizon = horizon;
  ws.channels = ds.channels;
  ws.count = (ds.time_steps - lookback - horizon) / stride + 1;
  ws.windows.reserve(ws.count * ws.window_size());
  for (std::int64_t i = 0; i < ws.count; ++i) {
    const std::int64_t start = i * stride;
    ws.windows.insert(ws.windows.end(), ds.values.begin() + start * ds.channels,
                      ds.values.begin() + (start + lookback + horizon) * ds.channels);
    ws.starts.push_back(ds.origin + start);
  }
  return ws;
}

WindowSet LoadClassificationCsv(const std::string& path, bool has_header, int label_column) {
  CsvTable table = ReadTable(path, has_header);
  const std::size_t width = table.rows.front().size();
  TSDC_CHECK(label_column >= 0 && static_cast<std::size_t>(label_column) < width,
             "label column ", label_column, " outside the ", width, " columns");
  if (width < 2) throw Error(path + ": no value columns besides the label");
  WindowSet ws;
  ws.lookback = static_cast<std::int64_t>(width - 1);
  ws.horizon = 0;
  ws.channels = 1;
  ws.count = static_cast<std::int64_t>(table.rows.size());
  ws.labels.emplace();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != width) {
      throw Error(internal::StrCat(path, ": line ", table.line_numbers[r], " has ",
                                   row.size(), " cells, expected ", width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      float v = 0.0f;
      if (!ParseFloat(row[c], &v)) {
        throw Error(internal::StrCat(path, ": cannot parse '", row[c], "' at line ",
                                     table.line_numbers[r], ", column ", c + 1));
      }
      if (static_cast<int>(c) == label_column) {
        if (v < 0 || v != std::floor(v)) {
          throw Error(internal::StrCat(path, ": label '", row[c], "' at line ",
                                       table.line_numbers[r], " is not a non-negative integer"));
        }
        ws.labels->push_back(static_cast<int>(v));
        ws.num_classes = std::max(ws.num_classes, static_cast<int>(v) + 1);
      } else {
        ws.windows.push_back(v);
      }
    }
  }
  return ws;
}

WindowSet SelectWindows(const WindowSet& ws, std::span<const std::int64_t> indices) {
  WindowSet out;
  out.lookback = ws.lookback;
  out.horizon = ws.horizon;
  out.channels = ws.channels;
  out.num_classes = ws.num_classes;
  out.count = static_cast<std::int64_t>(indices.size());
  out.windows.reserve(indices.size() * ws.window_size());
  if (ws.labels) out.labels.emplace();
  for (std::int64_t i : indices) {
    TSDC_CHECK(i >= 0 && i < ws.count, "window index ", i, " out of range");
    auto w = ws.window(i);
    out.windows.insert(out.windows.end(), w.begin(), w.end());
    if (!ws.starts.empty()) out.starts.push_back(ws.starts[i]);
    if (ws.labels) out.labels->push_back((*ws.labels)[i]);
  }
  if (ws.starts.empty()) out.starts.clear();
  return out;
}

WindowSet ConcatWindows(const WindowSet& a, const WindowSet& b) {
  TSDC_CHECK(a.lookback == b.lookback && a.horizon == b.horizon && a.channels == b.channels,
             "window geometry mismatch");
  TSDC_CHECK(a.labels.has_value() == b.labels.has_value(), "label presence mismatch");
  WindowSet out = a;
  out.count += b.count;
  out.windows.insert(out.windows.end(), b.windows.begin(), b.windows.end());
  if (a.starts.empty() || b.starts.empty()) {
    out.starts.clear();
  } else {
    out.starts.insert(out.starts.end(), b.starts.begin(), b.starts.end());
  }
  if (out.labels) out.labels->insert(out.labels->end(), b.labels->begin(), b.labels->end());
  out.num_classes = std::max(a.num_classes, b.num_classes);
  return out;
}

template <typename Real>
BasicTensor<Real> WindowBatch(const WindowSet& ws, std::span<const std::int64_t> indices) {
  std::vector<Real> data;
  data.reserve(indices.size() * ws.window_size());
  for (std::int64_t i : indices) {
    TSDC_CHECK(i >= 0 && i < ws.count, "window index ", i, " out of range");
    auto w = ws.window(i);
    data.insert(data.end(), w.begin(), w.end());
  }
  return BasicTensor<Real>({static_cast<std::int64_t>(indices.size()), ws.window_len(),
                            ws.channels},
                           std::move(data));
}

template BasicTensor<float> WindowBatch(const WindowSet&, std::span<const std::int64_t>);
template BasicTensor<double> WindowBatch(const WindowSet&, std::span<const std::int64_t>);

}  // namespace tsdc

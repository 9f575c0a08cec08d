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

#include "tsdc/trajectory.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "tsdc/binary_io.h"
#include "tsdc/error.h"
#include "tsdc/numerics/autodiff.h"
#include "tsdc/numerics/ops.h"
#include "tsdc/numerics/tape.h"

namespace tsdc {

Fingerprint ComputeFingerprint(const TsfeConfig& cfg, const TrainOptions& options,
                               std::int64_t data_length, std::int64_t channels) {
  const nlohmann::json j = {{"model", cfg},
                            {"epochs", options.epochs},
                            {"lr", options.lr},
                            {"data_length", data_length},
                            {"channels", channels}};
  const std::string text = j.dump();
  Fingerprint fp{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), fp.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != fp.size()) {
    throw Error("SHA-256 computation failed");
  }
  return fp;
}

std::string FingerprintHex(const Fingerprint& fp) {
  std::string out;
  char buf[3];
  for (std::uint8_t b : fp) {
    std::snprintf(buf, sizeof(buf), "%02x", b);
    out += buf;
  }
  return out;
}

void ExpertBuffer::Validate() const {
  TSDC_CHECK(!trajectories.empty(), "expert buffer holds no trajectories");
  const std::int64_t e = epochs(), len = param_len();
  TSDC_CHECK(e >= 1 && len >= 1, "expert trajectories are empty");
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& t = trajectories[k];
    TSDC_CHECK(t.fingerprint == fingerprint, "trajectory ", k, " has a different fingerprint");
    TSDC_CHECK(t.epochs() == e, "trajectory ", k, " has ", t.epochs(), " snapshots, expected ", e);
    for (const auto& s : t.snapshots) {
      TSDC_CHECK(static_cast<std::int64_t>(s.size()) == len, "trajectory ", k,
                 " has a snapshot of length ", s.size(), ", expected ", len);
    }
  }
}

ExpertTrajectory TrainExpert(const WindowSet& train, const TsfeConfig& cfg,
                             const TrainOptions& options) {
  TSDC_CHECK(options.epochs >= 2, "expert training needs at least 2 epochs, got ",
             options.epochs);
  TSDC_CHECK(train.count >= 1, "expert training data is empty");
  ExpertTrajectory traj;
  traj.seed = options.seed;
  traj.fingerprint = ComputeFingerprint(cfg, options, train.count, train.channels);
  TrainModel(train, cfg, options, nullptr, [&](std::int64_t, const ModelParams& p) {
    traj.snapshots.push_back(p.values);
  });
  return traj;
}

ExpertBuffer TrainExpertBuffer(const WindowSet& train, const TsfeConfig& cfg,
                               const TrainOptions& options, std::int64_t num_experts,
                               std::uint64_t base_seed, int workers) {
  TSDC_CHECK(num_experts >= 1, "need at least one expert, got ", num_experts);
  TSDC_CHECK(workers >= 1, "workers must be >= 1");
  ExpertBuffer buffer;
  buffer.trajectories.resize(static_cast<std::size_t>(num_experts));
  auto run = [&](std::int64_t k) {
    TrainOptions o = options;
    o.seed = base_seed + static_cast<std::uint64_t>(k);
    buffer.trajectories[k] = TrainExpert(train, cfg, o);
  };
  if (workers == 1 || num_experts == 1) {
    for (std::int64_t k = 0; k < num_experts; ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::int64_t k = w; k < num_experts; k += workers) run(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  buffer.fingerprint = buffer.trajectories[0].fingerprint;
  buffer.Validate();
  return buffer;
}

void SaveBuffer(const ExpertBuffer& buffer, const std::string& path) {
  buffer.Validate();
  BinaryWriter w;
  w.Bytes("TDCB", 4);
  w.U32(kBufferFormatVersion);
  w.Bytes(buffer.fingerprint.data(), buffer.fingerprint.size());
  w.U32(static_cast<std::uint32_t>(buffer.size()));
  w.U32(static_cast<std::uint32_t>(buffer.epochs()));
  w.U64(static_cast<std::uint64_t>(buffer.param_len()));
  for (const auto& t : buffer.trajectories) {
    w.U64(t.seed);
    for (const auto& s : t.snapshots) w.F32(s);
  }
  w.AppendCrc();
  WriteFileBytes(path, w.buffer());
}

ExpertBuffer LoadBuffer(const std::string& path, const Fingerprint* expected) {
  const std::string image = ReadFileBytes(path);
  const std::string what = "expert buffer '" + path + "'";
  BinaryReader r(VerifyCrc(image, what), what);
  char magic[4];
  r.Bytes(magic, 4);
  if (std::string_view(magic, 4) != "TDCB") throw FormatError(what + ": bad magic");
  const std::uint32_t version = r.U32();
  if (version != kBufferFormatVersion) {
    throw VersionError(what + ": format version " + std::to_string(version) +
                       ", this build reads version " + std::to_string(kBufferFormatVersion));
  }
  ExpertBuffer buffer;
  r.Bytes(buffer.fingerprint.data(), buffer.fingerprint.size());
  const std::uint32_t k = r.U32();
  const std::uint32_t e = r.U32();
  const std::uint64_t len = r.U64();
  if (k == 0 || e == 0 || len == 0) throw FormatError(what + ": empty buffer header");
  const std::uint64_t need = static_cast<std::uint64_t>(k) * (8 + 4ull * e * len);
  if (r.remaining() != need) {
    throw FormatError(what + ": payload holds " + std::to_string(r.remaining()) +
                      " bytes, header implies " + std::to_string(need));
  }
  buffer.trajectories.resize(k);
  for (auto& t : buffer.trajectories) {
    t.seed = r.U64();
    t.fingerprint = buffer.fingerprint;
    t.snapshots.assign(e, FlatParams(len));
    for (auto& s : t.snapshots) r.F32(s);
  }
  if (expected != nullptr && *expected != buffer.fingerprint) {
    throw FingerprintError(what + ": fingerprint " + FingerprintHex(buffer.fingerprint) +
                           " does not match expected " + FingerprintHex(*expected));
  }
  return buffer;
}

std::vector<FlatParams> GradientPath(const FlatParams& theta0, std::int64_t steps, double alpha,
                                     const StepLoss& loss) {
  TSDC_CHECK(steps >= 0, "step count must be non-negative");
  TSDC_CHECK(alpha >= 0.0, "step size must be non-negative, got ", alpha);
  std::vector<FlatParams> path{theta0};
  for (std::int64_t i = 0; i < steps; ++i) {
    FlatParams next = path.back();
    {
      Tape<float> tape;
      TapeScope<float> scope(tape);
      Tensor theta({static_cast<std::int64_t>(next.size())}, next);
      theta.set_requires_grad(true);
      Tensor value = loss(theta, i);
      if (!value.AllFinite()) {
        throw NumericError("non-finite loss in pre-update step " + std::to_string(i));
      }
      if (value.on_tape()) {
        Tensor g = Differentiate<float>(value, {theta})[0];
        auto gd = g.data();
        for (std::size_t j = 0; j < next.size(); ++j) {
          next[j] = static_cast<float>(next[j] - alpha * gd[j]);
        }
      }
    }
    if (!std::all_of(next.begin(), next.end(), [](float v) { return std::isfinite(v); })) {
      throw NumericError("non-finite parameters after pre-update step " + std::to_string(i));
    }
    path.push_back(std::move(next));
  }
  return path;
}

std::vector<FlatParams> PreUpdatePath(const FlatParams& theta0, const Tensor& windows,
                                      const std::vector<int>& labels, std::int64_t a,
                                      double alpha, const TsfeConfig& cfg,
                                      const std::vector<std::vector<std::int64_t>>& batches) {
  TSDC_CHECK(a >= 1, "pre-update needs a >= 1, got ", a);
  TSDC_CHECK(alpha >= 0.0, "pre-update step size must be non-negative");
  TSDC_CHECK(windows.rank() == 3 && windows.dim(0) >= 1, "condensed windows must be [N, W, C]");
  const Tensor data = windows.Detach();
  std::vector<std::int64_t> all(static_cast<std::size_t>(data.dim(0)));
  std::iota(all.begin(), all.end(), 0);
  return GradientPath(theta0, a, alpha, [&](const Tensor& theta, std::int64_t step) {
    const std::vector<std::int64_t>& idx =
        batches.empty() ? all : batches[static_cast<std::size_t>(step) % batches.size()];
    std::vector<int> batch_labels;
    if (!labels.empty()) {
      for (std::int64_t i : idx) batch_labels.push_back(labels[i]);
    }
    auto [input, target] = SplitInputTarget(SelectSamples(data, idx), cfg.lookback);
    ForwardOptions fwd;
    fwd.collect_features = false;
    return TaskLoss(TsfeForward(input, theta, cfg, fwd).prediction, target, cfg.head,
                    batch_labels);
  });
}

FlatParams PreUpdate(const FlatParams& theta0, const Tensor& windows,
                     const std::vector<int>& labels, std::int64_t a, double alpha,
                     const TsfeConfig& cfg,
                     const std::vector<std::vector<std::int64_t>>& batches) {
  return PreUpdatePath(theta0, windows, labels, a, alpha, cfg, batches).back();
}

double TrajectoryDistance(const std::vector<FlatParams>& a, const std::vector<FlatParams>& b) {
  TSDC_CHECK(a.size() == b.size() && !a.empty(), "segments differ in length (", a.size(), " vs ",
             b.size(), ")");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    TSDC_CHECK(a[s].size() == b[s].size(), "segment entry ", s, " differs in length (",
               a[s].size(), " vs ", b[s].size(), ")");
    for (std::size_t i = 0; i < a[s].size(); ++i) {
      const double x = a[s][i], y = b[s][i];
      ab += x * y;
      aa += x * x;
      bb += y * y;
    }
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<std::int64_t> RankBySimilarity(const std::vector<double>& similarities) {
  std::vector<std::int64_t> order(similarities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) {
    return similarities[x] > similarities[y];
  });
  return order;
}

CurriculumRanking CurriculumRank(const ExpertBuffer& buffer, const std::vector<FlatParams>& foreseen,
                                 std::int64_t e0, std::int64_t a) {
  TSDC_CHECK(buffer.size() >= 1, "empty expert buffer");
  TSDC_CHECK(e0 >= 0 && a >= 1, "need e0 >= 0 and a >= 1");
  TSDC_CHECK(e0 + a < buffer.epochs(), "e0 + a = ", e0 + a, " must be below E = ",
             buffer.epochs());
  TSDC_CHECK(static_cast<std::int64_t>(foreseen.size()) == a + 1, "foreseen segment has ",
             foreseen.size(), " entries, expected a + 1 = ", a + 1);
  CurriculumRanking ranking;
  for (const auto& t : buffer.trajectories) {
    std::vector<FlatParams> seg(t.snapshots.begin() + e0, t.snapshots.begin() + e0 + a + 1);
    ranking.similarities.push_back(TrajectoryDistance(foreseen, seg));
  }
  ranking.order = RankBySimilarity(ranking.similarities);
  return ranking;
}

template <typename R>
std::optional<BasicTensor<R>> TrajectoryMatchingLoss(const BasicTensor<R>& tilde_end,
                                                     std::span<const float> expert_end,
                                                     std::span<const float> start) {
  TSDC_CHECK(tilde_end.numel() == static_cast<std::int64_t>(expert_end.size()) &&
                 expert_end.size() == start.size(),
             "parameter vectors differ in length (", tilde_end.numel(), ", ", expert_end.size(),
             ", ", start.size(), ")");
  double denom = 0.0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    const double d = static_cast<double>(start[i]) - expert_end[i];
    denom += d * d;
  }
  if (!(denom >= 1e-12)) return std::nullopt;
  std::vector<R> target(expert_end.begin(), expert_end.end());
  BasicTensor<R> diff = Sub(Reshape(tilde_end, {tilde_end.numel()}),
                            BasicTensor<R>({tilde_end.numel()}, std::move(target)));
  return Scale(Dot(diff, diff), static_cast<R>(1.0 / denom));
}

template std::optional<Tensor> TrajectoryMatchingLoss(const Tensor&, std::span<const float>,
                                                      std::span<const float>);
template std::optional<Tensor64> TrajectoryMatchingLoss(const Tensor64&, std::span<const float>,
                                                        std::span<const float>);

}  // namespace tsdc

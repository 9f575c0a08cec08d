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

#ifndef TSDC_NUMERICS_TAPE_H_
#define TSDC_NUMERICS_TAPE_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "tsdc/numerics/tensor.h"

namespace tsdc {

// Ordered record of primitive operations. Every operation whose inputs
// require gradients is appended while the tape is active on the calling
// thread. Backward closures are written in terms of the same primitives, so
// a backward pass run with create_graph=true is itself recorded and can be
// differentiated again; this is what lets one tape span several unrolled
// optimizer steps.
template <typename Real>
class Tape {
 public:
  using TensorT = BasicTensor<Real>;
  // Returns one gradient per input; entries whose `needs` flag is false may
  // be left undefined.
  using BackwardFn = std::function<std::vector<TensorT>(
      const TensorT& grad_output, const std::vector<bool>& needs)>;

  struct Entry {
    std::string_view op;
    std::vector<TensorT> inputs;
    TensorT output;
    BackwardFn backward;
    // Offset of a contiguous slice of inputs[0], or -1. Lets the engine
    // gather slice gradients without materializing one padded copy each.
    std::int64_t slice_offset = -1;
  };

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  void Record(std::string_view op, std::vector<TensorT> inputs,
              TensorT& output, BackwardFn backward);

  // Marks the entry that produced `output` as a slice of its input.
  void MarkSlice(const TensorT& output, std::int64_t offset);

  // Drops every entry. Tensors produced earlier keep their values but can no
  // longer be differentiated.
  void Clear();

  // Tape active on this thread, or nullptr inside a NoGradScope / outside
  // any TapeScope.
  static Tape* Active();

 private:
  template <typename>
  friend class TapeScope;
  template <typename>
  friend class NoGradScope;
  static std::vector<Tape*>& Stack();

  std::uint64_t id_;
  std::deque<Entry> entries_;
};

// Makes `tape` the active tape for the current thread until destruction.
template <typename Real>
class TapeScope {
 public:
  explicit TapeScope(Tape<Real>& tape) { Tape<Real>::Stack().push_back(&tape); }
  ~TapeScope() { Tape<Real>::Stack().pop_back(); }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
};

// Suspends recording for the current thread until destruction.
template <typename Real>
class NoGradScope {
 public:
  NoGradScope() { Tape<Real>::Stack().push_back(nullptr); }
  ~NoGradScope() { Tape<Real>::Stack().pop_back(); }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;
};

}  // namespace tsdc

#endif  // TSDC_NUMERICS_TAPE_H_

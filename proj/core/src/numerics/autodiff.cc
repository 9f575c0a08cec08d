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

#include "tsdc/numerics/autodiff.h"

#include <algorithm>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "tsdc/numerics/ops.h"

namespace tsdc {

template <typename Real>
std::vector<BasicTensor<Real>> Differentiate(
    const BasicTensor<Real>& loss, const std::vector<BasicTensor<Real>>& params,
    DifferentiateOptions options) {
  using TensorT = BasicTensor<Real>;
  using NodeT = TensorNode<Real>;
  Tape<Real>* tape = Tape<Real>::Active();
  TSDC_CHECK(tape != nullptr, "differentiate requires an active tape");
  TSDC_CHECK(loss.defined() && loss.numel() == 1 && loss.rank() <= 1,
             "loss must be a scalar, got shape ",
             loss.defined() ? ShapeToString(loss.shape()) : "<undefined>");
  TSDC_CHECK(loss.tape_id() == tape->id(),
             "loss was not produced on the active tape");

  const std::size_t end = loss.tape_index();
  std::unordered_set<const NodeT*> param_nodes;
  std::unordered_set<const NodeT*> depends;
  std::size_t start = end + 1;
  for (const TensorT& p : params) {
    TSDC_CHECK(p.defined(), "undefined parameter tensor");
    param_nodes.insert(p.node().get());
    depends.insert(p.node().get());
    if (p.tape_id() == tape->id()) {
      start = std::min(start, p.tape_index() + 1);
    } else {
      start = 0;
    }
  }

  // Forward sweep: which recorded outputs are reachable from a param.
  std::vector<char> live(end + 1, 0);
  for (std::size_t i = start; i <= end; ++i) {
    const auto& e = tape->entry(i);
    for (const TensorT& in : e.inputs) {
      if (depends.count(in.node().get())) {
        live[i] = 1;
        depends.insert(e.output.node().get());
        break;
      }
    }
  }

  std::unordered_map<const NodeT*, TensorT> grads;
  // Gradients flowing back through slices, summed in one op per source.
  struct Pieces {
    Shape shape;
    std::vector<TensorT> parts;
    std::vector<std::int64_t> offsets;
  };
  std::unordered_map<const NodeT*, Pieces> pieces;
  auto gather = [&](const NodeT* node) {
    auto p = pieces.find(node);
    if (p == pieces.end()) return;
    TensorT dense = EmbedMany(p->second.parts, p->second.offsets, p->second.shape);
    pieces.erase(p);
    auto slot = grads.find(node);
    if (slot == grads.end()) {
      grads.emplace(node, dense);
    } else {
      slot->second = Add(slot->second, dense);
    }
  };
  std::optional<NoGradScope<Real>> no_grad;
  if (!options.create_graph) no_grad.emplace();
  if (depends.count(loss.node().get())) {
    grads[loss.node().get()] = TensorT::Full(loss.shape(), Real(1));
    for (std::size_t i = end + 1; i-- > start;) {
      if (!live[i]) continue;
      const auto& e = tape->entry(i);
      const NodeT* out = e.output.node().get();
      gather(out);
      auto it = grads.find(out);
      if (it == grads.end()) continue;
      TensorT g = it->second;
      if (!param_nodes.count(out)) grads.erase(it);
      std::vector<bool> needs(e.inputs.size());
      for (std::size_t j = 0; j < e.inputs.size(); ++j) {
        needs[j] = depends.count(e.inputs[j].node().get()) > 0;
      }
      if (e.slice_offset >= 0 && needs[0]) {
        Pieces& p = pieces[e.inputs[0].node().get()];
        p.shape = e.inputs[0].shape();
        p.parts.push_back(g);
        p.offsets.push_back(e.slice_offset);
        continue;
      }
      // Copy what we need: recording during create_graph appends entries.
      std::vector<TensorT> inputs = e.inputs;
      std::vector<TensorT> input_grads = e.backward(g, needs);
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        if (!needs[j] || j >= input_grads.size() || !input_grads[j].defined()) {
          continue;
        }
        const NodeT* in = inputs[j].node().get();
        auto slot = grads.find(in);
        if (slot == grads.end()) {
          grads.emplace(in, input_grads[j]);
        } else {
          slot->second = Add(slot->second, input_grads[j]);
        }
      }
    }
  }

  for (const TensorT& p : params) gather(p.node().get());
  std::vector<TensorT> result;
  result.reserve(params.size());
  for (const TensorT& p : params) {
    auto it = grads.find(p.node().get());
    if (it == grads.end()) {
      result.push_back(TensorT::Zeros(p.shape()));
    } else {
      result.push_back(it->second);
    }
  }
  return result;
}

template <typename Real>
void Backward(const BasicTensor<Real>& loss) {
  Tape<Real>* tape = Tape<Real>::Active();
  TSDC_CHECK(tape != nullptr, "backward requires an active tape");
  TSDC_CHECK(loss.tape_id() == tape->id(),
             "loss was not produced on the active tape");
  std::vector<BasicTensor<Real>> leaves;
  std::unordered_set<const TensorNode<Real>*> seen;
  for (std::size_t i = 0; i <= loss.tape_index(); ++i) {
    for (const auto& in : tape->entry(i).inputs) {
      if (in.requires_grad() && !in.on_tape() && seen.insert(in.node().get()).second) {
        leaves.push_back(in);
      }
    }
  }
  auto grads = Differentiate(loss, leaves);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto g = grads[i].data();
    std::vector<Real> acc(g.begin(), g.end());
    if (leaves[i].grad()) {
      const auto& prev = *leaves[i].grad();
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += prev[k];
    }
    leaves[i].set_grad(std::move(acc));
  }
}

double GradientCheckReport::FractionWithin(double tol) const {
  if (relative_errors.empty()) return 1.0;
  const auto ok = std::count_if(relative_errors.begin(), relative_errors.end(),
                                [tol](double e) { return e <= tol; });
  return static_cast<double>(ok) / static_cast<double>(relative_errors.size());
}

template std::vector<BasicTensor<float>> Differentiate(
    const BasicTensor<float>&, const std::vector<BasicTensor<float>>&,
    DifferentiateOptions);
template std::vector<BasicTensor<double>> Differentiate(
    const BasicTensor<double>&, const std::vector<BasicTensor<double>>&,
    DifferentiateOptions);
template void Backward(const BasicTensor<float>&);
template void Backward(const BasicTensor<double>&);

}  // namespace tsdc

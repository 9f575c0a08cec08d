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

#include "tsdc/numerics/tensor.h"

#include <atomic>
#include <cmath>
#include <sstream>

#include "tsdc/error.h"
#include "tsdc/numerics/tape.h"

namespace tsdc {

std::int64_t NumElements(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    TSDC_CHECK(d >= 0, "negative extent in shape ", ShapeToString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename Real>
BasicTensor<Real>::BasicTensor(Shape shape, std::vector<Real> data)
    : node_(std::make_shared<TensorNode<Real>>()) {
  TSDC_CHECK(NumElements(shape) == static_cast<std::int64_t>(data.size()),
             "shape ", ShapeToString(shape), " does not match ", data.size(),
             " values");
  node_->shape = std::move(shape);
  node_->data = std::move(data);
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::Zeros(Shape shape) {
  return Full(std::move(shape), Real(0));
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::Full(Shape shape, Real value) {
  const auto n = static_cast<std::size_t>(NumElements(shape));
  return BasicTensor(std::move(shape), std::vector<Real>(n, value));
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::Scalar(Real value) {
  return BasicTensor(Shape{}, std::vector<Real>{value});
}

template <typename Real>
Real BasicTensor<Real>::item() const {
  TSDC_CHECK(node_->data.size() == 1, "item() on tensor of shape ",
             ShapeToString(node_->shape));
  return node_->data[0];
}

template <typename Real>
BasicTensor<Real>& BasicTensor<Real>::set_requires_grad(bool value) {
  node_->requires_grad = value;
  return *this;
}

template <typename Real>
void BasicTensor<Real>::set_grad(std::vector<Real> grad) {
  TSDC_CHECK(grad.size() == node_->data.size(), "gradient size ", grad.size(),
             " does not match tensor of shape ", ShapeToString(node_->shape));
  node_->grad = std::move(grad);
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::Detach() const {
  return BasicTensor(node_->shape, node_->data);
}

template <typename Real>
bool BasicTensor<Real>::AllFinite() const {
  for (Real v : node_->data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename Real>
void CheckFinite(const BasicTensor<Real>& t, const std::string& context) {
  if (!t.AllFinite()) throw NumericError(context + ": non-finite value");
}

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}  // namespace

template <typename Real>
Tape<Real>::Tape() : id_(next_tape_id.fetch_add(1)) {}

template <typename Real>
Tape<Real>::~Tape() = default;

template <typename Real>
void Tape<Real>::Record(std::string_view op, std::vector<TensorT> inputs,
                        TensorT& output, BackwardFn backward) {
  auto& node = *output.node();
  node.requires_grad = true;
  node.tape_id = id_;
  node.tape_index = entries_.size();
  entries_.push_back(Entry{op, std::move(inputs), output, std::move(backward)});
}

template <typename Real>
void Tape<Real>::MarkSlice(const TensorT& output, std::int64_t offset) {
  if (!output.on_tape() || output.tape_id() != id_) return;
  entries_[output.tape_index()].slice_offset = offset;
}

template <typename Real>
void Tape<Real>::Clear() {
  entries_.clear();
  id_ = next_tape_id.fetch_add(1);
}

template <typename Real>
std::vector<Tape<Real>*>& Tape<Real>::Stack() {
  thread_local std::vector<Tape<Real>*> stack;
  return stack;
}

template <typename Real>
Tape<Real>* Tape<Real>::Active() {
  auto& stack = Stack();
  return stack.empty() ? nullptr : stack.back();
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class Tape<float>;
template class Tape<double>;
template void CheckFinite(const BasicTensor<float>&, const std::string&);
template void CheckFinite(const BasicTensor<double>&, const std::string&);

}  // namespace tsdc

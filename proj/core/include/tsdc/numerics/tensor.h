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

#ifndef TSDC_NUMERICS_TENSOR_H_
#define TSDC_NUMERICS_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tsdc {

using Shape = std::vector<std::int64_t>;

std::int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

template <typename Real>
struct TensorNode {
  Shape shape;
  std::vector<Real> data;
  bool requires_grad = false;
  std::optional<std::vector<Real>> grad;
  // Identity of the tape that produced this value; 0 for leaves.
  std::uint64_t tape_id = 0;
  std::size_t tape_index = 0;
};

// Dense row-major tensor handle. Copies share storage; Detach() makes an
// independent copy without graph history.
template <typename Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() = default;
  BasicTensor(Shape shape, std::vector<Real> data);

  static BasicTensor Zeros(Shape shape);
  static BasicTensor Full(Shape shape, Real value);
  static BasicTensor Scalar(Real value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::int64_t numel() const {
    return static_cast<std::int64_t>(node_->data.size());
  }

  std::span<const Real> data() const { return node_->data; }
  // In-place writes are only meaningful on leaves that no recorded
  // operation has consumed yet.
  std::span<Real> mutable_data() { return node_->data; }
  Real item() const;

  bool requires_grad() const { return node_->requires_grad; }
  BasicTensor& set_requires_grad(bool value);
  const std::optional<std::vector<Real>>& grad() const { return node_->grad; }
  void set_grad(std::vector<Real> grad);
  void clear_grad() { node_->grad.reset(); }

  bool on_tape() const { return node_->tape_id != 0; }
  std::uint64_t tape_id() const { return node_->tape_id; }
  std::size_t tape_index() const { return node_->tape_index; }

  BasicTensor Detach() const;
  template <typename Other>
  BasicTensor<Other> Cast() const {
    std::vector<Other> out(node_->data.begin(), node_->data.end());
    return BasicTensor<Other>(node_->shape, std::move(out));
  }

  bool AllFinite() const;

  const std::shared_ptr<TensorNode<Real>>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<Real>> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Throws NumericError naming `context` when t holds NaN or Inf.
template <typename Real>
void CheckFinite(const BasicTensor<Real>& t, const std::string& context);

}  // namespace tsdc

#endif  // TSDC_NUMERICS_TENSOR_H_

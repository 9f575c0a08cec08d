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

#ifndef TSDC_NUMERICS_OPS_H_
#define TSDC_NUMERICS_OPS_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "tsdc/numerics/tensor.h"

// Differentiable primitives. All functions are instantiated for float and
// double. Each records itself on the active tape when any input requires a
// gradient, and each backward rule is expressed with these same primitives.

namespace tsdc {

using IndexMap = std::shared_ptr<const std::vector<std::int64_t>>;

// --- elementwise (operands must have identical shapes) ---
template <typename R> BasicTensor<R> Add(const BasicTensor<R>& a, const BasicTensor<R>& b);
template <typename R> BasicTensor<R> Sub(const BasicTensor<R>& a, const BasicTensor<R>& b);
template <typename R> BasicTensor<R> Mul(const BasicTensor<R>& a, const BasicTensor<R>& b);
template <typename R> BasicTensor<R> Scale(const BasicTensor<R>& x, R factor);
template <typename R> BasicTensor<R> AddScalar(const BasicTensor<R>& x, R value);
template <typename R> BasicTensor<R> Exp(const BasicTensor<R>& x);
template <typename R> BasicTensor<R> Log(const BasicTensor<R>& x);
template <typename R> BasicTensor<R> Tanh(const BasicTensor<R>& x);
template <typename R> BasicTensor<R> Sqrt(const BasicTensor<R>& x);
template <typename R> BasicTensor<R> Reciprocal(const BasicTensor<R>& x);
// x * s where s holds a single element.
template <typename R> BasicTensor<R> ScalarMul(const BasicTensor<R>& x, const BasicTensor<R>& s);

// --- reductions and broadcasts ---
template <typename R> BasicTensor<R> Sum(const BasicTensor<R>& x);  // -> shape []
template <typename R> BasicTensor<R> BroadcastScalar(const BasicTensor<R>& s, const Shape& shape);
// [rows, cols] -> [cols], summing over rows.
template <typename R> BasicTensor<R> SumRows(const BasicTensor<R>& x);
// [cols] -> [rows, cols]
template <typename R> BasicTensor<R> BroadcastRows(const BasicTensor<R>& v, std::int64_t rows);
// [rows, cols] -> [rows], summing over cols.
template <typename R> BasicTensor<R> SumCols(const BasicTensor<R>& x);
// [rows] -> [rows, cols]
template <typename R> BasicTensor<R> BroadcastCols(const BasicTensor<R>& v, std::int64_t cols);

// --- layout ---
template <typename R> BasicTensor<R> Reshape(const BasicTensor<R>& x, Shape shape);
template <typename R> BasicTensor<R> Permute(const BasicTensor<R>& x, const std::vector<int>& axes);
// out.flat[i] = x.flat[(*index)[i]]
template <typename R> BasicTensor<R> Gather(const BasicTensor<R>& x, IndexMap index, Shape out_shape);
// Adjoint of Gather: out.flat[(*index)[i]] += x.flat[i]
template <typename R> BasicTensor<R> ScatterAdd(const BasicTensor<R>& x, IndexMap index, Shape out_shape);
// Contiguous run of the flattened tensor.
template <typename R> BasicTensor<R> Narrow(const BasicTensor<R>& x, std::int64_t offset, Shape out_shape);
// Adjoint of Narrow: zeros of `total` elements with x placed at `offset`.
template <typename R> BasicTensor<R> Embed(const BasicTensor<R>& x, std::int64_t offset, std::int64_t total);
// Sum of parts placed at flat offsets into zeros of out_shape.
template <typename R> BasicTensor<R> EmbedMany(const std::vector<BasicTensor<R>>& parts, const std::vector<std::int64_t>& offsets, Shape out_shape);
// Concatenates flattened tensors into one vector.
template <typename R> BasicTensor<R> ConcatFlat(const std::vector<BasicTensor<R>>& parts);

// --- linear algebra ---
// a: [..., M, K] (or [..., K, M] when transpose_a), b likewise. Both operands
// are rank 2, or both carry identical leading batch dimensions.
template <typename R>
BasicTensor<R> MatMul(const BasicTensor<R>& a, const BasicTensor<R>& b,
                      bool transpose_a = false, bool transpose_b = false);

// --- neural network pieces ---
// Softmax over the last axis, computed with max subtraction.
template <typename R> BasicTensor<R> Softmax(const BasicTensor<R>& logits);

// Centered moving average along the middle axis of x viewed as
// [outer, length, inner], with replicate-edge padding of (kernel-1)/2 on each
// side. `adjoint` applies the transpose map instead.
template <typename R>
BasicTensor<R> MovingAverage(const BasicTensor<R>& x, std::int64_t outer,
                             std::int64_t length, std::int64_t inner,
                             std::int64_t kernel, bool adjoint = false);

// 1-D series of shape [length]; output has the same length.
template <typename R> BasicTensor<R> AvgPool1d(const BasicTensor<R>& series, std::int64_t kernel);

// --- composites ---
template <typename R> BasicTensor<R> Mean(const BasicTensor<R>& x);
template <typename R> BasicTensor<R> Dot(const BasicTensor<R>& u, const BasicTensor<R>& v);
// Zero-norm operands yield similarity 0 with zero gradient.
template <typename R> BasicTensor<R> CosineSimilarity(const BasicTensor<R>& u, const BasicTensor<R>& v);
template <typename R> BasicTensor<R> Gelu(const BasicTensor<R>& x);
template <typename R> BasicTensor<R> MseLoss(const BasicTensor<R>& prediction, const BasicTensor<R>& target);
// Mean cross-entropy of softmax(logits) [batch, classes] against labels.
template <typename R>
BasicTensor<R> CrossEntropy(const BasicTensor<R>& logits, const std::vector<int>& labels);

}  // namespace tsdc

#endif  // TSDC_NUMERICS_OPS_H_

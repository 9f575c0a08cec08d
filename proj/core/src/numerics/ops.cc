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

#include "tsdc/numerics/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string_view>

#include "tsdc/error.h"
#include "tsdc/numerics/tape.h"

namespace tsdc {
namespace {

template <typename R>
using T = BasicTensor<R>;
using Needs = std::vector<bool>;

template <typename R>
T<R> Record(std::string_view op, std::vector<T<R>> inputs, T<R> out,
            typename Tape<R>::BackwardFn fn) {
  Tape<R>* tape = Tape<R>::Active();
  if (tape == nullptr) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const T<R>& t) { return t.requires_grad(); });
  if (!any) return out;
  tape->Record(op, std::move(inputs), out, std::move(fn));
  return out;
}

template <typename R>
void CheckSameShape(const T<R>& a, const T<R>& b, const char* op) {
  TSDC_CHECK(a.shape() == b.shape(), op, ": shape mismatch ",
             ShapeToString(a.shape()), " vs ", ShapeToString(b.shape()));
}

template <typename R, typename F>
T<R> MapUnary(const T<R>& x, F f) {
  auto in = x.data();
  std::vector<R> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return T<R>(x.shape(), std::move(out));
}

template <typename R, typename F>
T<R> MapBinary(const T<R>& a, const T<R>& b, F f) {
  auto x = a.data();
  auto y = b.data();
  std::vector<R> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
  return T<R>(a.shape(), std::move(out));
}

template <typename R>
void Gemm(const R* a, const R* b, R* c, std::int64_t m, std::int64_t k,
          std::int64_t n, bool ta, bool tb) {
  using Mat = Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const Mat>;
  Eigen::Map<Mat> out(c, m, n);
  ConstMap lhs(a, ta ? k : m, ta ? m : k);
  ConstMap rhs(b, tb ? n : k, tb ? k : n);
  if (!ta && !tb) {
    out.noalias() = lhs * rhs;
  } else if (ta && !tb) {
    out.noalias() = lhs.transpose() * rhs;
  } else if (!ta && tb) {
    out.noalias() = lhs * rhs.transpose();
  } else {
    out.noalias() = lhs.transpose() * rhs.transpose();
  }
}

std::int64_t AxisExtent(const Shape& s, std::size_t from_end) {
  return s[s.size() - from_end];
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise

template <typename R>
T<R> Add(const T<R>& a, const T<R>& b) {
  CheckSameShape(a, b, "Add");
  return Record<R>("add", {a, b}, MapBinary(a, b, [](R x, R y) { return x + y; }),
                   [](const T<R>& g, const Needs&) { return std::vector<T<R>>{g, g}; });
}

template <typename R>
T<R> Sub(const T<R>& a, const T<R>& b) {
  CheckSameShape(a, b, "Sub");
  return Record<R>("sub", {a, b}, MapBinary(a, b, [](R x, R y) { return x - y; }),
                   [](const T<R>& g, const Needs& needs) {
                     return std::vector<T<R>>{g, needs[1] ? Scale(g, R(-1)) : T<R>()};
                   });
}

template <typename R>
T<R> Mul(const T<R>& a, const T<R>& b) {
  CheckSameShape(a, b, "Mul");
  return Record<R>("mul", {a, b}, MapBinary(a, b, [](R x, R y) { return x * y; }),
                   [a, b](const T<R>& g, const Needs& needs) {
                     return std::vector<T<R>>{needs[0] ? Mul(g, b) : T<R>(),
                                              needs[1] ? Mul(g, a) : T<R>()};
                   });
}

template <typename R>
T<R> Scale(const T<R>& x, R factor) {
  return Record<R>("scale", {x}, MapUnary(x, [factor](R v) { return v * factor; }),
                   [factor](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Scale(g, factor)};
                   });
}

template <typename R>
T<R> AddScalar(const T<R>& x, R value) {
  return Record<R>("add_scalar", {x}, MapUnary(x, [value](R v) { return v + value; }),
                   [](const T<R>& g, const Needs&) { return std::vector<T<R>>{g}; });
}

template <typename R>
T<R> Exp(const T<R>& x) {
  T<R> y = MapUnary(x, [](R v) { return std::exp(v); });
  return Record<R>("exp", {x}, y, [y](const T<R>& g, const Needs&) {
    return std::vector<T<R>>{Mul(g, y)};
  });
}

template <typename R>
T<R> Log(const T<R>& x) {
  return Record<R>("log", {x}, MapUnary(x, [](R v) { return std::log(v); }),
                   [x](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Mul(g, Reciprocal(x))};
                   });
}

template <typename R>
T<R> Tanh(const T<R>& x) {
  T<R> y = MapUnary(x, [](R v) { return std::tanh(v); });
  return Record<R>("tanh", {x}, y, [y](const T<R>& g, const Needs&) {
    return std::vector<T<R>>{Mul(g, AddScalar(Scale(Mul(y, y), R(-1)), R(1)))};
  });
}

template <typename R>
T<R> Sqrt(const T<R>& x) {
  T<R> y = MapUnary(x, [](R v) { return std::sqrt(v); });
  return Record<R>("sqrt", {x}, y, [y](const T<R>& g, const Needs&) {
    return std::vector<T<R>>{Mul(g, Scale(Reciprocal(y), R(0.5)))};
  });
}

template <typename R>
T<R> Reciprocal(const T<R>& x) {
  T<R> y = MapUnary(x, [](R v) { return R(1) / v; });
  return Record<R>("reciprocal", {x}, y, [y](const T<R>& g, const Needs&) {
    return std::vector<T<R>>{Scale(Mul(g, Mul(y, y)), R(-1))};
  });
}

template <typename R>
T<R> ScalarMul(const T<R>& x, const T<R>& s) {
  TSDC_CHECK(s.numel() == 1, "ScalarMul: factor must have one element, got ",
             ShapeToString(s.shape()));
  const R factor = s.data()[0];
  return Record<R>("scalar_mul", {x, s},
                   MapUnary(x, [factor](R v) { return v * factor; }),
                   [x, s](const T<R>& g, const Needs& needs) {
                     return std::vector<T<R>>{
                         needs[0] ? ScalarMul(g, s) : T<R>(),
                         needs[1] ? Reshape(Sum(Mul(g, x)), s.shape()) : T<R>()};
                   });
}

// ---------------------------------------------------------------------------
// reductions and broadcasts

template <typename R>
T<R> Sum(const T<R>& x) {
  double acc = 0.0;
  for (R v : x.data()) acc += static_cast<double>(v);
  Shape in_shape = x.shape();
  return Record<R>("sum", {x}, T<R>::Scalar(static_cast<R>(acc)),
                   [in_shape](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{BroadcastScalar(g, in_shape)};
                   });
}

template <typename R>
T<R> BroadcastScalar(const T<R>& s, const Shape& shape) {
  TSDC_CHECK(s.numel() == 1, "BroadcastScalar: source must have one element");
  Shape src = s.shape();
  return Record<R>("broadcast_scalar", {s}, T<R>::Full(shape, s.data()[0]),
                   [src](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Reshape(Sum(g), src)};
                   });
}

template <typename R>
T<R> SumRows(const T<R>& x) {
  TSDC_CHECK(x.rank() == 2, "SumRows expects rank 2, got ", ShapeToString(x.shape()));
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  std::vector<double> acc(static_cast<std::size_t>(cols), 0.0);
  auto in = x.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const R* row = in.data() + r * cols;
    for (std::int64_t c = 0; c < cols; ++c) acc[c] += row[c];
  }
  std::vector<R> out(acc.begin(), acc.end());
  return Record<R>("sum_rows", {x}, T<R>({cols}, std::move(out)),
                   [rows](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{BroadcastRows(g, rows)};
                   });
}

template <typename R>
T<R> BroadcastRows(const T<R>& v, std::int64_t rows) {
  TSDC_CHECK(v.rank() == 1, "BroadcastRows expects rank 1, got ", ShapeToString(v.shape()));
  const std::int64_t cols = v.dim(0);
  std::vector<R> out(static_cast<std::size_t>(rows * cols));
  auto in = v.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy(in.begin(), in.end(), out.begin() + r * cols);
  }
  return Record<R>("broadcast_rows", {v}, T<R>({rows, cols}, std::move(out)),
                   [](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{SumRows(g)};
                   });
}

template <typename R>
T<R> SumCols(const T<R>& x) {
  TSDC_CHECK(x.rank() == 2, "SumCols expects rank 2, got ", ShapeToString(x.shape()));
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  std::vector<R> out(static_cast<std::size_t>(rows));
  auto in = x.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const R* row = in.data() + r * cols;
    for (std::int64_t c = 0; c < cols; ++c) acc += row[c];
    out[r] = static_cast<R>(acc);
  }
  return Record<R>("sum_cols", {x}, T<R>({rows}, std::move(out)),
                   [cols](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{BroadcastCols(g, cols)};
                   });
}

template <typename R>
T<R> BroadcastCols(const T<R>& v, std::int64_t cols) {
  TSDC_CHECK(v.rank() == 1, "BroadcastCols expects rank 1, got ", ShapeToString(v.shape()));
  const std::int64_t rows = v.dim(0);
  std::vector<R> out(static_cast<std::size_t>(rows * cols));
  auto in = v.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    std::fill(out.begin() + r * cols, out.begin() + (r + 1) * cols, in[r]);
  }
  return Record<R>("broadcast_cols", {v}, T<R>({rows, cols}, std::move(out)),
                   [](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{SumCols(g)};
                   });
}

// ---------------------------------------------------------------------------
// layout

template <typename R>
T<R> Reshape(const T<R>& x, Shape shape) {
  TSDC_CHECK(NumElements(shape) == x.numel(), "Reshape: cannot view ",
             ShapeToString(x.shape()), " as ", ShapeToString(shape));
  Shape src = x.shape();
  std::vector<R> out(x.data().begin(), x.data().end());
  return Record<R>("reshape", {x}, T<R>(std::move(shape), std::move(out)),
                   [src](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Reshape(g, src)};
                   });
}

template <typename R>
T<R> Permute(const T<R>& x, const std::vector<int>& axes) {
  const std::size_t rank = x.rank();
  TSDC_CHECK(axes.size() == rank, "Permute: expected ", rank, " axes");
  std::vector<int> inverse(rank, -1);
  for (std::size_t i = 0; i < rank; ++i) {
    TSDC_CHECK(axes[i] >= 0 && static_cast<std::size_t>(axes[i]) < rank &&
                   inverse[axes[i]] == -1,
               "Permute: invalid axis list");
    inverse[axes[i]] = static_cast<int>(i);
  }
  const Shape& in_shape = x.shape();
  Shape out_shape(rank);
  std::vector<std::int64_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  std::vector<std::int64_t> stride_for_out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[axes[i]];
    stride_for_out[i] = in_strides[axes[i]];
  }
  auto in = x.data();
  std::vector<R> out(in.size());
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t src = 0;
  for (std::size_t o = 0; o < out.size(); ++o) {
    out[o] = in[src];
    for (std::size_t d = rank; d-- > 0;) {
      src += stride_for_out[d];
      if (++idx[d] < out_shape[d]) break;
      src -= stride_for_out[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  return Record<R>("permute", {x}, T<R>(std::move(out_shape), std::move(out)),
                   [inverse](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Permute(g, inverse)};
                   });
}

template <typename R>
T<R> Gather(const T<R>& x, IndexMap index, Shape out_shape) {
  TSDC_CHECK(index != nullptr, "Gather: null index map");
  TSDC_CHECK(NumElements(out_shape) == static_cast<std::int64_t>(index->size()),
             "Gather: index map size does not match output shape");
  auto in = x.data();
  std::vector<R> out(index->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int64_t j = (*index)[i];
    TSDC_CHECK(j >= 0 && j < x.numel(), "Gather: index ", j, " out of range");
    out[i] = in[j];
  }
  Shape src = x.shape();
  return Record<R>("gather", {x}, T<R>(std::move(out_shape), std::move(out)),
                   [index, src](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{ScatterAdd(g, index, src)};
                   });
}

template <typename R>
T<R> ScatterAdd(const T<R>& x, IndexMap index, Shape out_shape) {
  TSDC_CHECK(index != nullptr && static_cast<std::int64_t>(index->size()) == x.numel(),
             "ScatterAdd: index map size does not match source");
  std::vector<R> out(static_cast<std::size_t>(NumElements(out_shape)), R(0));
  auto in = x.data();
  for (std::size_t i = 0; i < index->size(); ++i) {
    const std::int64_t j = (*index)[i];
    TSDC_CHECK(j >= 0 && j < static_cast<std::int64_t>(out.size()),
               "ScatterAdd: index ", j, " out of range");
    out[j] += in[i];
  }
  Shape src = x.shape();
  return Record<R>("scatter_add", {x}, T<R>(std::move(out_shape), std::move(out)),
                   [index, src](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Gather(g, index, src)};
                   });
}

template <typename R>
T<R> Narrow(const T<R>& x, std::int64_t offset, Shape out_shape) {
  const std::int64_t n = NumElements(out_shape);
  TSDC_CHECK(offset >= 0 && offset + n <= x.numel(), "Narrow: range [", offset,
             ", ", offset + n, ") exceeds ", x.numel(), " elements");
  auto in = x.data();
  std::vector<R> out(in.begin() + offset, in.begin() + offset + n);
  const std::int64_t total = x.numel();
  Shape src = x.shape();
  T<R> y = Record<R>("narrow", {x}, T<R>(std::move(out_shape), std::move(out)),
                     [offset, total, src](const T<R>& g, const Needs&) {
                       return std::vector<T<R>>{Reshape(Embed(g, offset, total), src)};
                     });
  if (Tape<R>* tape = Tape<R>::Active()) tape->MarkSlice(y, offset);
  return y;
}

template <typename R>
T<R> EmbedMany(const std::vector<T<R>>& parts, const std::vector<std::int64_t>& offsets,
               Shape out_shape) {
  TSDC_CHECK(parts.size() == offsets.size(), "EmbedMany: ", parts.size(), " parts but ",
             offsets.size(), " offsets");
  const std::int64_t total = NumElements(out_shape);
  std::vector<R> out(static_cast<std::size_t>(total), R(0));
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto d = parts[i].data();
    TSDC_CHECK(offsets[i] >= 0 && offsets[i] + parts[i].numel() <= total,
               "EmbedMany: part ", i, " exceeds ", total, " elements");
    for (std::size_t k = 0; k < d.size(); ++k) out[offsets[i] + k] += d[k];
    shapes.push_back(parts[i].shape());
  }
  return Record<R>("embed_many", parts, T<R>(std::move(out_shape), std::move(out)),
                   [offsets, shapes](const T<R>& g, const Needs& needs) {
                     std::vector<T<R>> grads(offsets.size());
                     for (std::size_t i = 0; i < offsets.size(); ++i) {
                       if (needs[i]) grads[i] = Narrow(g, offsets[i], shapes[i]);
                     }
                     return grads;
                   });
}

template <typename R>
T<R> Embed(const T<R>& x, std::int64_t offset, std::int64_t total) {
  TSDC_CHECK(offset >= 0 && offset + x.numel() <= total, "Embed: range exceeds total");
  std::vector<R> out(static_cast<std::size_t>(total), R(0));
  std::copy(x.data().begin(), x.data().end(), out.begin() + offset);
  Shape src = x.shape();
  return Record<R>("embed", {x}, T<R>({total}, std::move(out)),
                   [offset, src](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{Narrow(g, offset, src)};
                   });
}

template <typename R>
T<R> ConcatFlat(const std::vector<T<R>>& parts) {
  std::vector<R> out;
  std::vector<std::int64_t> offsets;
  std::vector<Shape> shapes;
  for (const auto& p : parts) {
    offsets.push_back(static_cast<std::int64_t>(out.size()));
    shapes.push_back(p.shape());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  const auto total = static_cast<std::int64_t>(out.size());
  return Record<R>("concat_flat", parts, T<R>({total}, std::move(out)),
                   [offsets, shapes](const T<R>& g, const Needs& needs) {
                     std::vector<T<R>> grads(offsets.size());
                     for (std::size_t i = 0; i < offsets.size(); ++i) {
                       if (needs[i]) grads[i] = Narrow(g, offsets[i], shapes[i]);
                     }
                     return grads;
                   });
}

// ---------------------------------------------------------------------------
// linear algebra

template <typename R>
T<R> MatMul(const T<R>& a, const T<R>& b, bool transpose_a, bool transpose_b) {
  TSDC_CHECK(a.rank() >= 2 && a.rank() == b.rank(), "MatMul: ranks ", a.rank(),
             " and ", b.rank(), " are not compatible");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  for (std::size_t i = 0; i + 2 < sa.size(); ++i) {
    TSDC_CHECK(sa[i] == sb[i], "MatMul: batch dims differ: ", ShapeToString(sa),
               " vs ", ShapeToString(sb));
  }
  const std::int64_t m = transpose_a ? AxisExtent(sa, 1) : AxisExtent(sa, 2);
  const std::int64_t k = transpose_a ? AxisExtent(sa, 2) : AxisExtent(sa, 1);
  const std::int64_t kb = transpose_b ? AxisExtent(sb, 1) : AxisExtent(sb, 2);
  const std::int64_t n = transpose_b ? AxisExtent(sb, 2) : AxisExtent(sb, 1);
  TSDC_CHECK(k == kb, "MatMul: inner dims differ: ", ShapeToString(sa), " vs ",
             ShapeToString(sb));
  Shape out_shape(sa.begin(), sa.end() - 2);
  std::int64_t batch = 1;
  for (std::int64_t d : out_shape) batch *= d;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<R> out(static_cast<std::size_t>(batch * m * n));
  const R* pa = a.data().data();
  const R* pb = b.data().data();
  for (std::int64_t i = 0; i < batch; ++i) {
    Gemm(pa + i * m * k, pb + i * k * n, out.data() + i * m * n, m, k, n,
         transpose_a, transpose_b);
  }
  return Record<R>(
      "matmul", {a, b}, T<R>(std::move(out_shape), std::move(out)),
      [a, b, transpose_a, transpose_b](const T<R>& g, const Needs& needs) {
        T<R> da, db;
        if (needs[0]) {
          da = transpose_a ? MatMul(b, g, transpose_b, true)
                           : MatMul(g, b, false, !transpose_b);
        }
        if (needs[1]) {
          db = transpose_b ? MatMul(g, a, true, transpose_a)
                           : MatMul(a, g, !transpose_a, false);
        }
        return std::vector<T<R>>{da, db};
      });
}

// ---------------------------------------------------------------------------
// neural network pieces

template <typename R>
T<R> Softmax(const T<R>& logits) {
  TSDC_CHECK(logits.rank() >= 1 && logits.shape().back() >= 1,
             "Softmax: last axis must be non-empty");
  const std::int64_t k = logits.shape().back();
  const std::int64_t rows = logits.numel() / k;
  auto in = logits.data();
  std::vector<R> out(in.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const R* x = in.data() + r * k;
    R* y = out.data() + r * k;
    const R mx = *std::max_element(x, x + k);
    double total = 0.0;
    for (std::int64_t j = 0; j < k; ++j) {
      y[j] = std::exp(x[j] - mx);
      total += y[j];
    }
    const R inv = static_cast<R>(1.0 / total);
    for (std::int64_t j = 0; j < k; ++j) y[j] *= inv;
  }
  T<R> y(logits.shape(), std::move(out));
  return Record<R>("softmax", {logits}, y, [y, rows, k](const T<R>& g, const Needs&) {
    // dx = y * (g - sum(g * y))
    T<R> gy = Mul(g, y);
    T<R> s = SumCols(Reshape(gy, {rows, k}));
    T<R> s_full = Reshape(BroadcastCols(s, k), y.shape());
    return std::vector<T<R>>{Sub(gy, Mul(y, s_full))};
  });
}

template <typename R>
T<R> MovingAverage(const T<R>& x, std::int64_t outer, std::int64_t length,
                   std::int64_t inner, std::int64_t kernel, bool adjoint) {
  TSDC_CHECK(kernel >= 1 && kernel % 2 == 1, "moving average kernel must be odd and >= 1, got ",
             kernel);
  TSDC_CHECK(outer * length * inner == x.numel(), "MovingAverage: layout [", outer,
             ", ", length, ", ", inner, "] does not match ", ShapeToString(x.shape()));
  TSDC_CHECK(length >= 1, "MovingAverage: empty series");
  const std::int64_t half = (kernel - 1) / 2;
  auto in = x.data();
  std::vector<double> acc(in.size(), 0.0);
  for (std::int64_t o = 0; o < outer; ++o) {
    const std::int64_t base = o * length * inner;
    for (std::int64_t t = 0; t < length; ++t) {
      for (std::int64_t s = t - half; s <= t + half; ++s) {
        const std::int64_t src = std::clamp<std::int64_t>(s, 0, length - 1);
        // forward: out[t] += x[src]; adjoint: out[src] += x[t]
        const std::int64_t from = adjoint ? t : src;
        const std::int64_t to = adjoint ? src : t;
        const R* xi = in.data() + base + from * inner;
        double* yo = acc.data() + base + to * inner;
        for (std::int64_t i = 0; i < inner; ++i) yo[i] += static_cast<double>(xi[i]);
      }
    }
  }
  std::vector<R> out(in.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<R>(acc[i] / static_cast<double>(kernel));
  }
  return Record<R>("moving_average", {x}, T<R>(x.shape(), std::move(out)),
                   [outer, length, inner, kernel, adjoint](const T<R>& g, const Needs&) {
                     return std::vector<T<R>>{
                         MovingAverage(g, outer, length, inner, kernel, !adjoint)};
                   });
}

template <typename R>
T<R> AvgPool1d(const T<R>& series, std::int64_t kernel) {
  TSDC_CHECK(series.rank() == 1, "AvgPool1d expects a 1-D series, got ",
             ShapeToString(series.shape()));
  return MovingAverage(series, 1, series.dim(0), 1, kernel);
}

// ---------------------------------------------------------------------------
// composites

template <typename R>
T<R> Mean(const T<R>& x) {
  TSDC_CHECK(x.numel() > 0, "Mean of empty tensor");
  return Scale(Sum(x), R(1) / static_cast<R>(x.numel()));
}

template <typename R>
T<R> Dot(const T<R>& u, const T<R>& v) {
  return Sum(Mul(u, v));
}

template <typename R>
T<R> CosineSimilarity(const T<R>& u, const T<R>& v) {
  TSDC_CHECK(u.numel() == v.numel(), "CosineSimilarity: lengths differ (", u.numel(),
             " vs ", v.numel(), ")");
  double uu = 0.0, vv = 0.0;
  for (R x : u.data()) uu += static_cast<double>(x) * x;
  for (R x : v.data()) vv += static_cast<double>(x) * x;
  if (uu == 0.0 || vv == 0.0) return T<R>::Scalar(R(0));
  T<R> uf = Reshape(u, {u.numel()});
  T<R> vf = Reshape(v, {v.numel()});
  T<R> norms = Mul(Sqrt(Dot(uf, uf)), Sqrt(Dot(vf, vf)));
  return Mul(Dot(uf, vf), Reciprocal(norms));
}

template <typename R>
T<R> Gelu(const T<R>& x) {
  // tanh approximation
  const R c = static_cast<R>(0.7978845608028654);
  T<R> cube = Mul(Mul(x, x), x);
  T<R> inner = Scale(Add(x, Scale(cube, R(0.044715))), c);
  return Mul(Scale(x, R(0.5)), AddScalar(Tanh(inner), R(1)));
}

template <typename R>
T<R> MseLoss(const T<R>& prediction, const T<R>& target) {
  CheckSameShape(prediction, target, "MseLoss");
  T<R> d = Sub(prediction, target);
  return Mean(Mul(d, d));
}

template <typename R>
T<R> CrossEntropy(const T<R>& logits, const std::vector<int>& labels) {
  TSDC_CHECK(logits.rank() == 2, "CrossEntropy expects [batch, classes] logits");
  const std::int64_t batch = logits.dim(0), k = logits.dim(1);
  TSDC_CHECK(batch > 0 && static_cast<std::int64_t>(labels.size()) == batch,
             "CrossEntropy: ", labels.size(), " labels for batch of ", batch);
  std::vector<R> shift(static_cast<std::size_t>(batch * k));
  std::vector<R> onehot(static_cast<std::size_t>(batch * k), R(0));
  auto in = logits.data();
  for (std::int64_t r = 0; r < batch; ++r) {
    TSDC_CHECK(labels[r] >= 0 && labels[r] < k, "label ", labels[r],
               " out of range [0, ", k, ")");
    const R mx = *std::max_element(in.begin() + r * k, in.begin() + (r + 1) * k);
    std::fill(shift.begin() + r * k, shift.begin() + (r + 1) * k, mx);
    onehot[r * k + labels[r]] = R(1);
  }
  T<R> z = Sub(logits, T<R>(logits.shape(), std::move(shift)));
  T<R> lse = Log(SumCols(Exp(z)));
  T<R> log_probs = Sub(z, BroadcastCols(lse, k));
  T<R> picked = Sum(Mul(log_probs, T<R>(logits.shape(), std::move(onehot))));
  return Scale(picked, R(-1) / static_cast<R>(batch));
}

#define TSDC_INSTANTIATE_OPS(R)                                                   \
  template T<R> Add(const T<R>&, const T<R>&);                                    \
  template T<R> Sub(const T<R>&, const T<R>&);                                    \
  template T<R> Mul(const T<R>&, const T<R>&);                                    \
  template T<R> Scale(const T<R>&, R);                                            \
  template T<R> AddScalar(const T<R>&, R);                                        \
  template T<R> Exp(const T<R>&);                                                 \
  template T<R> Log(const T<R>&);                                                 \
  template T<R> Tanh(const T<R>&);                                                \
  template T<R> Sqrt(const T<R>&);                                                \
  template T<R> Reciprocal(const T<R>&);                                          \
  template T<R> ScalarMul(const T<R>&, const T<R>&);                              \
  template T<R> Sum(const T<R>&);                                                 \
  template T<R> BroadcastScalar(const T<R>&, const Shape&);                       \
  template T<R> SumRows(const T<R>&);                                             \
  template T<R> BroadcastRows(const T<R>&, std::int64_t);                         \
  template T<R> SumCols(const T<R>&);                                             \
  template T<R> BroadcastCols(const T<R>&, std::int64_t);                         \
  template T<R> Reshape(const T<R>&, Shape);                                      \
  template T<R> Permute(const T<R>&, const std::vector<int>&);                    \
  template T<R> Gather(const T<R>&, IndexMap, Shape);                             \
  template T<R> ScatterAdd(const T<R>&, IndexMap, Shape);                         \
  template T<R> Narrow(const T<R>&, std::int64_t, Shape);                         \
  template T<R> Embed(const T<R>&, std::int64_t, std::int64_t);                   \
  template T<R> EmbedMany(const std::vector<T<R>>&, const std::vector<std::int64_t>&,      \
                          Shape);                                                         \
  template T<R> ConcatFlat(const std::vector<T<R>>&);                             \
  template T<R> MatMul(const T<R>&, const T<R>&, bool, bool);                     \
  template T<R> Softmax(const T<R>&);                                             \
  template T<R> MovingAverage(const T<R>&, std::int64_t, std::int64_t,            \
                              std::int64_t, std::int64_t, bool);                  \
  template T<R> AvgPool1d(const T<R>&, std::int64_t);                             \
  template T<R> Mean(const T<R>&);                                                \
  template T<R> Dot(const T<R>&, const T<R>&);                                    \
  template T<R> CosineSimilarity(const T<R>&, const T<R>&);                       \
  template T<R> Gelu(const T<R>&);                                                \
  template T<R> MseLoss(const T<R>&, const T<R>&);                                \
  template T<R> CrossEntropy(const T<R>&, const std::vector<int>&);

TSDC_INSTANTIATE_OPS(float)
TSDC_INSTANTIATE_OPS(double)

}  // namespace tsdc

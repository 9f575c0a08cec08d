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

#ifndef TSDC_NUMERICS_AUTODIFF_H_
#define TSDC_NUMERICS_AUTODIFF_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tsdc/error.h"
#include "tsdc/numerics/tape.h"
#include "tsdc/numerics/tensor.h"

namespace tsdc {

struct DifferentiateOptions {
  // Record the backward pass on the active tape so the returned gradients
  // can themselves be differentiated.
  bool create_graph = false;
};

// Gradients of a scalar loss recorded on the active tape with respect to
// `params`. Params that do not influence the loss receive zeros. Only the
// part of the tape that connects params to the loss is replayed.
template <typename Real>
std::vector<BasicTensor<Real>> Differentiate(
    const BasicTensor<Real>& loss, const std::vector<BasicTensor<Real>>& params,
    DifferentiateOptions options = {});

// Accumulates d(loss)/d(leaf) into the grad buffer of every leaf on the
// active tape that requires a gradient.
template <typename Real>
void Backward(const BasicTensor<Real>& loss);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::vector<std::int64_t> coordinates;
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> relative_errors;

  // Fraction of checked coordinates whose relative error is <= tol.
  double FractionWithin(double tol) const;
};

// Compares the float32 reverse-mode gradient of f at `point` with central
// differences of f evaluated in float64. `f` must be callable with both
// Tensor and Tensor64 and return a one-element tensor. An empty
// `coordinates` span checks every coordinate.
template <typename F>
GradientCheckReport GradientCheck(F&& f, const Tensor& point, double epsilon,
                                  std::span<const std::int64_t> coordinates = {}) {
  TSDC_CHECK(epsilon > 0.0, "epsilon must be positive, got ", epsilon);
  std::vector<float> analytic;
  {
    Tape<float> tape;
    TapeScope<float> scope(tape);
    Tensor x = point.Detach();
    x.set_requires_grad(true);
    Tensor loss = f(x);
    TSDC_CHECK(loss.numel() == 1, "objective must be scalar");
    if (!std::isfinite(loss.item())) {
      throw NumericError("gradient check: objective is not finite");
    }
    if (loss.on_tape()) {
      Tensor g = Differentiate<float>(loss, {x})[0];
      analytic.assign(g.data().begin(), g.data().end());
    } else {
      analytic.assign(static_cast<std::size_t>(point.numel()), 0.0f);
    }
  }

  GradientCheckReport report;
  if (coordinates.empty()) {
    for (std::int64_t i = 0; i < point.numel(); ++i) report.coordinates.push_back(i);
  } else {
    report.coordinates.assign(coordinates.begin(), coordinates.end());
  }
  Tensor64 xd = point.Cast<double>();
  auto values = xd.mutable_data();
  for (std::int64_t i : report.coordinates) {
    TSDC_CHECK(i >= 0 && i < point.numel(), "coordinate out of range: ", i);
    const double saved = values[i];
    values[i] = saved + epsilon;
    const double plus = f(xd).item();
    values[i] = saved - epsilon;
    const double minus = f(xd).item();
    values[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("gradient check: objective is not finite near coordinate " +
                         std::to_string(i));
    }
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic[static_cast<std::size_t>(i)];
    const double err = std::abs(a - numeric) / (std::abs(numeric) + 1e-8);
    report.analytic.push_back(a);
    report.numeric.push_back(numeric);
    report.relative_errors.push_back(err);
    report.max_relative_error = std::max(report.max_relative_error, err);
  }
  return report;
}

// Max over coordinates of |analytic - central difference| /
// (|central difference| + 1e-8).
template <typename F>
double FiniteDifferenceCheck(F&& f, const Tensor& point, double epsilon) {
  return GradientCheck(std::forward<F>(f), point, epsilon).max_relative_error;
}

}  // namespace tsdc

#endif  // TSDC_NUMERICS_AUTODIFF_H_

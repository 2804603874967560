/*
 *  Copyright 2026 The FedAwS Simulator Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include "fedaws/math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedaws/error.hpp"

namespace fedaws {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a) + " vs " + std::to_string(b));
  }
}

// Dot2 (Ogita, Rump, Oishi): error-free products and sums, result as if
// accumulated in twice the working precision.
double compensated_dot(std::span<const double> u, std::span<const double> v) {
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = u[i] * v[i];
    const double p_err = std::fma(u[i], v[i], -p);
    const double t = sum + p;
    const double z = t - sum;
    const double s_err = (sum - (t - z)) + (p - z);
    sum = t;
    carry += p_err + s_err;
  }
  return sum + carry;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch,
                "matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " given " + std::to_string(values_.size()) + " values");
  }
}

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t d = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n * d);
  for (const auto& r : rows) {
    require_same_dim(r.size(), d);
    values.insert(values.end(), r.begin(), r.end());
  }
  return DenseMatrix(n, d, std::move(values));
}

double dot(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u.size(), v.size());
  if (u.size() >= kCompensatedDotThreshold) return compensated_dot(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

DenseVector normalize(std::span<const double> v) {
  DenseVector out(v);
  normalize_in_place(out.span());
  return out;
}

void normalize_in_place(std::span<double> v) {
  const double n = norm2(v);
  if (!(n > kNormTolerance)) {
    throw Error(ErrorCode::kZeroNorm, "norm " + std::to_string(n));
  }
  for (double& x : v) x /= n;
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u.size(), v.size());
  if (!is_unit(u) || !is_unit(v)) {
    throw Error(ErrorCode::kNotNormalized, "cosine distance of non-unit input");
  }
  return std::clamp(1.0 - dot(u, v), 0.0, 2.0);
}

double chord_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u.size(), v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double diff = u[i] - v[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_dim(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

bool is_unit(std::span<const double> v, double tol) {
  return std::abs(norm2(v) - 1.0) <= tol;
}

}  // namespace fedaws

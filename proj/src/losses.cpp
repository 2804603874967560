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

#include "fedaws/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedaws/error.hpp"

namespace fedaws {

namespace {

double sq(double x) { return x * x; }
double hinge(double x) { return x > 0.0 ? x : 0.0; }

double round_to_pico(double x) { return std::round(x * 1e12) / 1e12; }

}  // namespace

Margin::Margin(double nu) : nu_(nu) {
  if (!(nu > 0.0 && nu < 2.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "margin must lie in (0, 2), got " + std::to_string(nu));
  }
}

void Margin::require_theory_range() const {
  if (!in_theory_range()) {
    throw Error(ErrorCode::kMarginOutOfTheoryRange,
                "margin must lie in (1, 2), got " + std::to_string(nu_));
  }
}

void require_class(std::size_t y, std::size_t classes) {
  if (y >= classes) {
    throw Error(ErrorCode::kClassOutOfRange,
                "class " + std::to_string(y) + " with " +
                    std::to_string(classes) + " classes");
  }
}

double contrastive_loss(double dist_to_pos,
                        std::span<const double> dists_to_negs, double alpha,
                        double beta, const Margin& nu) {
  double neg = 0.0;
  for (double d : dists_to_negs) neg += sq(hinge(nu.value() - d));
  return alpha * sq(dist_to_pos) + beta * neg;
}

ScalarLoss pos_hinge_loss(double s_y, double margin) {
  const double gap = hinge(margin - s_y);
  return {sq(gap), -2.0 * gap};
}

double ccl_loss(const LogitVector& s, ClassId y, const Margin& nu) {
  require_class(y, s.size());
  double value = sq(1.0 - s[y]);
  for (std::size_t c = 0; c < s.size(); ++c) {
    if (c != y) value += sq(hinge(nu.value() - 1.0 + s[c]));
  }
  return value;
}

VectorLoss ccl_loss_with_gradient(const LogitVector& s, ClassId y,
                                  const Margin& nu) {
  require_class(y, s.size());
  VectorLoss out{0.0, LogitVector(s.size())};
  out.value = sq(1.0 - s[y]);
  out.gradient[y] = -2.0 * (1.0 - s[y]);
  for (std::size_t c = 0; c < s.size(); ++c) {
    if (c == y) continue;
    const double h = hinge(nu.value() - 1.0 + s[c]);
    out.value += sq(h);
    out.gradient[c] = 2.0 * h;
  }
  return out;
}

double lsp_loss(double s_y, const ClassEmbeddingMatrix& w, ClassId y,
                const Margin& nu) {
  require_class(y, w.classes());
  double value = sq(1.0 - s_y);
  for (std::size_t c = 0; c < w.classes(); ++c) {
    if (c != y) value += sq(hinge(nu.value() - 1.0 + dot(w.row(y), w.row(c))));
  }
  return value;
}

LspGradient lsp_loss_with_gradient(double s_y, const ClassEmbeddingMatrix& w,
                                   ClassId y, const Margin& nu) {
  require_class(y, w.classes());
  LspGradient out;
  out.d_w = DenseMatrix(w.classes(), w.dim());
  out.value = sq(1.0 - s_y);
  out.d_sy = -2.0 * (1.0 - s_y);
  for (std::size_t c = 0; c < w.classes(); ++c) {
    if (c == y) continue;
    const double h = hinge(nu.value() - 1.0 + dot(w.row(y), w.row(c)));
    out.value += sq(h);
    if (h == 0.0) continue;
    axpy(2.0 * h, w.row(c), out.d_w.row(y));
    axpy(2.0 * h, w.row(y), out.d_w.row(c));
  }
  return out;
}

VectorLoss softmax_xent(const LogitVector& s, ClassId y, double temperature) {
  require_class(y, s.size());
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  }
  const double top = *std::max_element(s.begin(), s.end()) / temperature;
  double total = 0.0;
  LogitVector p(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    p[c] = std::exp(s[c] / temperature - top);
    total += p[c];
  }
  VectorLoss out;
  out.value = -(s[y] / temperature - top - std::log(total));
  out.gradient = LogitVector(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    const double target = c == y ? 1.0 : 0.0;
    out.gradient[c] = (p[c] / total - target) / temperature;
  }
  return out;
}

bool in_top1(const LogitVector& s, ClassId y) {
  require_class(y, s.size());
  const double top = *std::max_element(s.begin(), s.end());
  return round_to_pico(s[y]) >= round_to_pico(top);
}

SurrogateGap surrogate_gap(const LogitVector& s, ClassId y, const Margin& nu) {
  nu.require_theory_range();
  SurrogateGap gap;
  gap.lhs = ccl_loss(s, y, nu);
  gap.rhs = in_top1(s, y) ? 0.0 : 2.0 * (nu.value() - 1.0);
  return gap;
}

}  // namespace fedaws

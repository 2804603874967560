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

#pragma once

#include <span>

#include "fedaws/math.hpp"
#include "fedaws/model.hpp"

namespace fedaws {

// Contrastive margin nu. Valid margins lie in (0, 2); the surrogate and
// approximation bounds additionally need nu in (1, 2).
class Margin {
 public:
  static constexpr double kDefault = 1.5;

  // Throws kInvalidArgument outside (0, 2).
  explicit Margin(double nu = kDefault);

  double value() const noexcept { return nu_; }
  bool in_theory_range() const noexcept { return nu_ > 1.0 && nu_ < 2.0; }
  // Throws kMarginOutOfTheoryRange unless nu is in (1, 2).
  void require_theory_range() const;

 private:
  double nu_;
};

// Positive-pair margin for the client hinge loss.
inline constexpr double kDefaultPositiveMargin = 0.9;

struct ScalarLoss {
  double value = 0.0;
  double derivative = 0.0;
};

struct VectorLoss {
  double value = 0.0;
  LogitVector gradient;  // with respect to the logits
};

// alpha * d_pos^2 + beta * sum_c max(0, nu - d_c)^2
double contrastive_loss(double dist_to_pos, std::span<const double> dists_to_negs,
                        double alpha, double beta, const Margin& nu);

// max(0, m - s_y)^2 and its derivative in s_y; zero at the kink.
ScalarLoss pos_hinge_loss(double s_y, double margin = kDefaultPositiveMargin);

// Cosine contrastive loss over logits:
// (1 - s_y)^2 + sum_{c != y} max(0, nu - 1 + s_c)^2
double ccl_loss(const LogitVector& s, ClassId y, const Margin& nu);
VectorLoss ccl_loss_with_gradient(const LogitVector& s, ClassId y,
                                  const Margin& nu);

// Loss whose negative part depends only on class geometry:
// (1 - s_y)^2 + sum_{c != y} max(0, nu - 1 + w_y . w_c)^2
double lsp_loss(double s_y, const ClassEmbeddingMatrix& w, ClassId y,
                const Margin& nu);

struct LspGradient {
  double value = 0.0;
  double d_sy = 0.0;
  DenseMatrix d_w;  // treating every row of W as a free variable
};
LspGradient lsp_loss_with_gradient(double s_y, const ClassEmbeddingMatrix& w,
                                   ClassId y, const Margin& nu);

// -log softmax(s / temperature)_y with max subtraction.
VectorLoss softmax_xent(const LogitVector& s, ClassId y,
                        double temperature = 1.0);

// y is in Top1 when s_y equals the maximum logit after rounding both to
// 1e-12; ties therefore count as correct.
bool in_top1(const LogitVector& s, ClassId y);

struct SurrogateGap {
  double lhs = 0.0;  // ccl loss
  double rhs = 0.0;  // 2 (nu - 1) [y not in Top1]
};
// Throws kMarginOutOfTheoryRange unless nu is in (1, 2).
SurrogateGap surrogate_gap(const LogitVector& s, ClassId y, const Margin& nu);

void require_class(std::size_t y, std::size_t classes);

}  // namespace fedaws

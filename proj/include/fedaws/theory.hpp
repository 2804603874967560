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

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "fedaws/data_io.hpp"
#include "fedaws/losses.hpp"
#include "fedaws/metrics.hpp"
#include "fedaws/model.hpp"
#include "fedaws/rng.hpp"
#include "fedaws/state.hpp"

namespace fedaws {

// Numerical certification of the surrogate, equality and approximation
// bounds relating the FedAwS objective to the cosine contrastive loss. Each
// sweep reports its worst slack (bound minus value); a negative slack beyond
// kInequalitySlack is a violation and indicates a bug.

struct SweepReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;

  bool ok() const noexcept { return violations == 0; }
};

// ccl >= 2 (nu - 1) [y not in Top1] over random logits in [-1, 1]^C, with a
// share of adversarial draws (ties, all-equal, y at the max, and the
// near-tight two-class point). nu is drawn per trial unless fixed.
SweepReport check_lemma2(std::size_t trials, Rng& rng,
                         std::optional<Margin> nu = std::nullopt);

struct Thm4Term {
  double gap = 0.0;    // |lsp - ccl|
  double bound = 0.0;  // (1 + 2 nu) sum_{c != y} |w_c . (w_y - g)|
};
Thm4Term thm4_term(std::span<const double> g, const ClassEmbeddingMatrix& w,
                   ClassId y, const Margin& nu);
// Per-instance check over a dataset under a fixed model.
SweepReport check_thm4(const EmbedderParams& theta,
                       const ClassEmbeddingMatrix& w,
                       const LabeledDataset& data, const Margin& nu);
// Random model/data draws, each checked on every instance.
SweepReport sweep_thm4(std::size_t draws, Rng& rng);

// |max(0, a + b)^2 - max(0, a)^2| <= (1 + 2 nu) |b| with a = nu - 1 + s_c and
// a + b = nu - 1 + w_y . w_c, split into the four sign cases of a and a + b.
struct Claim5Case {
  std::size_t hits = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;         // against (1 + 2 nu) |b|
  double worst_slack_loose = 0.0;   // against 2 (1 + 2 nu) |b|
};
struct Claim5Report {
  std::array<Claim5Case, 4> cases{};

  bool ok() const noexcept;
};
// Case index (0-3) for a pair, or -1 on a sign boundary.
int claim5_case(double a, double b) noexcept;
// Stratified: trials / 4 draws per case.
Claim5Report check_claim5(std::size_t trials, Rng& rng);

struct Prop3Result {
  double lhs = 0.0;  // sum_i (n_i/n) Rpos_i + (1/C) reg_sp(W, nu)
  double rhs = 0.0;  // (1/n) sum lsp
  double gap = 0.0;
};
inline constexpr double kEqualityTolerance = 1e-9;
// Positive loss (1 - s_y)^2. Throws kUnbalancedShards unless every class
// has the same number of instances.
Prop3Result check_prop3(const EmbedderParams& theta,
                        const ClassEmbeddingMatrix& w,
                        const LabeledDataset& data, const Margin& nu);
// Random balanced toy problems; worst_slack is tolerance minus worst gap.
SweepReport sweep_prop3(std::size_t draws, Rng& rng);

struct Prop1Sweep {
  SweepReport report;
  std::size_t vacuous = 0;
  std::size_t skipped = 0;  // rho == 0 draws
};
// Random models with embeddings ranging from untrained to tightly
// clustered around their class rows.
Prop1Sweep sweep_prop1(std::size_t draws, Rng& rng);

}  // namespace fedaws

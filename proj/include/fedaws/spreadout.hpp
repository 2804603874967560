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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedaws/losses.hpp"
#include "fedaws/model.hpp"
#include "fedaws/rng.hpp"

namespace fedaws {

// Class geometry regularizers. Gradients treat every row of W as a free
// variable; callers re-normalize after stepping.

// sum_c sum_{c' != c} max(0, nu - d_cos(w_c, w_c'))^2 over ordered pairs, so
// each unordered pair contributes twice.
double reg_sp(const ClassEmbeddingMatrix& w, const Margin& nu);
DenseMatrix grad_reg_sp(const ClassEmbeddingMatrix& w, const Margin& nu);

// The k classes closest to c in cosine distance, ascending by
// (distance, class id). Throws kKTooLarge when k > C - 1.
std::vector<ClassId> nearest_classes(const ClassEmbeddingMatrix& w, ClassId c,
                                     std::size_t k);
// Same ordering, restricted to `candidates` (c itself is skipped).
std::vector<ClassId> nearest_classes(const ClassEmbeddingMatrix& w, ClassId c,
                                     std::span<const ClassId> candidates,
                                     std::size_t k);

// Mined regularizer: sum over active c of -d_cos(w_c, w_y)^2 for the k
// nearest candidates y. Non-positive; minimizing pushes mined pairs apart.
double reg_sp_top(const ClassEmbeddingMatrix& w, std::span<const ClassId> active,
                  std::span<const ClassId> candidates, std::size_t k);
// Gradient with the mined neighbor sets held fixed.
DenseMatrix grad_reg_sp_top(const ClassEmbeddingMatrix& w,
                            std::span<const ClassId> active,
                            std::span<const ClassId> candidates, std::size_t k);

struct MiningConfig {
  static constexpr std::size_t kDefaultCandidates = 4096;

  std::size_t k = 10;
  std::size_t candidate_set_size = kDefaultCandidates;

  // Throws kKTooLarge unless 1 <= k <= C - 1 and k <= candidates.
  void validate(std::size_t classes) const;
};

// Every class when C <= candidate_set_size, else a sorted uniform sample.
std::vector<ClassId> choose_candidates(std::size_t classes,
                                       const MiningConfig& config, Rng& rng);

}  // namespace fedaws

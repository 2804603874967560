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

#include "fedaws/spreadout.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "fedaws/error.hpp"

namespace fedaws {

namespace {

double hinge(double x) { return x > 0.0 ? x : 0.0; }

// 1 - u.v without the unit-norm precondition check; rows of a
// ClassEmbeddingMatrix are unit by construction.
double row_distance(const ClassEmbeddingMatrix& w, std::size_t a,
                    std::size_t b) {
  return std::clamp(1.0 - dot(w.row(a), w.row(b)), 0.0, 2.0);
}

struct Neighbor {
  double distance;
  ClassId id;
  bool operator<(const Neighbor& o) const {
    return distance != o.distance ? distance < o.distance : id < o.id;
  }
};

void check_ids(const ClassEmbeddingMatrix& w, std::span<const ClassId> ids) {
  for (ClassId id : ids) require_class(id, w.classes());
}

}  // namespace

double reg_sp(const ClassEmbeddingMatrix& w, const Margin& nu) {
  double total = 0.0;
  for (std::size_t c = 0; c < w.classes(); ++c) {
    for (std::size_t other = 0; other < w.classes(); ++other) {
      if (other == c) continue;
      const double h = hinge(nu.value() - 1.0 + dot(w.row(c), w.row(other)));
      total += h * h;
    }
  }
  return total;
}

DenseMatrix grad_reg_sp(const ClassEmbeddingMatrix& w, const Margin& nu) {
  DenseMatrix grad(w.classes(), w.dim());
  for (std::size_t c = 0; c < w.classes(); ++c) {
    for (std::size_t other = c + 1; other < w.classes(); ++other) {
      const double h = hinge(nu.value() - 1.0 + dot(w.row(c), w.row(other)));
      if (h == 0.0) continue;
      // (c, other) and (other, c) each contribute 2h to both rows.
      axpy(4.0 * h, w.row(other), grad.row(c));
      axpy(4.0 * h, w.row(c), grad.row(other));
    }
  }
  return grad;
}

std::vector<ClassId> nearest_classes(const ClassEmbeddingMatrix& w, ClassId c,
                                     std::span<const ClassId> candidates,
                                     std::size_t k) {
  require_class(c, w.classes());
  check_ids(w, candidates);
  std::vector<Neighbor> pool;
  pool.reserve(candidates.size());
  for (ClassId y : candidates) {
    if (y != c) pool.push_back({row_distance(w, c, y), y});
  }
  if (k > pool.size()) {
    throw Error(ErrorCode::kKTooLarge,
                "k=" + std::to_string(k) + " with " +
                    std::to_string(pool.size()) + " eligible neighbors");
  }
  const auto mid = pool.begin() + static_cast<std::ptrdiff_t>(k);
  std::partial_sort(pool.begin(), mid, pool.end());
  std::vector<ClassId> out;
  out.reserve(k);
  for (auto it = pool.begin(); it != mid; ++it) out.push_back(it->id);
  return out;
}

std::vector<ClassId> nearest_classes(const ClassEmbeddingMatrix& w, ClassId c,
                                     std::size_t k) {
  std::vector<ClassId> all(w.classes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<ClassId>(i);
  return nearest_classes(w, c, all, k);
}

double reg_sp_top(const ClassEmbeddingMatrix& w, std::span<const ClassId> active,
                  std::span<const ClassId> candidates, std::size_t k) {
  check_ids(w, active);
  double total = 0.0;
  for (ClassId c : active) {
    for (ClassId y : nearest_classes(w, c, candidates, k)) {
      const double d = row_distance(w, c, y);
      total -= d * d;
    }
  }
  return total;
}

DenseMatrix grad_reg_sp_top(const ClassEmbeddingMatrix& w,
                            std::span<const ClassId> active,
                            std::span<const ClassId> candidates,
                            std::size_t k) {
  check_ids(w, active);
  DenseMatrix grad(w.classes(), w.dim());
  for (ClassId c : active) {
    for (ClassId y : nearest_classes(w, c, candidates, k)) {
      // d/dw_c of -(1 - w_c.w_y)^2 = 2 (1 - w_c.w_y) w_y, symmetric in y.
      const double d = 1.0 - dot(w.row(c), w.row(y));
      axpy(2.0 * d, w.row(y), grad.row(c));
      axpy(2.0 * d, w.row(c), grad.row(y));
    }
  }
  return grad;
}

void MiningConfig::validate(std::size_t classes) const {
  if (k < 1 || k + 1 > classes) {
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " with " +
                                           std::to_string(classes) +
                                           " classes");
  }
  if (k > candidate_set_size) {
    throw Error(ErrorCode::kKTooLarge, "k exceeds candidate set size");
  }
}

std::vector<ClassId> choose_candidates(std::size_t classes,
                                       const MiningConfig& config, Rng& rng) {
  std::vector<ClassId> out;
  if (classes <= config.candidate_set_size) {
    out.resize(classes);
    for (std::size_t i = 0; i < classes; ++i) out[i] = static_cast<ClassId>(i);
    return out;
  }
  for (std::size_t id :
       sample_without_replacement(rng, classes, config.candidate_set_size)) {
    out.push_back(static_cast<ClassId>(id));
  }
  return out;
}

}  // namespace fedaws

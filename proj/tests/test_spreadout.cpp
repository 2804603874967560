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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fedaws/error.hpp"
#include "fedaws/metrics.hpp"
#include "fedaws/spreadout.hpp"
#include "oracles.hpp"

using namespace fedaws;

namespace {

std::vector<ClassId> all_classes(std::size_t n) {
  std::vector<ClassId> ids(n);
  std::iota(ids.begin(), ids.end(), ClassId{0});
  return ids;
}

ClassEmbeddingMatrix near_collapsed(std::size_t classes, std::size_t dim,
                                    double spread, Rng& rng) {
  DenseVector base(dim);
  for (double& x : base) x = rng.gaussian();
  DenseMatrix m(classes, dim);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < dim; ++i) m(c, i) = base[i] + spread * rng.gaussian();
  }
  return ClassEmbeddingMatrix(std::move(m));
}

// Smallest gap between the k-th and (k+1)-th candidate distance over every
// active class; mining is unstable below 1e-3.
double mining_margin(const ClassEmbeddingMatrix& w, std::span<const ClassId> active,
                     std::span<const ClassId> candidates, std::size_t k) {
  const auto rows = oracle::rows_of(w);
  double margin = 2.0;
  for (ClassId c : active) {
    std::vector<double> d;
    for (ClassId y : candidates) {
      if (y != c) d.push_back(oracle::cos_dist(rows[c], rows[y]));
    }
    std::sort(d.begin(), d.end());
    if (k < d.size()) margin = std::min(margin, d[k] - d[k - 1]);
  }
  return margin;
}

}  // namespace

TEST_CASE("reg_sp examples") {
  const Margin one(1.0);
  Rng rng(1);
  const auto single = ClassEmbeddingMatrix::random(1, 3, rng);
  CHECK(reg_sp(single, one) == 0.0);
  const ClassEmbeddingMatrix twin(DenseMatrix::from_rows({{0.0, 1.0}, {0.0, 1.0}}));
  CHECK(reg_sp(twin, one) == 2.0);
  const ClassEmbeddingMatrix ortho(DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  CHECK(reg_sp(ortho, one) == 0.0);
  const auto zero = grad_reg_sp(ortho, one);
  for (double v : zero.data()) CHECK(v == 0.0);
  const auto g = grad_reg_sp(twin, one);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == 4.0);
  CHECK(g(1, 1) == 4.0);
}

TEST_CASE("reg_sp matches the pairwise oracle and vanishes exactly when spread") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto w = ClassEmbeddingMatrix::random(2 + rng.uniform_index(8), 2 + rng.uniform_index(4), rng);
    const Margin nu(rng.uniform(0.1, 1.9));
    const double value = reg_sp(w, nu);
    CHECK(std::abs(value - oracle::reg_sp(oracle::rows_of(w), nu.value())) <= 1e-12);
    bool all_spread = true;
    for (std::size_t a = 0; a < w.classes(); ++a) {
      for (std::size_t b = a + 1; b < w.classes(); ++b) {
        if (cosine_distance(w.row(a), w.row(b)) < nu.value()) all_spread = false;
      }
    }
    CHECK((value == 0.0) == all_spread);
  }
}

TEST_CASE("reg_sp is invariant under row permutation") {
  Rng rng(3);
  const auto w = ClassEmbeddingMatrix::random(7, 4, rng);
  DenseMatrix permuted(7, 4);
  const std::vector<std::size_t> order{3, 0, 6, 1, 5, 2, 4};
  for (std::size_t c = 0; c < 7; ++c) {
    std::copy(w.row(order[c]).begin(), w.row(order[c]).end(), permuted.row(c).begin());
  }
  const Margin nu(1.3);
  CHECK(reg_sp(ClassEmbeddingMatrix(permuted), nu) == doctest::Approx(reg_sp(w, nu)).epsilon(1e-14));
}

TEST_CASE("grad_reg_sp matches central differences") {
  Rng rng(4);
  int checked = 0;
  while (checked < 20) {
    const auto w = ClassEmbeddingMatrix::random(2 + rng.uniform_index(6), 3, rng);
    const Margin nu(rng.uniform(0.5, 1.9));
    const auto rows = oracle::rows_of(w);
    bool kink = false;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        if (std::abs(nu.value() - 1.0 + oracle::dot(rows[a], rows[b])) < 1e-3) kink = true;
      }
    }
    if (kink) continue;
    const auto numeric = oracle::central_difference(
        [&](const oracle::Vec& x) { return oracle::reg_sp(oracle::reshape(x, w.classes(), 3), nu.value()); },
        oracle::flat(rows), 1e-6);
    CHECK(oracle::relative_error(grad_reg_sp(w, nu).data(), numeric) <= 1e-4);
    ++checked;
  }
}

TEST_CASE("a small step from near-collapse raises the minimum distance") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    auto w = near_collapsed(2 + rng.uniform_index(6), 4, 1e-3, rng);
    const double before = min_pairwise_cosine(w);
    w.descend(grad_reg_sp(w, Margin(1.0)), 0.01);
    CHECK(min_pairwise_cosine(w) > before);
  }
}

TEST_CASE("nearest_classes examples") {
  const ClassEmbeddingMatrix w(DenseMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}));
  CHECK(nearest_classes(w, 0, 1) == std::vector<ClassId>{1});
  CHECK(nearest_classes(w, 0, 2) == std::vector<ClassId>{1, 2});
  CHECK_THROWS_AS(nearest_classes(w, 0, 3), Error);
  // ties go to the smaller id
  const ClassEmbeddingMatrix tied(DenseMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}));
  CHECK(nearest_classes(tied, 0, 1) == std::vector<ClassId>{1});
}

TEST_CASE("nearest_classes agrees with a full sort") {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    const std::size_t classes = 2 + rng.uniform_index(40);
    const auto w = ClassEmbeddingMatrix::random(classes, 3, rng);
    const auto rows = oracle::rows_of(w);
    const auto c = static_cast<ClassId>(rng.uniform_index(classes));
    const std::size_t k = 1 + rng.uniform_index(classes - 1);
    const auto ids = all_classes(classes);
    CHECK(nearest_classes(w, c, k) == oracle::nearest(rows, c, ids, k));
    CHECK(nearest_classes(w, c, k) == nearest_classes(w, c, k));
  }
}

TEST_CASE("reg_sp_top examples") {
  const ClassEmbeddingMatrix anti(DenseMatrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}}));
  const auto ids = all_classes(2);
  CHECK(reg_sp_top(anti, ids, ids, 1) == -8.0);
  CHECK(reg_sp_top(anti, std::vector<ClassId>{1}, ids, 1) == -4.0);
  CHECK(reg_sp_top(anti, {}, ids, 1) == 0.0);
  const auto zero = grad_reg_sp_top(anti, {}, ids, 1);
  for (double v : zero.data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(reg_sp_top(anti, ids, ids, 2), Error);
}

TEST_CASE("reg_sp_top single active class by hand") {
  // active {0}, candidates {0, 1}, k = 1: value -(1 - w0.w1)^2.
  const ClassEmbeddingMatrix w(DenseMatrix::from_rows({{1.0, 0.0}, {0.6, 0.8}}));
  const std::vector<ClassId> active{0}, candidates{0, 1};
  CHECK(reg_sp_top(w, active, candidates, 1) == doctest::Approx(-0.16).epsilon(1e-14));
  const auto g = grad_reg_sp_top(w, active, candidates, 1);
  // d/dw0 = 2 d w1, d/dw1 = 2 d w0 with d = 0.4
  CHECK(g(0, 0) == doctest::Approx(0.48).epsilon(1e-14));
  CHECK(g(0, 1) == doctest::Approx(0.64).epsilon(1e-14));
  CHECK(g(1, 0) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(g(1, 1) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("reg_sp_top matches mine-then-sum") {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t classes = 4 + rng.uniform_index(10);
    const auto w = ClassEmbeddingMatrix::random(classes, 4, rng);
    auto active = sample_without_replacement(rng, classes, 4);
    std::vector<ClassId> act(active.begin(), active.end());
    const auto candidates = all_classes(classes);
    const auto mined = oracle::mine(oracle::rows_of(w), act, candidates, 2);
    CHECK(std::abs(reg_sp_top(w, act, candidates, 2) -
                   oracle::reg_sp_top(oracle::rows_of(w), mined)) <= 1e-12);
    CHECK(reg_sp_top(w, act, candidates, 2) <= 0.0);
  }
}

TEST_CASE("reg_sp_top with every class mined equals the all-pairs sum") {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const std::size_t classes = 2 + rng.uniform_index(10);
    const auto w = ClassEmbeddingMatrix::random(classes, 5, rng);
    const auto ids = all_classes(classes);
    double expect = 0.0;
    for (ClassId c : ids) {
      for (ClassId y : ids) {
        if (c == y) continue;
        const double d = cosine_distance(w.row(c), w.row(y));
        expect -= d * d;
      }
    }
    CHECK(std::abs(reg_sp_top(w, ids, ids, classes - 1) - expect) <= 1e-12);
  }
}

TEST_CASE("grad_reg_sp_top matches central differences away from ties") {
  Rng rng(9);
  int checked = 0;
  while (checked < 20) {
    const std::size_t classes = 4 + rng.uniform_index(6);
    const auto w = ClassEmbeddingMatrix::random(classes, 3, rng);
    const auto sample = sample_without_replacement(rng, classes, 3);
    const std::vector<ClassId> active(sample.begin(), sample.end());
    const auto candidates = all_classes(classes);
    const std::size_t k = 1 + rng.uniform_index(2);
    if (mining_margin(w, active, candidates, k) < 1e-3) continue;
    const auto mined = oracle::mine(oracle::rows_of(w), active, candidates, k);
    const auto numeric = oracle::central_difference(
        [&](const oracle::Vec& x) {
          return oracle::reg_sp_top(oracle::reshape(x, classes, 3), mined);
        },
        oracle::flat(oracle::rows_of(w)), 1e-6);
    const auto g = grad_reg_sp_top(w, active, candidates, k);
    CHECK(oracle::relative_error(g.data(), numeric) <= 1e-4);
    for (std::size_t c = 0; c < classes; ++c) {
      bool touched = std::count(active.begin(), active.end(), c) > 0;
      for (const auto& [a, ys] : mined) touched |= std::count(ys.begin(), ys.end(), c) > 0;
      if (!touched) {
        for (double v : g.row(c)) CHECK(v == 0.0);
      }
    }
    ++checked;
  }
}

TEST_CASE("mining config and candidates") {
  CHECK_NOTHROW((MiningConfig{3, 10}.validate(4)));
  CHECK_THROWS_AS((MiningConfig{4, 10}.validate(4)), Error);
  CHECK_THROWS_AS((MiningConfig{0, 10}.validate(4)), Error);
  CHECK_THROWS_AS((MiningConfig{3, 2}.validate(4)), Error);
  Rng rng(10);
  CHECK(choose_candidates(6, MiningConfig{2, 4096}, rng) == all_classes(6));
  const auto sampled = choose_candidates(50, MiningConfig{2, 8}, rng);
  CHECK(sampled.size() == 8);
  CHECK(std::is_sorted(sampled.begin(), sampled.end()));
}

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

#include "fedaws/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedaws/error.hpp"
#include "fedaws/spreadout.hpp"

namespace fedaws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double x) { return x * x; }
double hinge(double x) { return x > 0.0 ? x : 0.0; }

// nu uniform in the open interval (1, 2).
double draw_theory_margin(Rng& rng) {
  double nu = 1.0;
  while (!(nu > 1.0 && nu < 2.0)) nu = 1.0 + rng.uniform();
  return nu;
}

std::size_t draw_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform_index(hi - lo + 1));
}

DenseVector random_unit(std::size_t dim, Rng& rng) {
  DenseVector v(dim);
  do {
    for (double& x : v) x = rng.gaussian();
  } while (norm2(v) <= 1e-6);
  normalize_in_place(v.span());
  return v;
}

DenseVector perturb(std::span<const double> center, double sigma, Rng& rng) {
  DenseVector v(center);
  for (double& x : v) x += sigma * rng.gaussian();
  if (norm2(v) <= 1e-6) return random_unit(center.size(), rng);
  normalize_in_place(v.span());
  return v;
}

// A random embedder with nonzero biases, so no draw maps an input to zero.
EmbedderParams random_model(const EmbedderShape& shape, Rng& rng) {
  EmbedderParams theta = init_embedder(shape, rng);
  for (auto& layer : theta.layers) {
    for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  }
  return theta;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

void record(SweepReport& report, double slack, double tolerance) {
  if (report.trials == 0 || slack < report.worst_slack) {
    report.worst_slack = slack;
  }
  ++report.trials;
  if (slack < -tolerance) ++report.violations;
}

}  // namespace

SweepReport check_lemma2(std::size_t trials, Rng& rng,
                         std::optional<Margin> fixed_nu) {
  if (fixed_nu) fixed_nu->require_theory_range();
  SweepReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const Margin nu(fixed_nu ? fixed_nu->value() : draw_theory_margin(rng));
    const std::size_t classes = draw_between(rng, 2, 20);
    LogitVector s(classes);
    for (double& v : s) v = rng.uniform(-1.0, 1.0);
    const auto y = static_cast<ClassId>(rng.uniform_index(classes));
    auto other = static_cast<ClassId>(rng.uniform_index(classes - 1));
    if (other >= y) ++other;
    const double top = *std::max_element(s.begin(), s.end());
    switch (t % 6) {
      case 0:
        break;
      case 1:  // y at the max
        s[y] = top;
        break;
      case 2:  // y tied with another class at the max
        s[y] = top;
        s[other] = top;
        break;
      case 3: {  // all equal
        const double v = rng.uniform(-1.0, 1.0);
        for (double& x : s) x = v;
        break;
      }
      case 4: {  // near the minimizer of the two-class bound
        const double pivot = (2.0 - nu.value()) / 2.0;
        for (double& x : s) x = rng.uniform(-1.0, 1.0 - nu.value());
        s[other] = pivot;
        s[y] = pivot - log_uniform(rng, 1e-9, 1e-2);
        break;
      }
      case 5:  // y just below the max
        s[y] = top - log_uniform(rng, 1e-15, 1e-6);
        if (s[y] < -1.0) s[y] = -1.0;
        break;
    }
    const auto gap = surrogate_gap(s, y, nu);
    record(report, gap.lhs - gap.rhs, kInequalitySlack);
  }
  return report;
}

Thm4Term thm4_term(std::span<const double> g, const ClassEmbeddingMatrix& w,
                   ClassId y, const Margin& nu) {
  require_class(y, w.classes());
  const LogitVector s = score(w, g);
  DenseVector residual(w.row(y));
  axpy(-1.0, g, residual.span());
  double mismatch = 0.0;
  for (std::size_t c = 0; c < w.classes(); ++c) {
    if (c != y) mismatch += std::abs(dot(w.row(c), residual));
  }
  Thm4Term term;
  term.gap = std::abs(lsp_loss(s[y], w, y, nu) - ccl_loss(s, y, nu));
  term.bound = (1.0 + 2.0 * nu.value()) * mismatch;
  return term;
}

SweepReport check_thm4(const EmbedderParams& theta,
                       const ClassEmbeddingMatrix& w,
                       const LabeledDataset& data, const Margin& nu) {
  nu.require_theory_range();
  SweepReport report;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto term =
        thm4_term(embed(theta, data.instances[i]), w, data.labels[i], nu);
    record(report, term.bound - term.gap, kInequalitySlack);
  }
  return report;
}

SweepReport sweep_thm4(std::size_t draws, Rng& rng) {
  SweepReport report;
  for (std::size_t t = 0; t < draws; ++t) {
    const Margin nu(draw_theory_margin(rng));
    const std::size_t classes = draw_between(rng, 2, 12);
    const std::size_t dim = draw_between(rng, 2, 10);
    const auto w = ClassEmbeddingMatrix::random(classes, dim, rng);
    const auto y = static_cast<ClassId>(rng.uniform_index(classes));
    DenseVector g;
    switch (t % 4) {
      case 0:
        g = random_unit(dim, rng);
        break;
      case 1:
        g = DenseVector(w.row(y));
        break;
      case 2:
        g = perturb(w.row(y), log_uniform(rng, 1e-4, 1.0), rng);
        break;
      case 3: {
        const auto z = static_cast<ClassId>(rng.uniform_index(classes));
        g = perturb(w.row(z), log_uniform(rng, 1e-4, 1.0), rng);
        break;
      }
    }
    const auto term = thm4_term(g, w, y, nu);
    record(report, term.bound - term.gap, kInequalitySlack);
  }
  return report;
}

bool Claim5Report::ok() const noexcept {
  return std::all_of(cases.begin(), cases.end(),
                     [](const Claim5Case& c) { return c.violations == 0; });
}

int claim5_case(double a, double b) noexcept {
  const double sum = a + b;
  if (sum < 0.0 && a < 0.0) return 0;
  if (sum > 0.0 && a > 0.0) return 1;
  if (sum > 0.0 && a < 0.0) return 2;
  if (sum < 0.0 && a > 0.0) return 3;
  return -1;
}

Claim5Report check_claim5(std::size_t trials, Rng& rng) {
  Claim5Report report;
  for (auto& c : report.cases) {
    c.worst_slack = kInf;
    c.worst_slack_loose = kInf;
  }
  // a < 0 iff s_c < 1 - nu; a + b < 0 iff w_y.w_c < 1 - nu.
  auto below = [&](double pivot) { return rng.uniform(-1.0, pivot); };
  auto above = [&](double pivot) { return pivot + (1.0 - pivot) * (1.0 - rng.uniform()); };
  for (std::size_t t = 0; t < trials; ++t) {
    const int want = static_cast<int>(t % 4);
    double a = 0.0;
    double b = 0.0;
    double nu = 0.0;
    do {
      nu = draw_theory_margin(rng);
      const double pivot = 1.0 - nu;
      const bool a_negative = want == 0 || want == 2;
      const bool sum_negative = want == 0 || want == 3;
      const double s_c = a_negative ? below(pivot) : above(pivot);
      const double cross = sum_negative ? below(pivot) : above(pivot);
      a = nu - 1.0 + s_c;
      b = cross - s_c;
    } while (claim5_case(a, b) != want);
    const double delta = std::abs(sq(hinge(a + b)) - sq(hinge(a)));
    const double bound = (1.0 + 2.0 * nu) * std::abs(b);
    auto& c = report.cases[static_cast<std::size_t>(want)];
    ++c.hits;
    c.worst_slack = std::min(c.worst_slack, bound - delta);
    c.worst_slack_loose = std::min(c.worst_slack_loose, 2.0 * bound - delta);
    if (bound - delta < -kInequalitySlack) ++c.violations;
  }
  return report;
}

Prop3Result check_prop3(const EmbedderParams& theta,
                        const ClassEmbeddingMatrix& w,
                        const LabeledDataset& data, const Margin& nu) {
  const std::size_t classes = w.classes();
  if (data.size() == 0 || classes == 0) {
    throw Error(ErrorCode::kUnbalancedShards, "empty data");
  }
  std::vector<std::size_t> counts(classes, 0);
  for (ClassId y : data.labels) {
    require_class(y, classes);
    ++counts[y];
  }
  if (std::any_of(counts.begin(), counts.end(),
                  [&](std::size_t n) { return n != counts.front(); })) {
    throw Error(ErrorCode::kUnbalancedShards,
                "every class needs the same instance count");
  }
  const double n = static_cast<double>(data.size());

  // Objective as the server sees it: per-client positive risk plus the
  // regularizer with lambda = 1/C.
  double objective = 0.0;
  for (const auto& shard : shard_by_label(data).shards) {
    double risk = 0.0;
    for (const auto& x : shard.instances) {
      const double s = dot(embed(theta, x), w.row(shard.class_id));
      risk += sq(1.0 - s);
    }
    risk /= static_cast<double>(shard.size());
    objective += static_cast<double>(shard.size()) / n * risk;
  }
  objective += reg_sp(w, nu) / static_cast<double>(classes);

  double empirical = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ClassId y = data.labels[i];
    const double s = dot(embed(theta, data.instances[i]), w.row(y));
    empirical += lsp_loss(s, w, y, nu);
  }
  empirical /= n;
  return {objective, empirical, std::abs(objective - empirical)};
}

SweepReport sweep_prop3(std::size_t draws, Rng& rng) {
  SweepReport report;
  for (std::size_t t = 0; t < draws; ++t) {
    const Margin nu(draw_theory_margin(rng));
    const std::size_t classes = draw_between(rng, 2, 8);
    const std::size_t dim = draw_between(rng, 2, 8);
    const std::size_t per_class = draw_between(rng, 1, 5);
    EmbedderShape shape;
    shape.vocab = 6;
    shape.embed_dim = dim;
    shape.layer_sizes = {8, dim};
    const auto theta = random_model(shape, rng);
    ClassEmbeddingMatrix w = ClassEmbeddingMatrix::random(classes, dim, rng);
    if (t % 4 == 3) {
      DenseMatrix collapsed(classes, dim);
      const DenseVector base = random_unit(dim, rng);
      for (std::size_t c = 0; c < classes; ++c) {
        std::copy(base.begin(), base.end(), collapsed.row(c).begin());
      }
      w = ClassEmbeddingMatrix(std::move(collapsed));
    }
    LabeledDataset data;
    data.classes = classes;
    data.vocab = shape.vocab;
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < per_class; ++j) {
        DenseVector raw(shape.vocab);
        for (double& x : raw) x = rng.uniform(-1.0, 1.0);
        data.instances.push_back(SparseInstance::dense(raw));
        data.labels.push_back(static_cast<ClassId>(c));
      }
    }
    const auto result = check_prop3(theta, w, data, nu);
    record(report, kEqualityTolerance - result.gap, 0.0);
  }
  return report;
}

Prop1Sweep sweep_prop1(std::size_t draws, Rng& rng) {
  Prop1Sweep sweep;
  for (std::size_t t = 0; t < draws; ++t) {
    const std::size_t classes = draw_between(rng, 2, 8);
    const std::size_t dim = draw_between(rng, 2, 8);
    const std::size_t count = draw_between(rng, 20, 60);
    ClassEmbeddingMatrix w = ClassEmbeddingMatrix::random(classes, dim, rng);
    if (t % 5 == 4) {
      // nearly collapsed class rows
      DenseMatrix tight(classes, dim);
      const DenseVector base = random_unit(dim, rng);
      const double spread = log_uniform(rng, 1e-6, 1e-1);
      for (std::size_t c = 0; c < classes; ++c) {
        const DenseVector row = perturb(base, spread, rng);
        std::copy(row.begin(), row.end(), tight.row(c).begin());
      }
      w = ClassEmbeddingMatrix(std::move(tight));
    }
    std::vector<DenseVector> embeddings;
    std::vector<ClassId> labels;
    if (t % 3 == 0) {
      EmbedderShape shape;
      shape.vocab = 5;
      shape.embed_dim = dim;
      shape.layer_sizes = {6, dim};
      const auto theta = random_model(shape, rng);
      for (std::size_t i = 0; i < count; ++i) {
        DenseVector raw(shape.vocab);
        for (double& x : raw) x = rng.uniform(-1.0, 1.0);
        embeddings.push_back(embed(theta, SparseInstance::dense(raw)));
        labels.push_back(static_cast<ClassId>(rng.uniform_index(classes)));
      }
    } else {
      const double sigma = log_uniform(rng, 1e-3, 2.0);
      for (std::size_t i = 0; i < count; ++i) {
        const auto y = static_cast<ClassId>(rng.uniform_index(classes));
        embeddings.push_back(perturb(w.row(y), sigma, rng));
        labels.push_back(y);
      }
    }
    try {
      const auto result = check_prop1(w, embeddings, labels);
      record(sweep.report, result.bound - result.rate, kInequalitySlack);
      if (result.vacuous) ++sweep.vacuous;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRhoZero) throw;
      ++sweep.skipped;
    }
  }
  return sweep;
}

}  // namespace fedaws

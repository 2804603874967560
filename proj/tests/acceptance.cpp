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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails. `--only N` runs one criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedaws/cli.hpp"
#include "fedaws/data_io.hpp"
#include "fedaws/federation.hpp"
#include "fedaws/losses.hpp"
#include "fedaws/metrics.hpp"
#include "fedaws/spreadout.hpp"
#include "fedaws/theory.hpp"
#include "oracles.hpp"

using namespace fedaws;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fedaws_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// The synthetic benchmark: C=10, d'=32, 50 per class, sigma 0.05.
cli::RunConfig benchmark(TrainingMode mode, std::uint64_t seed) {
  cli::RunConfig c;
  c.mode = mode;
  c.synthetic = "C=10,d=32,n=50,sigma=0.05";
  c.rounds = 200;
  c.eta = 0.1;
  c.lambda = 10.0;
  c.k = 5;
  c.seed = seed;
  return c;
}

// Runs through the command layer and returns the metrics CSV text.
std::string run_csv(cli::RunConfig config, const fs::path& out_dir) {
  config.out_dir = out_dir.string();
  std::ostringstream out, err;
  const int code = cli::cmd_run(config, out, err);
  if (code != 0) throw std::runtime_error("run failed: " + err.str());
  return slurp(out_dir / "metrics.csv");
}

MetricsRecord last_record(const std::string& csv) {
  std::istringstream in(csv);
  return read_metrics_csv(in).back();
}

DenseVector random_unit(std::size_t dim, Rng& rng) {
  DenseVector v(dim);
  for (double& x : v) x = rng.gaussian();
  return normalize(v);
}

std::vector<ClassId> all_classes(std::size_t classes) {
  std::vector<ClassId> out(classes);
  std::iota(out.begin(), out.end(), 0u);
  return out;
}

// ---------------------------------------------------------------- 1

Outcome criterion_1() {
  const auto t0 = Clock::now();
  std::ostringstream out, err;
  const int code = cli::cmd_verify(cli::VerifyConfig{}, out, err);
  const double seconds = seconds_since(t0);

  // Every sign case of the claim5 sweep must be hit at least 10^3 times.
  Rng claim5_rng = Rng(0).fork(5);
  const auto claim5 = check_claim5(cli::VerifyConfig{}.claim5_trials, claim5_rng);
  std::size_t min_hits = claim5.cases[0].hits;
  for (const auto& c : claim5.cases) min_hits = std::min(min_hits, c.hits);

  const bool pass = code == 0 && seconds < 60.0 && min_hits >= 1000;
  return {pass, "verify exit=" + std::to_string(code) + " seconds=" + fmt(seconds) +
                    " min_claim5_case_hits=" + std::to_string(min_hits)};
}

// ---------------------------------------------------------------- 2

struct GradientCheck {
  std::string name;
  int points = 0;
  double worst = 0.0;

  void add(double err) {
    ++points;
    worst = std::max(worst, err);
  }
  bool ok() const { return points >= 20 && worst <= 1e-4; }
};

double lsp_free(const oracle::Rows& w, double s_y, std::size_t y, double nu) {
  double total = (1.0 - s_y) * (1.0 - s_y);
  for (std::size_t c = 0; c < w.size(); ++c) {
    if (c == y) continue;
    const double h = std::max(0.0, nu - 1.0 + oracle::dot(w[y], w[c]));
    total += h * h;
  }
  return total;
}

double mining_margin(const ClassEmbeddingMatrix& w, std::span<const ClassId> active,
                     std::size_t k) {
  const auto rows = oracle::rows_of(w);
  double margin = 2.0;
  for (ClassId c : active) {
    std::vector<double> d;
    for (std::size_t y = 0; y < rows.size(); ++y) {
      if (y != c) d.push_back(oracle::cos_dist(rows[c], rows[y]));
    }
    std::sort(d.begin(), d.end());
    if (k < d.size()) margin = std::min(margin, d[k] - d[k - 1]);
  }
  return margin;
}

Outcome criterion_2() {
  constexpr int kPoints = 25;
  constexpr double kKink = 1e-3;
  Rng rng(2024);
  std::vector<GradientCheck> checks;

  {
    GradientCheck g{"pos_hinge"};
    while (g.points < kPoints) {
      const double s = rng.uniform(-1.0, 1.0);
      if (std::abs(s - kDefaultPositiveMargin) < kKink) continue;
      const auto fd = oracle::central_difference(
          [](const oracle::Vec& x) { return pos_hinge_loss(x[0]).value; }, {s}, 1e-6);
      const std::vector<double> analytic{pos_hinge_loss(s).derivative};
      g.add(oracle::relative_error(analytic, fd));
    }
    checks.push_back(g);
  }
  {
    GradientCheck g{"ccl"};
    while (g.points < kPoints) {
      const Margin nu(rng.uniform(1.05, 1.95));
      const std::size_t classes = 2 + rng.uniform_index(6);
      const auto y = static_cast<ClassId>(rng.uniform_index(classes));
      LogitVector s(classes);
      bool near = false;
      for (std::size_t c = 0; c < classes; ++c) {
        s[c] = rng.uniform(-1.0, 1.0);
        near |= c != y && std::abs(nu.value() - 1.0 + s[c]) < kKink;
      }
      if (near) continue;
      const auto fd = oracle::central_difference(
          [&](const oracle::Vec& x) { return ccl_loss(LogitVector(x), y, nu); },
          s.values(), 1e-6);
      g.add(oracle::relative_error(ccl_loss_with_gradient(s, y, nu).gradient.values(), fd));
    }
    checks.push_back(g);
  }
  {
    GradientCheck g{"lsp"};
    while (g.points < kPoints) {
      const double nu = rng.uniform(1.05, 1.95);
      const std::size_t classes = 2 + rng.uniform_index(5);
      const auto y = static_cast<std::size_t>(rng.uniform_index(classes));
      const auto w = ClassEmbeddingMatrix::random(classes, 3, rng);
      const auto rows = oracle::rows_of(w);
      bool near = false;
      for (std::size_t c = 0; c < classes; ++c) {
        near |= c != y && std::abs(nu - 1.0 + oracle::dot(rows[y], rows[c])) < kKink;
      }
      if (near) continue;
      const double s_y = rng.uniform(-1.0, 1.0);
      const auto grad = lsp_loss_with_gradient(s_y, w, static_cast<ClassId>(y), Margin(nu));
      auto analytic = std::vector<double>{grad.d_sy};
      analytic.insert(analytic.end(), grad.d_w.data().begin(), grad.d_w.data().end());
      oracle::Vec point{s_y};
      const auto flat = oracle::flat(rows);
      point.insert(point.end(), flat.begin(), flat.end());
      const auto fd = oracle::central_difference(
          [&](const oracle::Vec& x) {
            const std::vector<double> tail(x.begin() + 1, x.end());
            return lsp_free(oracle::reshape(tail, classes, 3), x[0], y, nu);
          },
          point, 1e-6);
      g.add(oracle::relative_error(analytic, fd));
    }
    checks.push_back(g);
  }
  {
    GradientCheck g{"softmax"};
    while (g.points < kPoints) {
      const std::size_t classes = 2 + rng.uniform_index(8);
      const auto y = static_cast<ClassId>(rng.uniform_index(classes));
      LogitVector s(classes);
      for (double& v : s) v = rng.uniform(-1.0, 1.0);
      const double t = rng.uniform() < 0.5 ? 0.1 : 1.0;
      const auto fd = oracle::central_difference(
          [&](const oracle::Vec& x) { return softmax_xent(LogitVector(x), y, t).value; },
          s.values(), 1e-6);
      g.add(oracle::relative_error(softmax_xent(s, y, t).gradient.values(), fd));
    }
    checks.push_back(g);
  }
  {
    GradientCheck g{"reg_sp"};
    while (g.points < kPoints) {
      const double nu = rng.uniform(1.05, 1.95);
      const std::size_t classes = 2 + rng.uniform_index(5);
      const auto w = ClassEmbeddingMatrix::random(classes, 3, rng);
      const auto rows = oracle::rows_of(w);
      bool near = false;
      for (std::size_t a = 0; a < classes; ++a) {
        for (std::size_t b = a + 1; b < classes; ++b) {
          near |= std::abs(nu - 1.0 + oracle::dot(rows[a], rows[b])) < kKink;
        }
      }
      if (near) continue;
      const auto fd = oracle::central_difference(
          [&](const oracle::Vec& x) { return oracle::reg_sp(oracle::reshape(x, classes, 3), nu); },
          oracle::flat(rows), 1e-6);
      g.add(oracle::relative_error(grad_reg_sp(w, Margin(nu)).data(), fd));
    }
    checks.push_back(g);
  }
  {
    GradientCheck g{"reg_sp_top"};
    while (g.points < kPoints) {
      const std::size_t classes = 3 + rng.uniform_index(6);
      const auto w = ClassEmbeddingMatrix::random(classes, 3, rng);
      const auto sample = sample_without_replacement(rng, classes, 1 + rng.uniform_index(classes));
      const std::vector<ClassId> active(sample.begin(), sample.end());
      const auto candidates = all_classes(classes);
      const std::size_t k = 1 + rng.uniform_index(classes - 1);
      if (mining_margin(w, active, k) < kKink) continue;
      const auto mined = oracle::mine(oracle::rows_of(w), active, candidates, k);
      const auto fd = oracle::central_difference(
          [&](const oracle::Vec& x) {
            return oracle::reg_sp_top(oracle::reshape(x, classes, 3), mined);
          },
          oracle::flat(oracle::rows_of(w)), 1e-6);
      g.add(oracle::relative_error(grad_reg_sp_top(w, active, candidates, k).data(), fd));
    }
    checks.push_back(g);
  }
  {
    GradientCheck g{"embedder"};
    while (g.points < kPoints) {
      EmbedderShape shape;
      shape.vocab = 6;
      shape.embed_dim = 5;
      shape.layer_sizes = {5, 4, 3};
      auto p = init_embedder(shape, rng);
      for (auto& l : p.layers) {
        for (double& b : l.bias) b = rng.uniform(-0.3, 0.3);
      }
      SparseInstance x;
      for (std::uint32_t i = 0; i < shape.vocab; ++i) {
        if (rng.uniform() < 0.5 || (i + 1 == shape.vocab && x.indices.empty())) {
          x.indices.push_back(i);
          x.weights.push_back(rng.uniform(-2.0, 2.0));
        }
      }
      const auto pre = oracle::pre_activations(p, x);
      if (std::any_of(pre.begin(), pre.end(), [&](double a) { return std::abs(a) < kKink; })) {
        continue;
      }
      DenseVector u(3);
      for (double& v : u) v = rng.uniform(-1.0, 1.0);
      auto scratch = p;
      const auto fd = oracle::central_difference(
          [&](const oracle::Vec& flat) {
            unflatten(flat, scratch);
            return oracle::dot(oracle::embed(scratch, x), u.values());
          },
          flatten(p), 1e-5);
      g.add(oracle::relative_error(flatten(backward(p, x, u)), fd));
    }
    checks.push_back(g);
  }

  bool pass = true;
  std::string detail;
  for (const auto& c : checks) {
    pass &= c.ok();
    detail += c.name + "[n=" + std::to_string(c.points) + " worst=" + fmt(c.worst) + "] ";
  }
  detail.pop_back();
  return {pass, detail};
}

// ---------------------------------------------------------------- 3

Outcome criterion_3() {
  const auto t0 = Clock::now();
  const auto dir = scratch_dir("3");
  const auto base = last_record(run_csv(benchmark(TrainingMode::kBaseline1, 7), dir / "b1"));
  const auto fed = last_record(run_csv(benchmark(TrainingMode::kFedAwS, 7), dir / "fed"));
  const double seconds = seconds_since(t0);
  fs::remove_all(dir);

  const bool collapse = base.rho < 0.05 && base.p1 <= 0.2;
  const bool spread = fed.p1 >= 0.9 && fed.rho >= 0.5;
  return {collapse && spread && seconds < 120.0,
          "baseline1 p@1=" + fmt(base.p1) + " rho=" + fmt(base.rho) +
              " (want rho<0.05, p@1<=0.2); fedaws p@1=" + fmt(fed.p1) + " rho=" +
              fmt(fed.rho) + " (want p@1>=0.9, rho>=0.5); seconds=" + fmt(seconds)};
}

// ---------------------------------------------------------------- 4

Outcome criterion_4() {
  SyntheticSpec spec;
  spec.seed = 7;
  const auto data = gen_synthetic(spec).data;
  const auto shards = shard_by_label(data).shards;
  auto run = [&](TrainingMode mode) {
    auto rc = benchmark(mode, 7);
    rc.lambda = 0.0;
    auto config = cli::make_training_config(rc, data);
    std::vector<ServerState> states;
    auto result = run_training(config, shards, data.classes, rc.rounds, data,
                               [&](const ServerState& s, const MetricsRecord&) {
                                 states.push_back(s);
                               });
    return std::pair{states, result.metrics};
  };
  const auto [fed_states, fed_metrics] = run(TrainingMode::kFedAwS);
  const auto [base_states, base_metrics] = run(TrainingMode::kBaseline1);
  std::size_t identical_rounds = 0;
  for (std::size_t r = 0; r < std::min(fed_states.size(), base_states.size()); ++r) {
    if (fed_states[r] == base_states[r] && fed_metrics[r] == base_metrics[r]) ++identical_rounds;
  }
  const bool bitwise = identical_rounds == 200 && fed_states.size() == 200 &&
                       base_states.size() == 200;

  Rng rng(44);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 2 + rng.uniform_index(30);
    const auto w = ClassEmbeddingMatrix::random(classes, 1 + rng.uniform_index(8), rng);
    const auto active = all_classes(classes);
    const auto rows = oracle::rows_of(w);
    double all_pairs = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t y = 0; y < classes; ++y) {
        if (c == y) continue;
        const double d = 1.0 - oracle::dot(rows[c], rows[y]);
        all_pairs -= d * d;
      }
    }
    worst = std::max(worst, std::abs(reg_sp_top(w, active, active, classes - 1) - all_pairs));
  }
  return {bitwise && worst <= 1e-12,
          "lambda=0 rounds identical " + std::to_string(identical_rounds) +
              "/200; k=C-1 worst |diff|=" + fmt(worst)};
}

// ---------------------------------------------------------------- 5

Outcome criterion_5() {
  Rng rng(55);
  std::size_t nearest_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t classes = 2 + rng.uniform_index(99);
    const auto w = ClassEmbeddingMatrix::random(classes, 1 + rng.uniform_index(16), rng);
    const auto c = static_cast<ClassId>(rng.uniform_index(classes));
    const std::size_t k = 1 + rng.uniform_index(classes - 1);
    const auto candidates = all_classes(classes);
    if (nearest_classes(w, c, k) != oracle::nearest(oracle::rows_of(w), c, candidates, k)) {
      ++nearest_bad;
    }
  }

  double er_worst = 0.0;
  std::size_t precision_bad = 0;
  double aggregate_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.uniform_index(20);
    const std::size_t dim = 2 + rng.uniform_index(6);
    const auto w = ClassEmbeddingMatrix::random(classes, dim, rng);
    std::vector<DenseVector> g;
    oracle::Rows plain;
    std::vector<ClassId> y;
    std::vector<LogitVector> logits;
    std::vector<oracle::Vec> plain_logits;
    for (int i = 0; i < 30; ++i) {
      g.push_back(random_unit(dim, rng));
      plain.emplace_back(g.back().begin(), g.back().end());
      y.push_back(static_cast<ClassId>(rng.uniform_index(classes)));
      LogitVector s(classes);
      for (double& v : s) v = std::round(rng.uniform(-1.0, 1.0) * 4.0) / 4.0;
      logits.push_back(s);
      plain_logits.push_back(s.values());
    }
    const auto got = epsilon_rho(w, g, y);
    const auto [eps, rho] = oracle::epsilon_rho(oracle::rows_of(w), plain, y);
    er_worst = std::max({er_worst, std::abs(got.epsilon - eps), std::abs(got.rho - rho)});
    for (std::size_t k = 1; k <= classes; ++k) {
      if (precision_at_k(logits, y, k) != oracle::precision_at_k(plain_logits, y, k)) {
        ++precision_bad;
      }
    }

    // Aggregation against a direct weighted sum.
    EmbedderShape shape;
    shape.vocab = 4;
    shape.embed_dim = 3;
    shape.layer_sizes = {4, dim};
    ServerState prev{init_embedder(shape, rng), w, 0, 0};
    const std::size_t clients = 1 + rng.uniform_index(classes);
    const auto owners = sample_without_replacement(rng, classes, clients);
    std::vector<ClientUpdate> updates;
    for (std::size_t i = 0; i < clients; ++i) {
      ClientUpdate u;
      u.theta = init_embedder(shape, rng);
      u.class_embedding = random_unit(dim, rng);
      u.class_id = static_cast<ClassId>(owners[i]);
      u.client_id = i;
      u.sample_count = 1 + rng.uniform_index(9);
      updates.push_back(u);
    }
    const auto weights = AggregationWeights::by_sample_count(updates);
    std::vector<oracle::Vec> thetas;
    std::vector<double> omega;
    double total = 0.0;
    for (const auto& u : updates) total += static_cast<double>(u.sample_count);
    for (const auto& u : updates) {
      thetas.push_back(flatten(u.theta));
      omega.push_back(static_cast<double>(u.sample_count) / total);
    }
    const auto merged = aggregate(updates, weights, prev);
    const auto expect = oracle::weighted_sum(thetas, omega);
    const auto flat = flatten(merged.theta);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      aggregate_worst = std::max(aggregate_worst, std::abs(flat[i] - expect[i]));
    }
    for (const auto& u : updates) {
      for (std::size_t j = 0; j < dim; ++j) {
        aggregate_worst = std::max(
            aggregate_worst, std::abs(merged.w.row(u.class_id)[j] - u.class_embedding[j]));
      }
    }
  }

  const bool pass = nearest_bad == 0 && er_worst <= 1e-12 && precision_bad == 0 &&
                    aggregate_worst <= 1e-12;
  return {pass, "nearest mismatches=" + std::to_string(nearest_bad) + "/1000; epsilon_rho worst=" +
                    fmt(er_worst) + "; precision mismatches=" + std::to_string(precision_bad) +
                    "; aggregate worst=" + fmt(aggregate_worst)};
}

// ---------------------------------------------------------------- 6

Outcome criterion_6() {
  const auto dir = scratch_dir("6");
  auto config = benchmark(TrainingMode::kFedAwS, 7);
  const auto first = run_csv(config, dir / "a");
  const auto second = run_csv(config, dir / "b");
  config.jobs = 8;
  const auto parallel = run_csv(config, dir / "c");
  fs::remove_all(dir);
  const bool repeat = first == second;
  const bool jobs = first == parallel;
  return {repeat && jobs && !first.empty(),
          std::string("two runs ") + (repeat ? "identical" : "differ") + "; jobs 1 vs 8 " +
              (jobs ? "identical" : "differ") + "; " + std::to_string(first.size()) + " bytes"};
}

// ---------------------------------------------------------------- 7

Outcome criterion_7() {
  const auto dir = scratch_dir("7");
  const auto fed = last_record(run_csv(benchmark(TrainingMode::kFedAwS, 7), dir / "fed"));
  const auto b2 = last_record(run_csv(benchmark(TrainingMode::kBaseline2, 7), dir / "b2"));
  const auto b1 = last_record(run_csv(benchmark(TrainingMode::kBaseline1, 7), dir / "b1"));
  fs::remove_all(dir);
  return {fed.p1 >= b2.p1 && b2.p1 >= b1.p1,
          "round 200 p@1: fedaws=" + fmt(fed.p1) + " baseline2=" + fmt(b2.p1) +
              " baseline1=" + fmt(b1.p1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-7)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{
      criterion_1, criterion_2, criterion_3, criterion_4,
      criterion_5, criterion_6, criterion_7};
  bool all = true;
  for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) {
    if (only != 0 && n != only) continue;
    Outcome outcome;
    try {
      outcome = criteria[n - 1]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    all &= outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << n << ": "
              << outcome.detail << std::endl;
  }
  return all ? 0 : 1;
}

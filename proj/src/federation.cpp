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

#include "fedaws/federation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "fedaws/error.hpp"
#include "fedaws/parallel.hpp"

namespace fedaws {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kRoundStream = 0x726f756e64ULL;
constexpr std::uint64_t kSampleTag = 1;
constexpr std::uint64_t kCandidateTag = 2;

void require_finite(const EmbedderParams& theta, const ClassEmbeddingMatrix& w,
                    std::size_t round) {
  if (!all_finite(theta) || !all_finite(w.matrix().data())) {
    throw Error(ErrorCode::kNumericFailure,
                "non-finite parameters after round " + std::to_string(round));
  }
}

ServerState oracle_round(const TrainingConfig& config, const ServerState& state,
                         std::span<const ClientShard> shards) {
  ServerState next = state;
  EmbedderOptimizer optimizer(config.client_config().optimizer);
  std::size_t total = 0;
  for (const auto& shard : shards) total += shard.size();
  if (total == 0) throw Error(ErrorCode::kEmptyShard, "no training data");
  const double inv_n = 1.0 / static_cast<double>(total);
  for (std::size_t step = 0; step < config.local_steps; ++step) {
    EmbedderParams grad_theta = zeros_like(next.theta);
    DenseMatrix grad_w(next.w.classes(), next.w.dim());
    for (const auto& shard : shards) {
      for (const auto& x : shard.instances) {
        const auto trace = forward(next.theta, x);
        const LogitVector s = score(next.w, trace.embedding);
        const auto loss = softmax_xent(s, shard.class_id, config.temperature);
        DenseVector upstream(next.w.dim());
        for (std::size_t c = 0; c < s.size(); ++c) {
          if (loss.gradient[c] == 0.0) continue;
          axpy(loss.gradient[c], next.w.row(c), upstream.span());
          axpy(inv_n * loss.gradient[c], trace.embedding, grad_w.row(c));
        }
        accumulate_backward(next.theta, x, trace, upstream, inv_n, grad_theta);
      }
    }
    optimizer.step(next.theta, grad_theta);
    next.w.descend(grad_w, config.learning_rate);
  }
  return next;
}

}  // namespace

std::string_view mode_name(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::kFedAwS: return "fedaws";
    case TrainingMode::kBaseline1: return "baseline1";
    case TrainingMode::kBaseline2: return "baseline2";
    case TrainingMode::kOracleSoftmax: return "oracle";
  }
  return "unknown";
}

std::optional<TrainingMode> parse_mode(std::string_view text) {
  if (text == "fedaws") return TrainingMode::kFedAwS;
  if (text == "baseline1") return TrainingMode::kBaseline1;
  if (text == "baseline2") return TrainingMode::kBaseline2;
  if (text == "oracle" || text == "softmax") return TrainingMode::kOracleSoftmax;
  return std::nullopt;
}

ClientUpdate client_update(const EmbedderParams& theta,
                           std::span<const double> class_embedding,
                           const ClientShard& shard, const ClientConfig& config,
                           std::size_t client_id) {
  if (shard.instances.empty()) {
    throw Error(ErrorCode::kEmptyShard,
                "client " + std::to_string(client_id) + " has no data");
  }
  if (class_embedding.size() != theta.output_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "class embedding dimension");
  }
  ClientUpdate update;
  update.theta = theta;
  update.class_embedding = DenseVector(class_embedding);
  update.class_id = shard.class_id;
  update.client_id = client_id;
  update.sample_count = shard.size();
  EmbedderOptimizer optimizer(config.optimizer);
  const double inv_n = 1.0 / static_cast<double>(shard.size());
  for (std::size_t step = 0; step < config.local_steps; ++step) {
    EmbedderParams grad_theta = zeros_like(update.theta);
    DenseVector grad_w(class_embedding.size());
    bool active = false;
    for (const auto& x : shard.instances) {
      const auto trace = forward(update.theta, x);
      const double s = dot(trace.embedding, update.class_embedding);
      const auto loss = pos_hinge_loss(s, config.positive_margin);
      if (loss.derivative == 0.0) continue;
      active = true;
      axpy(inv_n * loss.derivative, trace.embedding, grad_w.span());
      DenseVector upstream(update.class_embedding);
      scale(loss.derivative, upstream.span());
      accumulate_backward(update.theta, x, trace, upstream, inv_n, grad_theta);
    }
    if (!active) break;
    optimizer.step(update.theta, grad_theta);
    if (config.update_class_embedding) {
      axpy(-config.class_rate, grad_w, update.class_embedding.span());
      normalize_in_place(update.class_embedding.span());
    }
  }
  return update;
}

AggregationWeights AggregationWeights::by_sample_count(
    std::span<const ClientUpdate> updates) {
  AggregationWeights w;
  double total = 0.0;
  for (const auto& u : updates) total += static_cast<double>(u.sample_count);
  for (const auto& u : updates) {
    w.omega.push_back(total > 0.0 ? static_cast<double>(u.sample_count) / total
                                  : 1.0 / static_cast<double>(updates.size()));
  }
  return w;
}

void AggregationWeights::validate(std::size_t count) const {
  if (omega.size() != count) {
    throw Error(ErrorCode::kInvalidArgument, "one weight per update required");
  }
  double total = 0.0;
  for (double v : omega) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative weight");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument,
                "weights sum to " + format_double(total));
  }
}

Aggregate aggregate(std::span<const ClientUpdate> updates,
                    const AggregationWeights& weights,
                    const ServerState& previous) {
  if (updates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no client updates");
  }
  weights.validate(updates.size());
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(updates[a].class_id, updates[a].client_id) <
           std::pair(updates[b].class_id, updates[b].client_id);
  });
  std::set<std::size_t> seen;
  for (const auto& u : updates) {
    if (!seen.insert(u.client_id).second) {
      throw Error(ErrorCode::kDuplicateClient,
                  "client " + std::to_string(u.client_id));
    }
    if (u.class_id >= previous.w.classes()) {
      throw Error(ErrorCode::kUnknownClass,
                  "class " + std::to_string(u.class_id));
    }
  }

  Aggregate out{zeros_like(previous.theta), previous.w};
  for (std::size_t i : order) axpy(weights.omega[i], updates[i].theta, out.theta);

  std::size_t i = 0;
  while (i < order.size()) {
    const ClassId c = updates[order[i]].class_id;
    std::size_t j = i;
    while (j < order.size() && updates[order[j]].class_id == c) ++j;
    if (j - i == 1) {
      out.w.set_unit_row(c, updates[order[i]].class_embedding);
    } else {
      DenseVector mean(previous.w.dim());
      for (std::size_t k = i; k < j; ++k) {
        axpy(weights.omega[order[k]], updates[order[k]].class_embedding,
             mean.span());
      }
      out.w.set_row(c, mean);
    }
    i = j;
  }
  return out;
}

ClassEmbeddingMatrix server_spreadout_step(const ClassEmbeddingMatrix& w,
                                           const SpreadoutConfig& config,
                                           double eta,
                                           std::span<const ClassId> active,
                                           Rng& rng) {
  if (!(config.lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  }
  if (config.lambda == 0.0) return w;
  DenseMatrix grad;
  if (config.mining) {
    const auto candidates = choose_candidates(w.classes(), *config.mining, rng);
    grad = grad_reg_sp_top(w, active, candidates, config.mining->k);
  } else {
    grad = grad_reg_sp(w, config.nu);
  }
  ClassEmbeddingMatrix next = w;
  next.descend(grad, config.lambda * eta);
  return next;
}

std::vector<std::size_t> sample_clients(Rng& rng, std::size_t clients,
                                        std::size_t count) {
  if (count < 1 || count > clients) {
    throw Error(ErrorCode::kCountOutOfRange,
                std::to_string(count) + " of " + std::to_string(clients) +
                    " clients");
  }
  return sample_without_replacement(rng, clients, count);
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  }
  if (embedding_rate && !(*embedding_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "embedding rate must be > 0");
  }
  if (local_steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "local steps must be >= 1");
  }
  if (!(spreadout.lambda >= 0.0) || !std::isfinite(spreadout.lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  }
  if (!(positive_margin > -1.0 && positive_margin <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "positive margin must lie in (-1, 1]");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  }
  if (jobs < 1) throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 1");
  if (shape.layer_sizes.empty() ? shape.embed_dim == 0
                                : shape.layer_sizes.back() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "zero embedding dimension");
  }
}

ClientConfig TrainingConfig::client_config() const {
  ClientConfig c;
  c.optimizer.embedding_rate = embedding_rate.value_or(learning_rate);
  c.optimizer.layer_rate = learning_rate;
  c.optimizer.layer_optimizer = layer_optimizer;
  c.optimizer.train_bias = train_bias;
  c.class_rate = learning_rate;
  c.local_steps = local_steps;
  c.positive_margin = positive_margin;
  c.update_class_embedding = mode != TrainingMode::kBaseline2;
  return c;
}

ServerState initial_state(const TrainingConfig& config, std::size_t classes) {
  config.validate();
  const Rng root = Rng(config.seed).fork(kInitStream);
  Rng theta_rng = root.fork(1);
  Rng w_rng = root.fork(2);
  ServerState state;
  state.theta = init_embedder(config.shape, theta_rng);
  state.w = ClassEmbeddingMatrix::random(classes, state.theta.output_dim(), w_rng);
  state.seed = config.seed;
  return state;
}

ServerState run_round(const TrainingConfig& config, const ServerState& state,
                      std::span<const ClientShard> shards) {
  for (const auto& shard : shards) {
    if (shard.class_id >= state.w.classes()) {
      throw Error(ErrorCode::kUnknownClass,
                  "shard class " + std::to_string(shard.class_id));
    }
  }
  if (config.mode == TrainingMode::kOracleSoftmax) {
    ServerState next = oracle_round(config, state, shards);
    next.round = state.round + 1;
    require_finite(next.theta, next.w, next.round);
    return next;
  }
  if (shards.empty()) throw Error(ErrorCode::kEmptyShard, "no clients");

  const Rng round_rng = Rng(config.seed).fork(kRoundStream, state.round);
  Rng sample_rng = round_rng.fork(kSampleTag);
  const std::size_t count = config.clients_per_round == 0
                                ? shards.size()
                                : config.clients_per_round;
  const auto participants = sample_clients(sample_rng, shards.size(), count);

  const ClientConfig client = config.client_config();
  std::vector<ClientUpdate> updates(participants.size());
  parallel_for(participants.size(), config.jobs, [&](std::size_t i) {
    const std::size_t id = participants[i];
    const auto& shard = shards[id];
    updates[i] = client_update(state.theta, state.w.row(shard.class_id), shard,
                               client, id);
  });

  auto merged = aggregate(updates, AggregationWeights::by_sample_count(updates),
                          state);
  ServerState next;
  next.theta = std::move(merged.theta);
  next.seed = state.seed;
  next.round = state.round + 1;
  if (config.mode == TrainingMode::kFedAwS) {
    std::vector<ClassId> active;
    for (const auto& u : updates) active.push_back(u.class_id);
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    Rng candidate_rng = round_rng.fork(kCandidateTag);
    next.w = server_spreadout_step(merged.w, config.spreadout,
                                   config.learning_rate, active, candidate_rng);
  } else {
    next.w = std::move(merged.w);
  }
  require_finite(next.theta, next.w, next.round);
  return next;
}

TrainingResult run_training(const TrainingConfig& config, ServerState state,
                            std::span<const ClientShard> shards,
                            std::size_t rounds, const LabeledDataset& eval,
                            const RoundCallback& on_round) {
  config.validate();
  if (config.mode == TrainingMode::kFedAwS && config.spreadout.mining) {
    config.spreadout.mining->validate(state.w.classes());
  }
  RecordOptions record_options;
  record_options.positive_margin = config.positive_margin;
  record_options.nu = config.spreadout.nu;
  record_options.jobs = config.jobs;
  TrainingResult result;
  for (std::size_t t = 0; t < rounds; ++t) {
    state = run_round(config, state, shards);
    if (eval.size() > 0) {
      result.metrics.push_back(
          make_record(state.round, state.theta, state.w, eval, record_options));
      if (on_round) on_round(state, result.metrics.back());
    } else if (on_round) {
      on_round(state, MetricsRecord{state.round});
    }
  }
  result.state = std::move(state);
  return result;
}

TrainingResult run_training(const TrainingConfig& config,
                            std::span<const ClientShard> shards,
                            std::size_t classes, std::size_t rounds,
                            const LabeledDataset& eval,
                            const RoundCallback& on_round) {
  return run_training(config, initial_state(config, classes), shards, rounds,
                      eval, on_round);
}

}  // namespace fedaws

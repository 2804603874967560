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
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedaws/data_io.hpp"
#include "fedaws/losses.hpp"
#include "fedaws/metrics.hpp"
#include "fedaws/model.hpp"
#include "fedaws/rng.hpp"
#include "fedaws/spreadout.hpp"
#include "fedaws/state.hpp"

namespace fedaws {

enum class TrainingMode {
  kFedAwS,         // federated averaging plus server spreadout step
  kBaseline1,      // positive-only, class rows trained by clients
  kBaseline2,      // positive-only, class rows frozen at initialization
  kOracleSoftmax,  // centralized softmax cross-entropy on pooled data
};

std::string_view mode_name(TrainingMode mode);
// Accepts fedaws, baseline1, baseline2, oracle (or softmax).
std::optional<TrainingMode> parse_mode(std::string_view text);

// Local training of one client. The client sees the shared embedder, the
// single class row it owns and its own shard, nothing else.
struct ClientConfig {
  OptimizerConfig optimizer;
  double class_rate = 0.1;
  std::size_t local_steps = 1;
  double positive_margin = kDefaultPositiveMargin;
  bool update_class_embedding = true;
};

struct ClientUpdate {
  EmbedderParams theta;
  DenseVector class_embedding;  // unit
  ClassId class_id = 0;
  std::size_t client_id = 0;
  std::size_t sample_count = 0;
};

// Runs local_steps full-shard gradient steps on the mean positive hinge
// loss, updating theta and (unless frozen) the class row, which is
// re-normalized after each step. Throws kEmptyShard.
ClientUpdate client_update(const EmbedderParams& theta,
                           std::span<const double> class_embedding,
                           const ClientShard& shard, const ClientConfig& config,
                           std::size_t client_id = 0);

struct AggregationWeights {
  std::vector<double> omega;  // aligned with the updates

  // omega_i = n_i / sum_j n_j
  static AggregationWeights by_sample_count(std::span<const ClientUpdate> updates);
  void validate(std::size_t count) const;
};

struct Aggregate {
  EmbedderParams theta;
  ClassEmbeddingMatrix w;
};

// theta = sum_i omega_i theta_i. Each participating class row is replaced by
// its client's row; rows shared by several clients are omega-averaged and
// re-normalized; other rows carry over. Summation runs in (class, client)
// order so the result does not depend on the order of `updates`.
// Throws kDuplicateClient, kUnknownClass.
Aggregate aggregate(std::span<const ClientUpdate> updates,
                    const AggregationWeights& weights,
                    const ServerState& previous);

struct SpreadoutConfig {
  double lambda = 10.0;
  Margin nu{};
  // Stochastic negative mining when set, else the all-pairs hinge form.
  std::optional<MiningConfig> mining = MiningConfig{};
};

// W <- normalize_rows(W - lambda * eta * grad). Returns the input unchanged
// when lambda == 0. `active` are the classes that took part in the round.
ClassEmbeddingMatrix server_spreadout_step(const ClassEmbeddingMatrix& w,
                                           const SpreadoutConfig& config,
                                           double eta,
                                           std::span<const ClassId> active,
                                           Rng& rng);

// Uniform sample of `count` distinct clients from [0, clients), sorted.
// Throws kCountOutOfRange unless 1 <= count <= clients.
std::vector<std::size_t> sample_clients(Rng& rng, std::size_t clients,
                                        std::size_t count);

struct TrainingConfig {
  TrainingMode mode = TrainingMode::kFedAwS;
  EmbedderShape shape;
  double learning_rate = 0.1;  // eta
  std::optional<double> embedding_rate;  // token table, defaults to eta
  OptimizerKind layer_optimizer = OptimizerKind::kSgd;
  bool train_bias = false;
  std::size_t local_steps = 1;
  std::size_t clients_per_round = 0;  // 0 means every client
  double positive_margin = kDefaultPositiveMargin;
  SpreadoutConfig spreadout;
  double temperature = 0.1;  // oracle softmax
  std::size_t jobs = 1;
  std::uint64_t seed = 0;

  void validate() const;
  ClientConfig client_config() const;
};

ServerState initial_state(const TrainingConfig& config, std::size_t classes);

struct TrainingResult {
  ServerState state;
  std::vector<MetricsRecord> metrics;
};

using RoundCallback = std::function<void(const ServerState&, const MetricsRecord&)>;

// Runs `rounds` rounds. Shards may share a class; every class must lie in
// [0, classes). Metrics are computed on `eval` after every round (pass an
// empty dataset to skip). Throws kNumericFailure as soon as any parameter is
// not finite.
TrainingResult run_training(const TrainingConfig& config,
                            std::span<const ClientShard> shards,
                            std::size_t classes, std::size_t rounds,
                            const LabeledDataset& eval,
                            const RoundCallback& on_round = {});
// Continues from a given state.
TrainingResult run_training(const TrainingConfig& config, ServerState state,
                            std::span<const ClientShard> shards,
                            std::size_t rounds, const LabeledDataset& eval,
                            const RoundCallback& on_round = {});

// One round of the chosen mode from `state`.
ServerState run_round(const TrainingConfig& config, const ServerState& state,
                      std::span<const ClientShard> shards);

}  // namespace fedaws

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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedaws/data_io.hpp"
#include "fedaws/federation.hpp"

namespace fedaws::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDataError = 2,
  kNumericError = 3,
  kViolation = 4,
};

struct RunConfig {
  TrainingMode mode = TrainingMode::kFedAwS;
  std::string data_path;       // sparse text file; empty for synthetic
  std::string eval_path;       // optional held-out file
  std::string synthetic = "C=10,d=32,n=50,sigma=0.05";
  std::size_t embed_dim = 32;
  std::vector<std::size_t> layer_sizes{64, 64, 32};
  std::size_t rounds = 200;
  std::size_t clients_per_round = 0;
  double eta = 0.1;
  std::optional<double> embedding_rate;
  std::string optimizer = "sgd";
  bool train_bias = false;
  std::size_t local_steps = 1;
  double lambda = 10.0;
  std::optional<std::size_t> k;  // unset: min(10, C - 1); 0: all-pairs form
  std::size_t candidates = MiningConfig::kDefaultCandidates;
  double nu = Margin::kDefault;
  double margin = kDefaultPositiveMargin;
  double temperature = 0.1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out_dir = "fedaws_out";

  // Flat key=value text accepted back by `run --config`.
  std::string echo() const;
};

// Resolves the run's defaults against the data and builds the training
// configuration. Throws Error(kInvalidArgument / kKTooLarge).
TrainingConfig make_training_config(const RunConfig& config,
                                    const LabeledDataset& data);

struct VerifyConfig {
  std::uint64_t seed = 0;
  std::size_t lemma2_trials = 100000;
  std::size_t thm4_draws = 10000;
  std::size_t claim5_trials = 100000;
  std::size_t prop1_draws = 500;
  std::size_t prop3_draws = 200;
  std::optional<double> nu;  // fixes nu on the surrogate path
};

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyConfig& config, std::ostream& out, std::ostream& err);
int cmd_gen_data(const std::string& spec, std::uint64_t seed,
                 const std::string& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_report(const std::string& metrics_path, std::ostream& out,
               std::ostream& err);

// Parses argv and dispatches to a subcommand: run, verify, gen-data, report.
int main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err);

}  // namespace fedaws::cli

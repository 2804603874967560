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

#include "fedaws/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedaws/error.hpp"
#include "fedaws/metrics.hpp"
#include "fedaws/theory.hpp"

namespace fedaws::cli {

namespace {

using Clock = std::chrono::steady_clock;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kParseError:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kVocabOutOfRange:
    case ErrorCode::kEmptyShard:
    case ErrorCode::kIo:
      return kDataError;
    case ErrorCode::kNumericFailure:
      return kNumericError;
    default:
      return kConfigError;
  }
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LabeledDataset load_dataset(const std::string& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  ParseOptions options;
  options.seed = seed;
  return parse_sparse_dataset(in, options);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(sizes[i]);
  }
  return out;
}

nlohmann::json record_json(const MetricsRecord& r) {
  return {{"round", r.round},     {"p1", r.p1},           {"p3", r.p3},
          {"p5", r.p5},           {"epsilon", r.epsilon}, {"rho", r.rho},
          {"rpos", r.rpos},       {"reg", r.reg},         {"prop1_pass", r.prop1_pass},
          {"prop1_vacuous", r.prop1_vacuous}};
}

nlohmann::json state_json(const ServerState& state) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : state.theta.layers) {
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", l.weight.values()},
                      {"bias", l.bias.values()}});
  }
  return {{"round", state.round},
          {"seed", state.seed},
          {"classes", state.w.classes()},
          {"dim", state.w.dim()},
          {"class_embeddings", state.w.matrix().values()},
          {"token_table",
           {{"rows", state.theta.token_table.rows()},
            {"cols", state.theta.token_table.cols()},
            {"values", state.theta.token_table.values()}}},
          {"layers", layers}};
}

void print_sweep(std::ostream& out, std::string_view name,
                 const SweepReport& report, double seconds) {
  out << (report.ok() ? "PASS " : "FAIL ") << name << " trials=" << report.trials
      << " violations=" << report.violations
      << " worst_slack=" << format_double(report.worst_slack)
      << " seconds=" << format_double(seconds) << '\n';
}

// Expands `run --config FILE` into `--key=value` arguments placed ahead of the
// command-line flags, so later flags override file entries. Blank lines and
// lines starting with '#' or ';' are skipped.
std::vector<std::string> expand_run_config(std::vector<std::string> args) {
  if (args.size() < 2 || args[1] != "run") return args;
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::vector<std::string> out{args[0], args[1]};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == ';') {
      continue;
    }
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ConversionError("config line '" + line + "' is not key=value");
    }
    out.push_back("--" + line);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

std::string RunConfig::echo() const {
  std::ostringstream o;
  o << "mode=" << mode_name(mode) << '\n';
  if (!data_path.empty()) o << "data=" << data_path << '\n';
  if (!eval_path.empty()) o << "eval=" << eval_path << '\n';
  if (data_path.empty()) o << "synthetic=" << synthetic << '\n';
  o << "embed-dim=" << embed_dim << '\n'
    << "layers=" << join_sizes(layer_sizes) << '\n'
    << "rounds=" << rounds << '\n'
    << "clients-per-round=" << clients_per_round << '\n'
    << "eta=" << format_double(eta) << '\n';
  if (embedding_rate) o << "embedding-rate=" << format_double(*embedding_rate) << '\n';
  o << "optimizer=" << optimizer << '\n'
    << "train-bias=" << (train_bias ? "true" : "false") << '\n'
    << "local-steps=" << local_steps << '\n'
    << "lambda=" << format_double(lambda) << '\n';
  if (k) o << "k=" << *k << '\n';
  o << "candidates=" << candidates << '\n'
    << "nu=" << format_double(nu) << '\n'
    << "margin=" << format_double(margin) << '\n'
    << "temperature=" << format_double(temperature) << '\n'
    << "seed=" << seed << '\n';
  return o.str();
}

TrainingConfig make_training_config(const RunConfig& config,
                                    const LabeledDataset& data) {
  TrainingConfig t;
  t.mode = config.mode;
  t.shape.vocab = data.vocab;
  t.shape.embed_dim = config.embed_dim;
  t.shape.layer_sizes = config.layer_sizes;
  t.learning_rate = config.eta;
  t.embedding_rate = config.embedding_rate;
  if (config.optimizer == "sgd") {
    t.layer_optimizer = OptimizerKind::kSgd;
  } else if (config.optimizer == "adagrad") {
    t.layer_optimizer = OptimizerKind::kAdagrad;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "optimizer must be sgd or adagrad, got " + config.optimizer);
  }
  t.train_bias = config.train_bias;
  t.local_steps = config.local_steps;
  t.clients_per_round = config.clients_per_round;
  t.positive_margin = config.margin;
  t.spreadout.lambda = config.lambda;
  t.spreadout.nu = Margin(config.nu);
  const std::size_t classes = data.classes;
  if (classes < 2 && config.mode == TrainingMode::kFedAwS) {
    throw Error(ErrorCode::kInvalidArgument, "fedaws needs at least 2 classes");
  }
  const std::size_t k = config.k.value_or(std::min<std::size_t>(10, classes - 1));
  if (k == 0) {
    t.spreadout.mining.reset();
  } else {
    t.spreadout.mining = MiningConfig{k, config.candidates};
    if (config.mode == TrainingMode::kFedAwS) t.spreadout.mining->validate(classes);
  }
  t.temperature = config.temperature;
  t.jobs = config.jobs;
  t.seed = config.seed;
  t.validate();
  return t;
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  LabeledDataset data;
  LabeledDataset eval;
  try {
    if (config.data_path.empty()) {
      SyntheticSpec defaults;
      defaults.seed = config.seed;
      const auto synthetic =
          gen_synthetic(parse_synthetic_spec(config.synthetic, defaults));
      data = synthetic.data;
      out << "synthetic prototypes: min pairwise cosine distance "
          << format_double(synthetic.min_prototype_distance) << '\n';
    } else {
      data = load_dataset(config.data_path, config.seed);
    }
    eval = config.eval_path.empty() ? data
                                    : load_dataset(config.eval_path, config.seed);
    if (!config.eval_path.empty()) {
      eval.classes = std::max(eval.classes, data.classes);
      data.classes = eval.classes;
      eval.vocab = std::max(eval.vocab, data.vocab);
      data.vocab = eval.vocab;
    }
    data.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kInvalidArgument && config.data_path.empty()
               ? kConfigError
               : kDataError;
  }

  TrainingConfig training;
  try {
    training = make_training_config(config, data);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto sharding = shard_by_label(data);
  if (!sharding.empty_classes.empty()) {
    out << sharding.empty_classes.size()
        << " classes have no instances and get no client\n";
  }

  TrainingResult result;
  try {
    result = run_training(training, sharding.shards, data.classes, config.rounds,
                          eval);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }

  namespace fs = std::filesystem;
  try {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + config.out_dir);
    const fs::path dir(config.out_dir);
    std::ostringstream csv;
    write_metrics_csv(result.metrics, csv);
    write_file(dir / "metrics.csv", csv.str());
    write_file(dir / "config.ini", config.echo());
    nlohmann::json summary = {
        {"mode", mode_name(config.mode)},
        {"rounds", config.rounds},
        {"seed", config.seed},
        {"classes", data.classes},
        {"instances", data.size()},
        {"config", config.echo()},
    };
    if (!result.metrics.empty()) summary["final"] = record_json(result.metrics.back());
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    write_file(dir / "final_state.json", state_json(result.state).dump() + "\n");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }

  out << "mode " << mode_name(config.mode) << ", " << config.rounds
      << " rounds, seed " << config.seed << '\n';
  if (!result.metrics.empty()) {
    const auto& last = result.metrics.back();
    out << "final p@1=" << format_double(last.p1)
        << " p@3=" << format_double(last.p3)
        << " p@5=" << format_double(last.p5)
        << " epsilon=" << format_double(last.epsilon)
        << " rho=" << format_double(last.rho) << '\n';
  }
  out << "wrote " << config.out_dir << "/metrics.csv in "
      << format_double(seconds_since(start)) << " s\n";
  return kOk;
}

int cmd_verify(const VerifyConfig& config, std::ostream& out,
               std::ostream& err) {
  std::optional<Margin> nu;
  try {
    if (config.nu) {
      nu = Margin(*config.nu);
      nu->require_theory_range();
    }
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto start = Clock::now();
  const Rng root(config.seed);
  bool ok = true;

  auto t0 = Clock::now();
  Rng lemma_rng = root.fork(2);
  const auto lemma2 = check_lemma2(config.lemma2_trials, lemma_rng, nu);
  print_sweep(out, "lemma2", lemma2, seconds_since(t0));
  ok &= lemma2.ok();

  t0 = Clock::now();
  Rng thm4_rng = root.fork(4);
  const auto thm4 = sweep_thm4(config.thm4_draws, thm4_rng);
  print_sweep(out, "thm4", thm4, seconds_since(t0));
  ok &= thm4.ok();

  t0 = Clock::now();
  Rng claim5_rng = root.fork(5);
  const auto claim5 = check_claim5(config.claim5_trials, claim5_rng);
  out << (claim5.ok() ? "PASS " : "FAIL ") << "claim5";
  for (std::size_t c = 0; c < 4; ++c) {
    out << " case" << c + 1 << "[hits=" << claim5.cases[c].hits
        << " violations=" << claim5.cases[c].violations
        << " worst_slack=" << format_double(claim5.cases[c].worst_slack)
        << " worst_slack_2x=" << format_double(claim5.cases[c].worst_slack_loose)
        << "]";
  }
  out << " seconds=" << format_double(seconds_since(t0)) << '\n';
  ok &= claim5.ok();

  t0 = Clock::now();
  Rng prop1_rng = root.fork(1);
  const auto prop1 = sweep_prop1(config.prop1_draws, prop1_rng);
  print_sweep(out, "prop1", prop1.report, seconds_since(t0));
  out << "  prop1 vacuous=" << prop1.vacuous << " skipped=" << prop1.skipped
      << '\n';
  ok &= prop1.report.ok();

  t0 = Clock::now();
  Rng prop3_rng = root.fork(3);
  const auto prop3 = sweep_prop3(config.prop3_draws, prop3_rng);
  print_sweep(out, "prop3", prop3, seconds_since(t0));
  ok &= prop3.ok();

  out << "total seconds=" << format_double(seconds_since(start)) << '\n';
  if (!ok) {
    err << "violations found:";
    if (!lemma2.ok()) err << " lemma2";
    if (!thm4.ok()) err << " thm4";
    if (!claim5.ok()) err << " claim5";
    if (!prop1.report.ok()) err << " prop1";
    if (!prop3.ok()) err << " prop3";
    err << '\n';
    return kViolation;
  }
  return kOk;
}

int cmd_gen_data(const std::string& spec_text, std::uint64_t seed,
                 const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  SyntheticSpec spec;
  try {
    SyntheticSpec defaults;
    defaults.seed = seed;
    spec = parse_synthetic_spec(spec_text, defaults);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto synthetic = gen_synthetic(spec);
  try {
    write_file(out_path, dump(synthetic.data));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  out << "wrote " << synthetic.data.size() << " instances of "
      << spec.classes << " classes to " << out_path << '\n'
      << "min pairwise prototype cosine distance "
      << format_double(synthetic.min_prototype_distance) << '\n';
  return kOk;
}

int cmd_report(const std::string& metrics_path, std::ostream& out,
               std::ostream& err) {
  std::vector<MetricsRecord> records;
  try {
    std::ifstream in(metrics_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + metrics_path);
    records = read_metrics_csv(in);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  if (records.empty()) {
    out << "no rounds recorded\n";
    return kOk;
  }
  const auto& last = records.back();
  const auto best = std::max_element(
      records.begin(), records.end(),
      [](const auto& a, const auto& b) { return a.p1 < b.p1; });
  const auto failures = std::count_if(records.begin(), records.end(),
                                      [](const auto& r) { return !r.prop1_pass; });
  const auto vacuous = std::count_if(records.begin(), records.end(),
                                     [](const auto& r) { return r.prop1_vacuous; });
  out << "rounds: " << records.size() << '\n'
      << "final round " << last.round << ": p@1=" << format_double(last.p1)
      << " p@3=" << format_double(last.p3) << " p@5=" << format_double(last.p5)
      << '\n'
      << "final epsilon=" << format_double(last.epsilon)
      << " rho=" << format_double(last.rho)
      << " rpos=" << format_double(last.rpos)
      << " reg=" << format_double(last.reg) << '\n'
      << "best p@1=" << format_double(best->p1) << " at round " << best->round
      << '\n'
      << "misclassification bound: " << failures << " failing rounds, "
      << vacuous << " vacuous rounds\n";
  return kOk;
}

int main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"Federated averaging with spreadout: simulation and checks"};
  app.require_subcommand(1);

  RunConfig run;
  std::string mode = "fedaws";
  std::string layers = "64,64,32";
  std::size_t k_value = 0;
  auto* run_cmd = app.add_subcommand("run", "Train and write per-round metrics");
  // Config-file entries arrive first; the last occurrence of a key wins.
  run_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  run_cmd->add_option("--config", "Flat key=value file; flags win");
  run_cmd->add_option("--mode", mode, "fedaws|baseline1|baseline2|oracle")
      ->capture_default_str();
  auto* data_opt = run_cmd->add_option("--data", run.data_path, "Sparse text dataset");
  run_cmd->add_option("--synthetic", run.synthetic, "C=..,d=..,n=..,sigma=..")
      ->capture_default_str()
      ->excludes(data_opt);
  run_cmd->add_option("--eval", run.eval_path, "Held-out dataset for metrics");
  run_cmd->add_option("--embed-dim", run.embed_dim)->capture_default_str();
  run_cmd->add_option("--layers", layers, "Comma-separated layer sizes")
      ->capture_default_str();
  run_cmd->add_option("--rounds", run.rounds)->capture_default_str();
  run_cmd->add_option("--clients-per-round", run.clients_per_round,
                      "0 means every client")
      ->capture_default_str();
  run_cmd->add_option("--eta", run.eta, "Client and server learning rate")
      ->capture_default_str();
  run_cmd->add_option("--embedding-rate", run.embedding_rate,
                      "Token table rate (defaults to eta)");
  run_cmd->add_option("--optimizer", run.optimizer, "sgd|adagrad for MLP layers")
      ->capture_default_str();
  run_cmd->add_flag("--train-bias", run.train_bias, "Also update MLP biases");
  run_cmd->add_option("--local-steps", run.local_steps)->capture_default_str();
  run_cmd->add_option("--lambda", run.lambda)->capture_default_str();
  auto* k_opt = run_cmd->add_option(
      "--k", k_value, "Mined neighbors per class; 0 selects the all-pairs form");
  run_cmd->add_option("--candidates", run.candidates)->capture_default_str();
  run_cmd->add_option("--nu", run.nu)->capture_default_str();
  run_cmd->add_option("--margin", run.margin)->capture_default_str();
  run_cmd->add_option("--temperature", run.temperature)->capture_default_str();
  run_cmd->add_option("--seed", run.seed)->capture_default_str();
  run_cmd->add_option("--jobs", run.jobs)->capture_default_str();
  run_cmd->add_option("--out", run.out_dir)->capture_default_str();

  VerifyConfig verify;
  std::size_t trials = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Certify the theory bounds");
  verify_cmd->add_option("--seed", verify.seed)->capture_default_str();
  auto* trials_opt = verify_cmd->add_option(
      "--trials", trials, "Surrogate and Claim-5 trial count (default 100000)");
  verify_cmd->add_option("--thm4-draws", verify.thm4_draws)->capture_default_str();
  verify_cmd->add_option("--prop1-draws", verify.prop1_draws)->capture_default_str();
  verify_cmd->add_option("--prop3-draws", verify.prop3_draws)->capture_default_str();
  verify_cmd->add_option("--nu", verify.nu, "Fix nu on the surrogate path");

  std::string gen_spec = "C=10,d=32,n=50,sigma=0.05";
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset");
  gen_cmd->add_option("--synthetic", gen_spec)->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--out", gen_out)->required();

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "Summarize a metrics CSV");
  report_cmd->add_option("metrics", report_path)->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_run_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  if (run_cmd->parsed()) {
    const auto parsed_mode = parse_mode(mode);
    if (!parsed_mode) {
      err << "config error: unknown mode '" << mode << "'\n";
      return kConfigError;
    }
    run.mode = *parsed_mode;
    run.layer_sizes.clear();
    std::stringstream ss(layers);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        std::size_t used = 0;
        const auto v = std::stoull(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        run.layer_sizes.push_back(v);
      } catch (const std::exception&) {
        err << "config error: bad layer size '" << item << "'\n";
        return kConfigError;
      }
    }
    if (k_opt->count() > 0) run.k = k_value;
    return cmd_run(run, out, err);
  }
  if (verify_cmd->parsed()) {
    if (trials_opt->count() > 0) {
      verify.lemma2_trials = trials;
      verify.claim5_trials = trials;
    }
    return cmd_verify(verify, out, err);
  }
  if (gen_cmd->parsed()) return cmd_gen_data(gen_spec, gen_seed, gen_out, out, err);
  if (report_cmd->parsed()) return cmd_report(report_path, out, err);
  return kConfigError;
}

}  // namespace fedaws::cli

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

#include "fedaws/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "fedaws/error.hpp"
#include "fedaws/parallel.hpp"
#include "fedaws/spreadout.hpp"

namespace fedaws {

namespace {

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(',', start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kInvalidArgument,
                "embeddings/labels length " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
}

}  // namespace

std::string to_csv_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.round);
  for (double v : {r.p1, r.p3, r.p5, r.epsilon, r.rho, r.rpos, r.reg}) {
    row += ',';
    row += format_double(v);
  }
  row += r.prop1_pass ? ",1" : ",0";
  row += r.prop1_vacuous ? ",1" : ",0";
  return row;
}

MetricsRecord parse_csv_row(std::string_view row, std::size_t line) {
  if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
  const auto fields = split_commas(row);
  if (fields.size() != 10) {
    throw ParseError(line, "expected 10 fields, got " +
                               std::to_string(fields.size()));
  }
  auto flag = [&](std::string_view f) {
    if (f == "1") return true;
    if (f == "0") return false;
    throw ParseError(line, "bad flag '" + std::string(f) + "'");
  };
  MetricsRecord r;
  try {
    std::size_t consumed = 0;
    const std::string round(fields[0]);
    r.round = std::stoull(round, &consumed);
    if (consumed != round.size()) throw ParseError(line, "bad round");
    r.p1 = parse_double(fields[1]);
    r.p3 = parse_double(fields[2]);
    r.p5 = parse_double(fields[3]);
    r.epsilon = parse_double(fields[4]);
    r.rho = parse_double(fields[5]);
    r.rpos = parse_double(fields[6]);
    r.reg = parse_double(fields[7]);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(line, e.what());
  }
  r.prop1_pass = flag(fields[8]);
  r.prop1_vacuous = flag(fields[9]);
  return r;
}

void write_metrics_csv(std::span<const MetricsRecord> records,
                       std::ostream& out) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsCsvHeader) throw ParseError(1, "unexpected header");
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_csv_row(line, line_no));
  }
  return out;
}

Evaluation evaluate(const EmbedderParams& theta, const ClassEmbeddingMatrix& w,
                    const LabeledDataset& data, std::size_t jobs) {
  Evaluation ev;
  ev.embeddings.resize(data.size());
  ev.logits.resize(data.size());
  ev.labels = data.labels;
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    ev.embeddings[i] = embed(theta, data.instances[i]);
    ev.logits[i] = score(w, ev.embeddings[i]);
  });
  return ev;
}

double precision_at_k(std::span<const LogitVector> logits,
                      std::span<const ClassId> labels, std::size_t k) {
  check_lengths(logits.size(), labels.size());
  if (logits.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& s = logits[i];
    if (k == 0 || k > s.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "k=" + std::to_string(k) + " with " +
                      std::to_string(s.size()) + " classes");
    }
    const ClassId y = labels[i];
    require_class(y, s.size());
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < s.size(); ++c) {
      if (s[c] > s[y] || (s[c] == s[y] && c < y)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.size());
}

double precision_at_k(const ServerState& state, const LabeledDataset& data,
                      std::size_t k) {
  const auto ev = evaluate(state.theta, state.w, data);
  return precision_at_k(ev.logits, ev.labels, k);
}

double min_pairwise_cosine(const ClassEmbeddingMatrix& w) {
  if (w.classes() < 2) throw Error(ErrorCode::kSingleClass, "rho undefined");
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < w.classes(); ++a) {
    for (std::size_t b = a + 1; b < w.classes(); ++b) {
      rho = std::min(rho, cosine_distance(w.row(a), w.row(b)));
    }
  }
  return rho;
}

double min_pairwise_chord(const ClassEmbeddingMatrix& w) {
  if (w.classes() < 2) throw Error(ErrorCode::kSingleClass, "rho undefined");
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < w.classes(); ++a) {
    for (std::size_t b = a + 1; b < w.classes(); ++b) {
      rho = std::min(rho, chord_distance(w.row(a), w.row(b)));
    }
  }
  return rho;
}

EpsilonRho epsilon_rho(const ClassEmbeddingMatrix& w,
                       std::span<const DenseVector> embeddings,
                       std::span<const ClassId> labels) {
  check_lengths(embeddings.size(), labels.size());
  if (embeddings.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon of empty data");
  }
  EpsilonRho out;
  out.rho = min_pairwise_cosine(w);
  double total = 0.0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    require_class(labels[i], w.classes());
    total += cosine_distance(embeddings[i], w.row(labels[i]));
  }
  out.epsilon = total / static_cast<double>(embeddings.size());
  return out;
}

EpsilonRho epsilon_rho(const ServerState& state, const LabeledDataset& data) {
  const auto ev = evaluate(state.theta, state.w, data);
  return epsilon_rho(state.w, ev.embeddings, ev.labels);
}

Prop1Result check_prop1(const ClassEmbeddingMatrix& w,
                        std::span<const DenseVector> embeddings,
                        std::span<const ClassId> labels) {
  check_lengths(embeddings.size(), labels.size());
  if (embeddings.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty data");
  }
  Prop1Result out;
  out.rho = min_pairwise_chord(w);
  if (!(out.rho > 0.0)) {
    throw Error(ErrorCode::kRhoZero, "coincident class embeddings");
  }
  std::size_t errors = 0;
  double total = 0.0;
  std::vector<double> dist(w.classes());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const ClassId y = labels[i];
    require_class(y, w.classes());
    for (std::size_t c = 0; c < w.classes(); ++c) {
      dist[c] = chord_distance(embeddings[i], w.row(c));
    }
    total += dist[y];
    for (std::size_t z = 0; z < w.classes(); ++z) {
      if (z != y && dist[y] >= dist[z]) {
        ++errors;
        break;
      }
    }
  }
  const double n = static_cast<double>(embeddings.size());
  out.rate = static_cast<double>(errors) / n;
  out.epsilon = total / n;
  out.bound = 2.0 * out.epsilon / out.rho;
  out.pass = out.rate <= out.bound + kInequalitySlack;
  out.vacuous = out.bound > 1.0;
  return out;
}

Prop1Result check_prop1(const ServerState& state, const LabeledDataset& data) {
  const auto ev = evaluate(state.theta, state.w, data);
  return check_prop1(state.w, ev.embeddings, ev.labels);
}

MetricsRecord make_record(std::size_t round, const EmbedderParams& theta,
                          const ClassEmbeddingMatrix& w,
                          const LabeledDataset& data,
                          const RecordOptions& options) {
  MetricsRecord r;
  r.round = round;
  if (data.size() == 0) return r;
  const auto ev = evaluate(theta, w, data, options.jobs);
  const std::size_t classes = w.classes();
  r.p1 = precision_at_k(ev.logits, ev.labels, std::min<std::size_t>(1, classes));
  r.p3 = precision_at_k(ev.logits, ev.labels, std::min<std::size_t>(3, classes));
  r.p5 = precision_at_k(ev.logits, ev.labels, std::min<std::size_t>(5, classes));
  double rpos = 0.0;
  double eps = 0.0;
  for (std::size_t i = 0; i < ev.logits.size(); ++i) {
    const double s_y = ev.logits[i][ev.labels[i]];
    rpos += pos_hinge_loss(s_y, options.positive_margin).value;
    eps += cosine_distance(ev.embeddings[i], w.row(ev.labels[i]));
  }
  const double n = static_cast<double>(ev.logits.size());
  r.rpos = rpos / n;
  r.epsilon = eps / n;
  r.reg = reg_sp(w, options.nu);
  if (classes < 2) {
    r.prop1_vacuous = true;
    return r;
  }
  r.rho = min_pairwise_cosine(w);
  try {
    const auto prop1 = check_prop1(w, ev.embeddings, ev.labels);
    r.prop1_pass = prop1.pass;
    r.prop1_vacuous = prop1.vacuous;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRhoZero) throw;
    r.prop1_pass = true;
    r.prop1_vacuous = true;
  }
  return r;
}

}  // namespace fedaws

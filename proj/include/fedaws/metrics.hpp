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
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedaws/data_io.hpp"
#include "fedaws/losses.hpp"
#include "fedaws/model.hpp"
#include "fedaws/state.hpp"

namespace fedaws {

// One evaluation of the model after a round.
struct MetricsRecord {
  std::size_t round = 0;
  double p1 = 0.0;
  double p3 = 0.0;
  double p5 = 0.0;
  double epsilon = 0.0;  // mean cosine distance to the true class row
  double rho = 0.0;      // min pairwise cosine distance between class rows
  double rpos = 0.0;     // mean positive hinge loss over the data
  double reg = 0.0;      // reg_sp(W, nu)
  bool prop1_pass = true;
  bool prop1_vacuous = false;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline constexpr std::string_view kMetricsCsvHeader =
    "round,p1,p3,p5,epsilon,rho,rpos,reg,prop1_pass,prop1_vacuous";

std::string to_csv_row(const MetricsRecord& record);
// Throws ParseError(line) on malformed rows.
MetricsRecord parse_csv_row(std::string_view row, std::size_t line = 1);
void write_metrics_csv(std::span<const MetricsRecord> records,
                       std::ostream& out);
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);

// Instance embeddings and logits of a dataset under a fixed model.
struct Evaluation {
  std::vector<DenseVector> embeddings;
  std::vector<LogitVector> logits;
  std::vector<ClassId> labels;
};
Evaluation evaluate(const EmbedderParams& theta, const ClassEmbeddingMatrix& w,
                    const LabeledDataset& data, std::size_t jobs = 1);

// Fraction of rows whose label ranks among the k largest logits; ties go to
// the lower class id. Throws kInvalidArgument when k > C or k == 0.
double precision_at_k(std::span<const LogitVector> logits,
                      std::span<const ClassId> labels, std::size_t k);
double precision_at_k(const ServerState& state, const LabeledDataset& data,
                      std::size_t k);

struct EpsilonRho {
  double epsilon = 0.0;
  double rho = 0.0;
};
// Cosine-distance epsilon and rho. Throws kSingleClass for C < 2 and
// kInvalidArgument for empty data.
EpsilonRho epsilon_rho(const ClassEmbeddingMatrix& w,
                       std::span<const DenseVector> embeddings,
                       std::span<const ClassId> labels);
EpsilonRho epsilon_rho(const ServerState& state, const LabeledDataset& data);

// Minimum pairwise distance between class rows under the given metric.
double min_pairwise_cosine(const ClassEmbeddingMatrix& w);
double min_pairwise_chord(const ClassEmbeddingMatrix& w);

// Misclassification rate (the true class is no strictly closer than some
// other class, so ties are errors) against the bound 2 eps / rho. Distances
// are Euclidean between unit vectors, the metric the bound needs.
struct Prop1Result {
  double rate = 0.0;
  double bound = 0.0;
  double epsilon = 0.0;  // chord
  double rho = 0.0;      // chord
  bool pass = true;
  bool vacuous = false;  // bound > 1
};
inline constexpr double kInequalitySlack = 1e-12;
// Throws kRhoZero when two class rows coincide.
Prop1Result check_prop1(const ClassEmbeddingMatrix& w,
                        std::span<const DenseVector> embeddings,
                        std::span<const ClassId> labels);
Prop1Result check_prop1(const ServerState& state, const LabeledDataset& data);

struct RecordOptions {
  double positive_margin = kDefaultPositiveMargin;
  Margin nu{};
  std::size_t jobs = 1;
};
MetricsRecord make_record(std::size_t round, const EmbedderParams& theta,
                          const ClassEmbeddingMatrix& w,
                          const LabeledDataset& data,
                          const RecordOptions& options);

}  // namespace fedaws

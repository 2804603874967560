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
#include <string_view>
#include <vector>

#include "fedaws/model.hpp"

namespace fedaws {

struct LabeledDataset {
  std::vector<SparseInstance> instances;
  std::vector<ClassId> labels;
  std::size_t classes = 0;
  std::size_t vocab = 0;

  std::size_t size() const noexcept { return instances.size(); }
  // Throws kInvalidArgument / kClassOutOfRange / kVocabOutOfRange.
  void validate() const;

  friend bool operator==(const LabeledDataset&,
                         const LabeledDataset&) = default;
};

// One client's positive-only data: every instance belongs to class_id.
struct ClientShard {
  ClassId class_id = 0;
  std::vector<SparseInstance> instances;

  std::size_t size() const noexcept { return instances.size(); }
};

struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t dim = 32;  // raw feature dimension
  std::size_t per_class = 50;
  double sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

// Parses "C=10,d=32,n=50,sigma=0.05" (any order, every key optional;
// seed=... also accepted). Throws kInvalidArgument.
SyntheticSpec parse_synthetic_spec(std::string_view text,
                                   SyntheticSpec defaults = {});

struct SyntheticData {
  LabeledDataset data;
  DenseMatrix prototypes;               // unit rows
  double min_prototype_distance = 0.0;  // min pairwise cosine distance
};

// Gaussian-then-normalized prototypes; each instance is
// normalize(prototype + sigma * N(0, I)), stored densely.
SyntheticData gen_synthetic(const SyntheticSpec& spec);
// Same sampling around caller-supplied prototypes (rows normalized first).
SyntheticData gen_from_prototypes(const DenseMatrix& prototypes,
                                  std::size_t per_class, double sigma,
                                  std::uint64_t seed);

struct ParseOptions {
  std::uint64_t seed = 0;  // drives multi-label reduction
  std::optional<std::size_t> classes;
  std::optional<std::size_t> vocab;
};

// One example per line: `label[,label...] idx:val idx:val ...`, 0-based
// indices. A leading `points features labels` header line is accepted and
// fixes the class and vocab sizes. Multi-label lines keep one label drawn
// uniformly from a stream keyed by (seed, line number).
LabeledDataset parse_sparse_dataset(std::istream& in,
                                    const ParseOptions& options = {});
LabeledDataset parse_sparse_dataset(std::string_view text,
                                    const ParseOptions& options = {});

// Canonical text form: indices ascending, values with 17 significant digits.
// The optional header line records points, vocab and classes so that empty
// trailing classes survive a reload.
void dump(const LabeledDataset& data, std::ostream& out,
          bool with_header = false);
std::string dump(const LabeledDataset& data, bool with_header = false);

struct ShardingResult {
  std::vector<ClientShard> shards;    // ascending class id
  std::vector<ClassId> empty_classes;  // classes with no instances
};
ShardingResult shard_by_label(const LabeledDataset& data);

// 17 significant digits, "." decimal point, independent of locale.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace fedaws

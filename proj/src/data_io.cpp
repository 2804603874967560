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

#include "fedaws/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "fedaws/error.hpp"
#include "fedaws/rng.hpp"

namespace fedaws {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' ||
                               text[i] == '\r')) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t' &&
           text[j] != '\r') {
      ++j;
    }
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_integer(std::string_view text, T& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

bool try_parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end && std::isfinite(value);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  if (!try_parse_double(text, value)) {
    throw Error(ErrorCode::kInvalidArgument,
                "not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

void LabeledDataset::validate() const {
  if (instances.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "instances/labels length");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels[i] >= classes) {
      throw Error(ErrorCode::kClassOutOfRange,
                  "label " + std::to_string(labels[i]));
    }
    instances[i].validate(vocab);
  }
}

void SyntheticSpec::validate() const {
  if (classes == 0 || dim == 0 || per_class == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "synthetic C, d and n must be positive");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic sigma must be >= 0");
  }
}

SyntheticSpec parse_synthetic_spec(std::string_view text,
                                   SyntheticSpec defaults) {
  SyntheticSpec spec = defaults;
  if (text.empty()) {
    spec.validate();
    return spec;
  }
  for (std::string_view item : split(text, ',')) {
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "expected key=value, got '" + std::string(item) + "'");
    }
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    bool ok = true;
    if (key == "C") {
      ok = parse_integer(value, spec.classes);
    } else if (key == "d") {
      ok = parse_integer(value, spec.dim);
    } else if (key == "n") {
      ok = parse_integer(value, spec.per_class);
    } else if (key == "sigma") {
      ok = try_parse_double(value, spec.sigma);
    } else if (key == "seed") {
      ok = parse_integer(value, spec.seed);
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown synthetic key '" + std::string(key) + "'");
    }
    if (!ok) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bad value for '" + std::string(key) + "'");
    }
  }
  spec.validate();
  return spec;
}

SyntheticData gen_from_prototypes(const DenseMatrix& prototypes,
                                  std::size_t per_class, double sigma,
                                  std::uint64_t seed) {
  SyntheticData out;
  out.prototypes = ClassEmbeddingMatrix(prototypes).matrix();
  const std::size_t classes = prototypes.rows();
  const std::size_t dim = prototypes.cols();
  Rng noise_rng = Rng(seed).fork(0x6e6f697365ULL);
  out.data.classes = classes;
  out.data.vocab = dim;
  DenseVector point(dim);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < per_class; ++j) {
      for (std::size_t i = 0; i < dim; ++i) {
        point[i] = out.prototypes(c, i) + sigma * noise_rng.gaussian();
      }
      out.data.instances.push_back(SparseInstance::dense(normalize(point)));
      out.data.labels.push_back(static_cast<ClassId>(c));
    }
  }
  out.min_prototype_distance = 2.0;
  for (std::size_t a = 0; a < classes; ++a) {
    for (std::size_t b = a + 1; b < classes; ++b) {
      out.min_prototype_distance =
          std::min(out.min_prototype_distance,
                   cosine_distance(out.prototypes.row(a), out.prototypes.row(b)));
    }
  }
  if (classes < 2) out.min_prototype_distance = 0.0;
  return out;
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng proto_rng = Rng(spec.seed).fork(0x70726f746fULL);
  DenseMatrix prototypes(spec.classes, spec.dim);
  for (double& v : prototypes.data()) v = proto_rng.gaussian();
  return gen_from_prototypes(prototypes, spec.per_class, spec.sigma, spec.seed);
}

LabeledDataset parse_sparse_dataset(std::istream& in,
                                    const ParseOptions& options) {
  LabeledDataset data;
  std::optional<std::size_t> classes = options.classes;
  std::optional<std::size_t> vocab = options.vocab;
  const Rng label_rng = Rng(options.seed).fork(0x6c6162656cULL);
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_label = 0;
  std::size_t max_index = 0;
  bool any_index = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    if (line_no == 1 && tokens.size() == 3 &&
        std::none_of(tokens.begin(), tokens.end(), [](std::string_view t) {
          return t.find(':') != std::string_view::npos ||
                 t.find(',') != std::string_view::npos;
        })) {
      std::size_t points = 0, features = 0, labels = 0;
      if (parse_integer(tokens[0], points) &&
          parse_integer(tokens[1], features) &&
          parse_integer(tokens[2], labels)) {
        if (!vocab) vocab = features;
        if (!classes) classes = labels;
        continue;
      }
    }
    if (tokens[0].find(':') != std::string_view::npos) {
      throw ParseError(line_no, "missing label");
    }
    std::vector<ClassId> candidates;
    for (std::string_view label_text : split(tokens[0], ',')) {
      ClassId label = 0;
      if (!parse_integer(label_text, label)) {
        throw ParseError(line_no,
                         "bad label '" + std::string(label_text) + "'");
      }
      candidates.push_back(label);
    }
    ClassId label = candidates.front();
    if (candidates.size() > 1) {
      Rng pick = label_rng.fork(line_no);
      label = candidates[pick.uniform_index(candidates.size())];
    }
    if (tokens.size() < 2) throw ParseError(line_no, "no features");
    std::vector<std::pair<std::uint32_t, double>> features;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::size_t colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no,
                         "expected idx:val, got '" + std::string(tokens[t]) + "'");
      }
      std::uint32_t index = 0;
      double value = 0.0;
      if (!parse_integer(tokens[t].substr(0, colon), index)) {
        throw ParseError(line_no, "bad index in '" + std::string(tokens[t]) + "'");
      }
      if (!try_parse_double(tokens[t].substr(colon + 1), value)) {
        throw ParseError(line_no, "bad value in '" + std::string(tokens[t]) + "'");
      }
      features.emplace_back(index, value);
    }
    std::sort(features.begin(), features.end());
    SparseInstance x;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i > 0 && features[i].first == features[i - 1].first) {
        throw ParseError(line_no, "duplicate index " +
                                      std::to_string(features[i].first));
      }
      x.indices.push_back(features[i].first);
      x.weights.push_back(features[i].second);
    }
    if (vocab && x.indices.back() >= *vocab) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "line " + std::to_string(line_no) + ": index " +
                      std::to_string(x.indices.back()) + " >= " +
                      std::to_string(*vocab));
    }
    if (classes && label >= *classes) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "line " + std::to_string(line_no) + ": label " +
                      std::to_string(label) + " >= " + std::to_string(*classes));
    }
    max_label = std::max<std::size_t>(max_label, label);
    max_index = std::max<std::size_t>(max_index, x.indices.back());
    any_index = true;
    data.instances.push_back(std::move(x));
    data.labels.push_back(label);
  }
  data.classes = classes.value_or(data.labels.empty() ? 0 : max_label + 1);
  data.vocab = vocab.value_or(any_index ? max_index + 1 : 0);
  return data;
}

LabeledDataset parse_sparse_dataset(std::string_view text,
                                    const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_sparse_dataset(in, options);
}

void dump(const LabeledDataset& data, std::ostream& out, bool with_header) {
  if (with_header) {
    out << data.size() << ' ' << data.vocab << ' ' << data.classes << '\n';
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    const auto& x = data.instances[i];
    for (std::size_t j = 0; j < x.indices.size(); ++j) {
      out << ' ' << x.indices[j] << ':' << format_double(x.weights[j]);
    }
    out << '\n';
  }
}

std::string dump(const LabeledDataset& data, bool with_header) {
  std::ostringstream out;
  dump(data, out, with_header);
  return out.str();
}

ShardingResult shard_by_label(const LabeledDataset& data) {
  std::map<ClassId, ClientShard> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& shard = by_class[data.labels[i]];
    shard.class_id = data.labels[i];
    shard.instances.push_back(data.instances[i]);
  }
  ShardingResult result;
  for (std::size_t c = 0; c < data.classes; ++c) {
    if (!by_class.contains(static_cast<ClassId>(c))) {
      result.empty_classes.push_back(static_cast<ClassId>(c));
    }
  }
  for (auto& [id, shard] : by_class) result.shards.push_back(std::move(shard));
  return result;
}

}  // namespace fedaws

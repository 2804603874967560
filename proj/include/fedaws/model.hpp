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
#include <functional>
#include <span>
#include <vector>

#include "fedaws/math.hpp"
#include "fedaws/rng.hpp"

namespace fedaws {

using ClassId = std::uint32_t;
using LogitVector = DenseVector;

// Sparse bag of weighted feature ids. Dense inputs use every index.
struct SparseInstance {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> weights;

  static SparseInstance dense(std::span<const double> values);
  // Throws kVocabOutOfRange, or kInvalidArgument on malformed structure.
  void validate(std::size_t vocab) const;

  friend bool operator==(const SparseInstance&,
                         const SparseInstance&) = default;
};

struct DenseLayer {
  DenseMatrix weight;  // out x in
  DenseVector bias;    // out
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Parameters of the instance embedder: a token lookup table averaged over
// the instance's features, then an MLP with ReLU on every layer but the last.
// With no layers the embedder is normalize(pooled lookup).
struct EmbedderParams {
  DenseMatrix token_table;  // vocab x embed_dim
  std::vector<DenseLayer> layers;

  std::size_t vocab() const noexcept { return token_table.rows(); }
  std::size_t input_dim() const noexcept { return token_table.cols(); }
  std::size_t output_dim() const noexcept;
  std::size_t parameter_count() const noexcept;

  friend bool operator==(const EmbedderParams&,
                         const EmbedderParams&) = default;
};

struct EmbedderShape {
  std::size_t vocab = 0;
  std::size_t embed_dim = 32;
  // Layer output sizes; the last entry is the class-embedding dimension.
  std::vector<std::size_t> layer_sizes{64, 64, 32};
};

// Weights Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for the table and every
// layer; biases zero.
EmbedderParams init_embedder(const EmbedderShape& shape, Rng& rng);
EmbedderParams zeros_like(const EmbedderParams& params);

// Views over every tensor in a fixed order: table, then (weight, bias) per
// layer.
std::vector<std::span<double>> tensors(EmbedderParams& params);
std::vector<std::span<const double>> tensors(const EmbedderParams& params);
std::vector<double> flatten(const EmbedderParams& params);
void unflatten(std::span<const double> flat, EmbedderParams& params);
// target += a * source (shapes must match)
void axpy(double a, const EmbedderParams& source, EmbedderParams& target);
bool all_finite(const EmbedderParams& params);

// Forward intermediates kept for backward().
struct EmbedderTrace {
  DenseVector pooled;
  std::vector<DenseVector> pre_activations;  // per layer
  DenseVector raw_output;                    // before normalization
  double raw_norm = 0.0;
  DenseVector embedding;                     // unit
};

EmbedderTrace forward(const EmbedderParams& params, const SparseInstance& x);
DenseVector embed(const EmbedderParams& params, const SparseInstance& x);

// Gradient of upstream . embed(params, x) with respect to every parameter.
EmbedderParams backward(const EmbedderParams& params, const SparseInstance& x,
                        std::span<const double> upstream);
// grad += scale * d(upstream . embedding)/d(params), reusing a forward trace.
void accumulate_backward(const EmbedderParams& params, const SparseInstance& x,
                         const EmbedderTrace& trace,
                         std::span<const double> upstream, double scale,
                         EmbedderParams& grad);
// Gradient of upstream . embedding with respect to the pooled lookup vector.
DenseVector backward_to_pooled(const EmbedderParams& params,
                               const EmbedderTrace& trace,
                               std::span<const double> upstream);

// C x d matrix whose rows stay unit-norm across every public mutation.
class ClassEmbeddingMatrix {
 public:
  ClassEmbeddingMatrix() = default;
  // Normalizes each row; throws kZeroNorm on a degenerate row.
  explicit ClassEmbeddingMatrix(DenseMatrix matrix);
  // Rows drawn uniformly on the unit sphere.
  static ClassEmbeddingMatrix random(std::size_t classes, std::size_t dim,
                                     Rng& rng);

  std::size_t classes() const noexcept { return matrix_.rows(); }
  std::size_t dim() const noexcept { return matrix_.cols(); }
  std::span<const double> row(std::size_t c) const { return matrix_.row(c); }
  const DenseMatrix& matrix() const noexcept { return matrix_; }

  // Stores normalize(values).
  void set_row(std::size_t c, std::span<const double> values);
  // Stores values bit-for-bit; throws kNotNormalized unless already unit.
  void set_unit_row(std::size_t c, std::span<const double> values);
  // W <- normalize_rows(W - rate * grad)
  void descend(const DenseMatrix& grad, double rate);

  friend bool operator==(const ClassEmbeddingMatrix&,
                         const ClassEmbeddingMatrix&) = default;

 private:
  DenseMatrix matrix_;
};

// s_c = w_c . g for every class.
LogitVector score(const ClassEmbeddingMatrix& w, std::span<const double> g);

// Central differences (L(p + h e_i) - L(p - h e_i)) / 2h per coordinate.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> point, double h);

enum class OptimizerKind { kSgd, kAdagrad };

struct OptimizerConfig {
  double embedding_rate = 0.1;  // token table, always plain SGD
  double layer_rate = 0.1;
  OptimizerKind layer_optimizer = OptimizerKind::kSgd;
  double adagrad_initial = 0.1;
  // Off by default: at the default init the raw embedder output is tiny, so
  // bias gradients (scaled by 1/|v|) swamp the weights and every input maps
  // to the same embedding within a few steps.
  bool train_bias = false;
};

// Applies one update to the embedder; holds Adagrad accumulators when used.
class EmbedderOptimizer {
 public:
  explicit EmbedderOptimizer(OptimizerConfig config) : config_(config) {}
  void step(EmbedderParams& params, const EmbedderParams& grad);

 private:
  OptimizerConfig config_;
  std::vector<std::vector<double>> accumulators_;
};

}  // namespace fedaws

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

#include "fedaws/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedaws/error.hpp"

namespace fedaws {

namespace {

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
  for (double& v : values) v = rng.uniform(-bound, bound);
}

// y = A x
void matvec(const DenseMatrix& a, std::span<const double> x,
            std::span<double> y) {
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
}

}  // namespace

SparseInstance SparseInstance::dense(std::span<const double> values) {
  SparseInstance x;
  x.indices.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    x.indices[i] = static_cast<std::uint32_t>(i);
  }
  x.weights.assign(values.begin(), values.end());
  return x;
}

void SparseInstance::validate(std::size_t vocab) const {
  if (indices.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "instance has no features");
  }
  if (indices.size() != weights.size()) {
    throw Error(ErrorCode::kInvalidArgument, "index/weight length mismatch");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= vocab) {
      throw Error(ErrorCode::kVocabOutOfRange,
                  "feature " + std::to_string(indices[i]) + " >= vocab " +
                      std::to_string(vocab));
    }
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "indices not strictly increasing");
    }
  }
}

std::size_t EmbedderParams::output_dim() const noexcept {
  return layers.empty() ? input_dim() : layers.back().bias.size();
}

std::size_t EmbedderParams::parameter_count() const noexcept {
  std::size_t n = token_table.data().size();
  for (const auto& l : layers) n += l.weight.data().size() + l.bias.size();
  return n;
}

EmbedderParams init_embedder(const EmbedderShape& shape, Rng& rng) {
  if (shape.vocab == 0 || shape.embed_dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty embedder shape");
  }
  EmbedderParams p;
  p.token_table = DenseMatrix(shape.vocab, shape.embed_dim);
  fill_uniform(p.token_table.data(),
               1.0 / std::sqrt(static_cast<double>(shape.embed_dim)), rng);
  std::size_t fan_in = shape.embed_dim;
  for (std::size_t out : shape.layer_sizes) {
    if (out == 0) throw Error(ErrorCode::kInvalidArgument, "zero layer size");
    DenseLayer layer{DenseMatrix(out, fan_in), DenseVector(out)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    fill_uniform(layer.weight.data(), bound, rng);
    // Biases start at zero; the embedding then starts scale-invariant.
    p.layers.push_back(std::move(layer));
    fan_in = out;
  }
  return p;
}

EmbedderParams zeros_like(const EmbedderParams& params) {
  EmbedderParams z;
  z.token_table = DenseMatrix(params.token_table.rows(),
                              params.token_table.cols());
  for (const auto& l : params.layers) {
    z.layers.push_back(
        {DenseMatrix(l.weight.rows(), l.weight.cols()), DenseVector(l.bias.size())});
  }
  return z;
}

std::vector<std::span<double>> tensors(EmbedderParams& params) {
  std::vector<std::span<double>> out{params.token_table.data()};
  for (auto& l : params.layers) {
    out.push_back(l.weight.data());
    out.push_back(l.bias.span());
  }
  return out;
}

std::vector<std::span<const double>> tensors(const EmbedderParams& params) {
  std::vector<std::span<const double>> out{params.token_table.data()};
  for (const auto& l : params.layers) {
    out.push_back(l.weight.data());
    out.push_back(l.bias.span());
  }
  return out;
}

std::vector<double> flatten(const EmbedderParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (auto t : tensors(params)) flat.insert(flat.end(), t.begin(), t.end());
  return flat;
}

void unflatten(std::span<const double> flat, EmbedderParams& params) {
  if (flat.size() != params.parameter_count()) {
    throw Error(ErrorCode::kShapeMismatch, "flat parameter length");
  }
  std::size_t offset = 0;
  for (auto t : tensors(params)) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(),
                t.begin());
    offset += t.size();
  }
}

void axpy(double a, const EmbedderParams& source, EmbedderParams& target) {
  auto src = tensors(source);
  auto dst = tensors(target);
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embedder layer count");
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].size() != dst[i].size()) {
      throw Error(ErrorCode::kShapeMismatch, "embedder tensor size");
    }
    axpy(a, src[i], dst[i]);
  }
}

bool all_finite(const EmbedderParams& params) {
  for (auto t : tensors(params)) {
    if (!all_finite(t)) return false;
  }
  return true;
}

EmbedderTrace forward(const EmbedderParams& params, const SparseInstance& x) {
  x.validate(params.vocab());
  EmbedderTrace trace;
  trace.pooled = DenseVector(params.input_dim());
  const double inv_count = 1.0 / static_cast<double>(x.indices.size());
  for (std::size_t i = 0; i < x.indices.size(); ++i) {
    axpy(x.weights[i] * inv_count, params.token_table.row(x.indices[i]),
         trace.pooled.span());
  }
  DenseVector activation = trace.pooled;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.weight.cols() != activation.size()) {
      throw Error(ErrorCode::kShapeMismatch, "layer input size");
    }
    DenseVector z(layer.weight.rows());
    matvec(layer.weight, activation, z.span());
    axpy(1.0, layer.bias, z.span());
    trace.pre_activations.push_back(z);
    if (l + 1 < params.layers.size()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    activation = std::move(z);
  }
  trace.raw_output = std::move(activation);
  trace.raw_norm = norm2(trace.raw_output);
  trace.embedding = normalize(trace.raw_output);
  return trace;
}

DenseVector embed(const EmbedderParams& params, const SparseInstance& x) {
  return forward(params, x).embedding;
}

namespace {

// Runs the chain rule from the unit embedding down to the pooled vector,
// optionally accumulating layer gradients.
DenseVector backprop_layers(const EmbedderParams& params,
                            const EmbedderTrace& trace,
                            std::span<const double> upstream, double scale,
                            EmbedderParams* grad) {
  const std::size_t d = trace.embedding.size();
  if (upstream.size() != d) {
    throw Error(ErrorCode::kShapeMismatch,
                "upstream dim " + std::to_string(upstream.size()) +
                    " vs embedding dim " + std::to_string(d));
  }
  // d(v/|v|)/dv = (I - g g^T) / |v|
  const double proj = dot(trace.embedding, upstream);
  DenseVector delta(d);
  for (std::size_t i = 0; i < d; ++i) {
    delta[i] = (upstream[i] - trace.embedding[i] * proj) / trace.raw_norm;
  }
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    const bool last = l + 1 == params.layers.size();
    if (!last) {
      const auto& z = trace.pre_activations[l];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(z[i] > 0.0)) delta[i] = 0.0;
      }
    }
    std::span<const double> input =
        l == 0 ? std::span<const double>(trace.pooled)
               : std::span<const double>(trace.pre_activations[l - 1]);
    DenseVector input_act(input);
    if (l > 0) {
      for (double& v : input_act) v = v > 0.0 ? v : 0.0;
    }
    if (grad != nullptr) {
      auto& g = grad->layers[l];
      for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
        if (delta[r] == 0.0) continue;
        axpy(scale * delta[r], input_act, g.weight.row(r));
        g.bias[r] += scale * delta[r];
      }
    }
    DenseVector prev(layer.weight.cols());
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      if (delta[r] == 0.0) continue;
      axpy(delta[r], layer.weight.row(r), prev.span());
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace

DenseVector backward_to_pooled(const EmbedderParams& params,
                               const EmbedderTrace& trace,
                               std::span<const double> upstream) {
  return backprop_layers(params, trace, upstream, 1.0, nullptr);
}

void accumulate_backward(const EmbedderParams& params, const SparseInstance& x,
                         const EmbedderTrace& trace,
                         std::span<const double> upstream, double scale,
                         EmbedderParams& grad) {
  DenseVector pooled_grad =
      backprop_layers(params, trace, upstream, scale, &grad);
  const double inv_count = 1.0 / static_cast<double>(x.indices.size());
  for (std::size_t i = 0; i < x.indices.size(); ++i) {
    axpy(scale * x.weights[i] * inv_count, pooled_grad,
         grad.token_table.row(x.indices[i]));
  }
}

EmbedderParams backward(const EmbedderParams& params, const SparseInstance& x,
                        std::span<const double> upstream) {
  if (upstream.size() != params.output_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "upstream dimension");
  }
  EmbedderParams grad = zeros_like(params);
  accumulate_backward(params, x, forward(params, x), upstream, 1.0, grad);
  return grad;
}

ClassEmbeddingMatrix::ClassEmbeddingMatrix(DenseMatrix matrix)
    : matrix_(std::move(matrix)) {
  for (std::size_t c = 0; c < matrix_.rows(); ++c) {
    normalize_in_place(matrix_.row(c));
  }
}

ClassEmbeddingMatrix ClassEmbeddingMatrix::random(std::size_t classes,
                                                  std::size_t dim, Rng& rng) {
  DenseMatrix m(classes, dim);
  for (double& v : m.data()) v = rng.gaussian();
  return ClassEmbeddingMatrix(std::move(m));
}

void ClassEmbeddingMatrix::set_row(std::size_t c,
                                   std::span<const double> values) {
  if (c >= classes()) {
    throw Error(ErrorCode::kClassOutOfRange, std::to_string(c));
  }
  if (values.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "row dimension");
  }
  DenseVector unit = normalize(values);
  std::copy(unit.begin(), unit.end(), matrix_.row(c).begin());
}

void ClassEmbeddingMatrix::set_unit_row(std::size_t c,
                                        std::span<const double> values) {
  if (c >= classes()) {
    throw Error(ErrorCode::kClassOutOfRange, std::to_string(c));
  }
  if (values.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "row dimension");
  }
  if (!is_unit(values)) {
    throw Error(ErrorCode::kNotNormalized, "row " + std::to_string(c));
  }
  std::copy(values.begin(), values.end(), matrix_.row(c).begin());
}

void ClassEmbeddingMatrix::descend(const DenseMatrix& grad, double rate) {
  if (grad.rows() != classes() || grad.cols() != dim()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient shape");
  }
  DenseMatrix next = matrix_;
  axpy(-rate, grad.data(), next.data());
  for (std::size_t c = 0; c < next.rows(); ++c) normalize_in_place(next.row(c));
  matrix_ = std::move(next);
}

LogitVector score(const ClassEmbeddingMatrix& w, std::span<const double> g) {
  if (g.size() != w.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding dim " + std::to_string(g.size()) + " vs class dim " +
                    std::to_string(w.dim()));
  }
  LogitVector s(w.classes());
  for (std::size_t c = 0; c < w.classes(); ++c) s[c] = dot(w.row(c), g);
  return s;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> point, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be > 0");
  std::vector<double> p(point.begin(), point.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double up = loss_fn(p);
    p[i] = orig - h;
    const double down = loss_fn(p);
    p[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

void EmbedderOptimizer::step(EmbedderParams& params,
                             const EmbedderParams& grad) {
  auto p = tensors(params);
  auto g = tensors(grad);
  if (p.size() != g.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer tensor count");
  }
  axpy(-config_.embedding_rate, g[0], p[0]);
  // Tensors alternate weight, bias after the table.
  const std::size_t stride = config_.train_bias ? 1 : 2;
  if (config_.layer_optimizer == OptimizerKind::kSgd) {
    for (std::size_t t = 1; t < p.size(); t += stride) {
      axpy(-config_.layer_rate, g[t], p[t]);
    }
    return;
  }
  if (accumulators_.empty()) {
    for (std::size_t t = 1; t < p.size(); ++t) {
      accumulators_.emplace_back(p[t].size(), config_.adagrad_initial);
    }
  }
  for (std::size_t t = 1; t < p.size(); t += stride) {
    auto& acc = accumulators_[t - 1];
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      acc[i] += g[t][i] * g[t][i];
      p[t][i] -= config_.layer_rate * g[t][i] / std::sqrt(acc[i]);
    }
  }
}

}  // namespace fedaws

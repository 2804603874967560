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

#include "fedaws/model.hpp"

namespace fedaws {

// Server-held model between rounds: embedder parameters and class
// embeddings (rows unit-norm).
struct ServerState {
  EmbedderParams theta;
  ClassEmbeddingMatrix w;
  std::size_t round = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ServerState&, const ServerState&) = default;
};

}  // namespace fedaws

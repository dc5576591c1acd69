// Copyright 2026-present the graphann project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

#include "graphann/graph_index.hpp"
#include "graphann/vector_store.hpp"

namespace graphann {

struct BuildParams {
    std::uint32_t max_degree = 32;   // R >= 2
    std::uint32_t build_beam = 64;   // Lb >= R
    float alpha = 1.2f;              // >= 1.0
    std::uint64_t seed = 1;
    KernelKind kernel = KernelKind::Vectorized;
    std::uint32_t threads = 0;       // 0 = hardware concurrency
    std::uint32_t prune_pool_cap = 0;  // 0 = 2 * build_beam

    void validate(std::size_t vertex_count) const;
};

/// Desk-scale graph construction: random R-regular initialization, then two
/// passes of greedy-search-and-robust-prune per vertex with parameter alpha
/// and reverse-edge insertion. Entry node is the medoid. Deterministic for a
/// fixed seed regardless of the thread count.
GraphIndex build_desk_index(const VectorStore& store, const BuildParams& params);

}  // namespace graphann

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
#include <span>
#include <string>
#include <vector>

#include "graphann/common.hpp"
#include "graphann/vector_store.hpp"

namespace graphann {

/// Directed similarity graph in CSR layout: one vertex per stored vector,
/// fixed adjacency lists, and a non-empty set of entry nodes. Immutable after
/// load/build; safe for unrestricted concurrent reads.
class GraphIndex {
public:
    GraphIndex(std::vector<std::uint64_t> offsets, std::vector<VertexId> neighbors,
               std::vector<VertexId> entry_nodes, std::uint32_t max_degree);

    std::size_t vertex_count() const { return offsets_.size() - 1; }
    std::uint32_t max_degree() const { return max_degree_; }
    std::uint64_t edge_count() const { return offsets_.back(); }
    const std::vector<VertexId>& entry_nodes() const { return entry_nodes_; }

    std::span<const VertexId> neighbors(VertexId v) const {
        return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
    }
    std::uint32_t degree(VertexId v) const {
        return static_cast<std::uint32_t>(offsets_[v + 1] - offsets_[v]);
    }

    const std::vector<std::uint64_t>& offsets() const { return offsets_; }
    const std::vector<VertexId>& neighbor_array() const { return neighbors_; }

    /// Validates all structural invariants; throws DataError naming the first
    /// offending vertex. Called by the constructor.
    void validate() const;

private:
    std::vector<std::uint64_t> offsets_;   // length N+1, non-decreasing
    std::vector<VertexId> neighbors_;      // flat adjacency, offsets_[N] entries
    std::vector<VertexId> entry_nodes_;
    std::uint32_t max_degree_;
};

/// Binary graph format: magic "AVGR", u32 version=1, u64 N, u32 max_degree,
/// u32 entry-count, entry ids (u32 each), offsets (u64 x N+1), neighbors
/// (u32 x offsets[N]). All little-endian.
GraphIndex load_graph(const std::string& path);
void save_graph(const GraphIndex& index, const std::string& path);

/// Vertex with minimal distance to the arithmetic-mean vector, ties broken by
/// smaller id.
VertexId medoid(const VectorStore& store, KernelKind kernel = KernelKind::Vectorized);

}  // namespace graphann

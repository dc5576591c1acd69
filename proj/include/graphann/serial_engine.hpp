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
#include <vector>

#include "graphann/candidate_queue.hpp"
#include "graphann/common.hpp"
#include "graphann/graph_index.hpp"
#include "graphann/vector_store.hpp"

namespace graphann {

struct SearchParams {
    std::uint32_t L = 100;  // queue capacity, >= K
    std::uint32_t K = 10;   // result count, >= 1
    KernelKind kernel = KernelKind::Vectorized;
    bool debug_checks = false;

    void validate(std::size_t vertex_count) const;
};

/// Per-query work/byte counters; bytes follow the logical-bandwidth
/// convention: dim*4 bytes per distance evaluation plus the neighbor-list
/// bytes scanned.
struct SearchCounters {
    std::uint64_t dist_evals = 0;
    std::uint64_t expansions = 0;
    std::uint64_t bytes_vectors = 0;
    std::uint64_t bytes_neighbors = 0;

    std::uint64_t bytes_touched() const { return bytes_vectors + bytes_neighbors; }

    SearchCounters& operator+=(const SearchCounters& o) {
        dist_evals += o.dist_evals;
        expansions += o.expansions;
        bytes_vectors += o.bytes_vectors;
        bytes_neighbors += o.bytes_neighbors;
        return *this;
    }
};

/// Ordered list of expanded vertex ids for one query; no vertex twice.
using ExpansionTrace = std::vector<VertexId>;

/// Timed per-vertex work record; parallel engines emit these so the harness
/// can classify time as expand vs redundant against a serial reference.
struct TraceEvent {
    VertexId id;
    std::uint64_t duration_ns;
};

struct SerialResult {
    std::vector<VertexId> results;      // ascending (dist, id), size min(K, reachable)
    std::vector<float> result_dists;
    ExpansionTrace trace;
    SearchCounters counters;
    bool short_result = false;          // reachable set was smaller than K
};

/// Reusable per-thread scratch so repeated searches avoid O(N) allocations.
struct SerialSearchContext {
    VisitSet visits;
    CandidateQueue queue;
    std::vector<Candidate> batch;

    explicit SerialSearchContext(std::size_t vertex_count = 0) : visits(vertex_count) {}
};

/// One expand step: marks v checked; every unvisited neighbor u of v gets its
/// distance computed, is marked visited, and is merged into the queue
/// unchecked. Returns the number of merged candidates. v must be present in
/// the queue at position pos and unchecked.
std::size_t expand(std::size_t pos, const float* query, CandidateQueue& queue,
                   const GraphIndex& graph, const VectorStore& store, VisitSet& visits,
                   KernelKind kernel, SearchCounters& counters,
                   std::vector<Candidate>& batch_scratch);

/// Serial best-first search: repeatedly expands the first unchecked candidate
/// and resizes the queue to L, until no unchecked candidate remains. Returns
/// the first K vertices of the final queue plus the ordered expansion trace.
/// Deterministic given its inputs.
SerialResult best_first_search(const float* query, const GraphIndex& graph,
                               const VectorStore& store, const SearchParams& params,
                               SerialSearchContext& ctx);

SerialResult best_first_search(const float* query, const GraphIndex& graph,
                               const VectorStore& store, const SearchParams& params);

}  // namespace graphann

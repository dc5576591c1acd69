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
#include <vector>

#include "graphann/serial_engine.hpp"

namespace graphann {

struct PathwiseParams {
    std::uint32_t threads = 1;  // worker threads per query (the master joins on top)
    std::uint32_t width = 1;    // max expansions per worker per epoch
    SearchParams base;

    void validate(std::size_t vertex_count) const;
};

/// Raw material for the metrics harness: per-thread expansion traces with
/// durations, the master's serial time, and barrier wait times. The
/// expand/redundant split is classified post-hoc against a serial reference.
struct PathwiseResult {
    std::vector<VertexId> results;
    std::vector<float> result_dists;
    std::vector<std::vector<TraceEvent>> thread_traces;  // one per worker
    SearchCounters counters;
    std::uint64_t wall_ns = 0;
    std::uint64_t master_serial_ns = 0;  // scatter + merge + resize
    std::uint64_t barrier_wait_ns = 0;   // summed over master and workers
    std::uint64_t epochs = 0;
    bool short_result = false;

    ExpansionTrace merged_trace() const;
};

/// Fork-join path-wise search: each epoch round-robins the global queue's
/// unchecked candidates into thread-local sub-queues, lets every worker expand
/// up to `width` first-unchecked candidates (shared visited set, atomic
/// test-and-set), then the master merges the locals back and resizes to L.
/// With threads=1, width=1 the result and trace are bit-identical to
/// best_first_search.
PathwiseResult pathwise_search(const float* query, const GraphIndex& graph,
                               const VectorStore& store, const PathwiseParams& params);

}  // namespace graphann

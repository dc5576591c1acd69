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
#include <string>
#include <vector>

#include "graphann/async_engine.hpp"
#include "graphann/pathwise_engine.hpp"
#include "graphann/serial_engine.hpp"
#include "graphann/vector_store.hpp"

namespace graphann {

/// Mean over queries of |results ∩ true top-K| / K.
double recall_at_k(const std::vector<std::vector<VertexId>>& results, const GroundTruth& gt,
                   std::uint32_t k);

/// RR = |expanded_parallel \ expanded_serial| / |expanded_parallel| for one
/// query; 0 by convention when the parallel trace is empty. Both traces must
/// come from the same query, graph, and L.
double redundant_ratio(const ExpansionTrace& parallel_trace, const ExpansionTrace& serial_trace);

/// Logical effective bandwidth in GB/s: (bytes / wall) * (1 - rr). Bytes are
/// the logical bytes-touched proxy, not a hardware counter.
double effective_bandwidth_gbps(std::uint64_t bytes_touched, std::uint64_t wall_ns, double rr);

/// CPU-time split into the four categories; sync is the residual of the
/// total thread time after serial and the classified expansions.
struct BreakdownTimes {
    std::uint64_t serial_ns = 0;
    std::uint64_t expand_ns = 0;
    std::uint64_t redundant_ns = 0;
    std::uint64_t sync_ns = 0;
    std::uint64_t total_thread_ns = 0;
    std::uint64_t expand_count = 0;
    std::uint64_t redundant_count = 0;

    BreakdownTimes& operator+=(const BreakdownTimes& o);
};

/// Serial reference for one (query, graph, L): the expanded set and results.
struct SerialReference {
    std::vector<VertexId> expanded_sorted;  // ascending ids
    std::vector<VertexId> results;

    bool contains(VertexId v) const;
};

SerialReference make_serial_reference(const SerialResult& r);

BreakdownTimes classify_pathwise(const PathwiseResult& r, const SerialReference& ref);
BreakdownTimes classify_async(const AsyncResult& r, std::uint32_t total_threads,
                              const SerialReference& ref);

struct BreakdownFractions {
    double serial = 0, expand = 0, redundant = 0, sync = 0;
};

BreakdownFractions to_fractions(const BreakdownTimes& t);

/// Aggregate metrics for one configuration.
struct SearchReport {
    std::uint64_t queries = 0;
    std::uint32_t repetitions = 0;
    double qps = 0;
    double mean_latency_ms = 0;
    double p50_latency_ms = 0;
    double p99_latency_ms = 0;
    double latency_pass_variance_ms2 = 0;  // variance of per-pass mean latencies
    double recall = 0;
    double mean_rr = 0;
    double logical_pmb_gbps = 0;  // bytes-touched rate, labeled logical
    double logical_emb_gbps = 0;  // logical_pmb * (1 - mean_rr)
    BreakdownFractions breakdown;
    double littles_law_ratio = 0;  // qps * mean latency / inter, ~1 when saturated
    double mean_expansions = 0;
    double mean_redundant_expansions = 0;
    double mean_dist_evals = 0;
    double mean_bytes_touched = 0;
    std::uint64_t short_results = 0;
};

}  // namespace graphann

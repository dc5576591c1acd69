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

#include "graphann/serial_engine.hpp"

namespace graphann {

void SearchParams::validate(std::size_t vertex_count) const {
    if (K < 1) throw UsageError("search: K must be >= 1");
    if (L < K) throw UsageError("search: L must be >= K");
    if (vertex_count == 0) throw UsageError("search: empty graph");
}

std::size_t expand(std::size_t pos, const float* query, CandidateQueue& queue,
                   const GraphIndex& graph, const VectorStore& store, VisitSet& visits,
                   KernelKind kernel, SearchCounters& counters,
                   std::vector<Candidate>& batch) {
    VertexId v = queue[pos].id;
    queue.mark_checked(pos);
    ++counters.expansions;

    auto nbrs = graph.neighbors(v);
    counters.bytes_neighbors += nbrs.size() * sizeof(VertexId);

    batch.clear();
    for (VertexId u : nbrs) {
        if (visits.test(u)) continue;
        visits.mark(u);
        float d = store.query_distance(query, u, kernel);
        ++counters.dist_evals;
        counters.bytes_vectors += std::uint64_t(store.dim()) * sizeof(float);
        batch.push_back({u, d, false});
    }
    queue.merge(batch);
    return batch.size();
}

SerialResult best_first_search(const float* query, const GraphIndex& graph,
                               const VectorStore& store, const SearchParams& params,
                               SerialSearchContext& ctx) {
    params.validate(graph.vertex_count());

    ctx.visits.begin_query();
    ctx.queue.clear();

    SerialResult out;

    // seed the queue with the entry-node set, in entry order
    ctx.batch.clear();
    for (VertexId e : graph.entry_nodes()) {
        if (ctx.visits.test(e)) continue;
        ctx.visits.mark(e);
        float d = store.query_distance(query, e, params.kernel);
        ++out.counters.dist_evals;
        out.counters.bytes_vectors += std::uint64_t(store.dim()) * sizeof(float);
        ctx.batch.push_back({e, d, false});
    }
    ctx.queue.merge(ctx.batch);

    while (true) {
        std::size_t pos = ctx.queue.first_unchecked();
        if (pos == CandidateQueue::npos) break;
        out.trace.push_back(ctx.queue[pos].id);
        expand(pos, query, ctx.queue, graph, store, ctx.visits, params.kernel, out.counters,
               ctx.batch);
        if (ctx.queue.size() > params.L) {
            ctx.queue.resize_to(params.L);
        }
        if (params.debug_checks) {
            ctx.queue.check_invariants();
        }
    }

    std::size_t n = std::min<std::size_t>(params.K, ctx.queue.size());
    out.results.reserve(n);
    out.result_dists.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.results.push_back(ctx.queue[i].id);
        out.result_dists.push_back(ctx.queue[i].dist);
    }
    out.short_result = out.results.size() < params.K;
    return out;
}

SerialResult best_first_search(const float* query, const GraphIndex& graph,
                               const VectorStore& store, const SearchParams& params) {
    SerialSearchContext ctx(graph.vertex_count());
    return best_first_search(query, graph, store, params, ctx);
}

}  // namespace graphann

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

#include "graphann/pathwise_engine.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <thread>

namespace graphann {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

}  // namespace

void PathwiseParams::validate(std::size_t vertex_count) const {
    base.validate(vertex_count);
    if (threads < 1) throw UsageError("pathwise: threads must be >= 1");
    if (width < 1) throw UsageError("pathwise: width must be >= 1");
}

ExpansionTrace PathwiseResult::merged_trace() const {
    ExpansionTrace merged;
    for (const auto& t : thread_traces) {
        for (const auto& e : t) merged.push_back(e.id);
    }
    return merged;
}

PathwiseResult pathwise_search(const float* query, const GraphIndex& graph,
                               const VectorStore& store, const PathwiseParams& params) {
    params.validate(graph.vertex_count());
    const std::uint32_t T = params.threads;
    const auto wall_start = Clock::now();

    PathwiseResult out;
    out.thread_traces.resize(T);

    AtomicVisitSet visits(graph.vertex_count());
    visits.begin_query();

    CandidateQueue global;
    std::vector<Candidate> batch;
    for (VertexId e : graph.entry_nodes()) {
        if (!visits.try_mark(e)) continue;
        float d = store.query_distance(query, e, params.base.kernel);
        ++out.counters.dist_evals;
        out.counters.bytes_vectors += std::uint64_t(store.dim()) * sizeof(float);
        batch.push_back({e, d, false});
    }
    global.merge(batch);

    std::vector<CandidateQueue> locals(T);
    std::vector<SearchCounters> worker_counters(T);
    std::vector<std::uint64_t> worker_barrier_ns(T, 0);
    std::atomic<bool> stop{false};
    std::barrier start_barrier(T + 1);
    std::barrier end_barrier(T + 1);

    auto worker_body = [&](std::uint32_t w) {
        auto& local = locals[w];
        auto& counters = worker_counters[w];
        auto& trace = out.thread_traces[w];
        std::vector<Candidate> local_batch;
        while (true) {
            auto tw = Clock::now();
            start_barrier.arrive_and_wait();
            worker_barrier_ns[w] += ns_since(tw);
            if (stop.load(std::memory_order_acquire)) return;

            for (std::uint32_t step = 0; step < params.width; ++step) {
                std::size_t pos = local.first_unchecked();
                if (pos == CandidateQueue::npos) break;
                VertexId v = local[pos].id;
                auto t0 = Clock::now();
                local.mark_checked(pos);
                ++counters.expansions;
                auto nbrs = graph.neighbors(v);
                counters.bytes_neighbors += nbrs.size() * sizeof(VertexId);
                local_batch.clear();
                for (VertexId u : nbrs) {
                    if (visits.test(u)) continue;
                    if (!visits.try_mark(u)) continue;
                    float d = store.query_distance(query, u, params.base.kernel);
                    ++counters.dist_evals;
                    counters.bytes_vectors += std::uint64_t(store.dim()) * sizeof(float);
                    local_batch.push_back({u, d, false});
                }
                local.merge(local_batch);
                trace.push_back({v, ns_since(t0)});
            }

            tw = Clock::now();
            end_barrier.arrive_and_wait();
            worker_barrier_ns[w] += ns_since(tw);
        }
    };

    std::vector<std::thread> workers;
    workers.reserve(T);
    for (std::uint32_t w = 0; w < T; ++w) workers.emplace_back(worker_body, w);

    std::uint64_t master_serial_ns = 0;
    std::uint64_t master_barrier_ns = 0;
    std::vector<Candidate> merged;
    while (true) {
        auto ts = Clock::now();
        if (global.unchecked_count() == 0) {
            master_serial_ns += ns_since(ts);
            stop.store(true, std::memory_order_release);
            start_barrier.arrive_and_wait();
            break;
        }
        // round-robin scatter of unchecked candidates, by queue rank
        std::size_t k = 0;
        merged.clear();
        for (std::size_t i = 0; i < global.size(); ++i) {
            const Candidate& c = global[i];
            if (c.checked) {
                merged.push_back(c);
            } else {
                // queue rank order, so per-local appends stay sorted
                locals[k % T].append_back(c);
                ++k;
            }
        }
        // the global queue keeps only its checked entries during the epoch
        global.clear();
        global.merge(merged);
        master_serial_ns += ns_since(ts);

        auto tb = Clock::now();
        start_barrier.arrive_and_wait();
        end_barrier.arrive_and_wait();
        master_barrier_ns += ns_since(tb);

        ts = Clock::now();
        ++out.epochs;
        merged.assign(global.entries().begin(), global.entries().end());
        for (auto& local : locals) {
            merged.insert(merged.end(), local.entries().begin(), local.entries().end());
            local.clear();
        }
        std::sort(merged.begin(), merged.end(), candidate_less);
        global.clear();
        global.merge(merged);
        if (global.size() > params.base.L) global.resize_to(params.base.L);
        if (params.base.debug_checks) global.check_invariants();
        master_serial_ns += ns_since(ts);
    }

    for (auto& w : workers) w.join();

    for (std::uint32_t w = 0; w < T; ++w) {
        out.counters += worker_counters[w];
        out.barrier_wait_ns += worker_barrier_ns[w];
    }
    out.barrier_wait_ns += master_barrier_ns;
    out.master_serial_ns = master_serial_ns;

    std::size_t n = std::min<std::size_t>(params.base.K, global.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.results.push_back(global[i].id);
        out.result_dists.push_back(global[i].dist);
    }
    out.short_result = out.results.size() < params.base.K;
    out.wall_ns = ns_since(wall_start);
    return out;
}

}  // namespace graphann

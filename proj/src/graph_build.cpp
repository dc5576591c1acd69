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

#include "graphann/graph_build.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "graphann/candidate_queue.hpp"

namespace graphann {

void BuildParams::validate(std::size_t vertex_count) const {
    if (max_degree < 2) throw UsageError("build: max_degree must be >= 2");
    if (build_beam < max_degree) throw UsageError("build: build_beam must be >= max_degree");
    if (alpha < 1.0f) throw UsageError("build: alpha must be >= 1.0");
    if (vertex_count < std::size_t(max_degree) + 1) {
        throw UsageError("build: need at least max_degree+1 vectors (N=" +
                         std::to_string(vertex_count) + ", R=" + std::to_string(max_degree) + ")");
    }
}

namespace {

struct ScoredVertex {
    VertexId id;
    float dist;
};

inline bool scored_less(const ScoredVertex& a, const ScoredVertex& b) {
    return pack_key(a.dist, a.id) < pack_key(b.dist, b.id);
}

// Beam search over the in-progress adjacency, collecting every vertex whose
// distance to the target got computed (the candidate pool for pruning).
void greedy_collect(const std::vector<std::vector<VertexId>>& adj, const VectorStore& store,
                    VertexId entry, const float* target, std::uint32_t beam, KernelKind kernel,
                    VisitSet& visits, std::vector<ScoredVertex>& pool) {
    pool.clear();
    visits.begin_query();

    CandidateQueue queue;
    std::vector<Candidate> batch;

    visits.mark(entry);
    float d0 = store.query_distance(target, entry, kernel);
    pool.push_back({entry, d0});
    batch.push_back({entry, d0, false});
    queue.merge(batch);

    while (true) {
        std::size_t pos = queue.first_unchecked();
        if (pos == CandidateQueue::npos) break;
        VertexId v = queue[pos].id;
        queue.mark_checked(pos);
        batch.clear();
        for (VertexId u : adj[v]) {
            if (visits.test(u)) continue;
            visits.mark(u);
            float d = store.query_distance(target, u, kernel);
            pool.push_back({u, d});
            batch.push_back({u, d, false});
        }
        queue.merge(batch);
        if (queue.size() > beam) queue.resize_to(beam);
    }
}

// Keeps up to max_degree diverse neighbors: repeatedly select the closest
// survivor, then drop candidates it occludes (alpha * d(selected, c) <=
// d(vertex, c)). Remaining slots are backfilled with the closest pruned
// candidates so the degree reaches min(max_degree, pool size).
void robust_prune(VertexId vertex, std::vector<ScoredVertex>& pool, const VectorStore& store,
                  float alpha, std::uint32_t max_degree, KernelKind kernel,
                  std::vector<VertexId>& out) {
    out.clear();
    std::sort(pool.begin(), pool.end(), scored_less);
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [](const ScoredVertex& a, const ScoredVertex& b) { return a.id == b.id; }),
               pool.end());
    std::erase_if(pool, [&](const ScoredVertex& s) { return s.id == vertex; });

    std::vector<std::uint8_t> occluded(pool.size(), 0);
    std::vector<std::uint8_t> selected(pool.size(), 0);
    for (std::size_t i = 0; i < pool.size() && out.size() < max_degree; ++i) {
        if (occluded[i]) continue;
        selected[i] = 1;
        out.push_back(pool[i].id);
        const float* sel = store.row_ptr(pool[i].id);
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            if (occluded[j]) continue;
            float d_sel = distance_raw(sel, store.row_ptr(pool[j].id), store.dim(), store.metric(),
                                       kernel);
            if (alpha * d_sel <= pool[j].dist) occluded[j] = 1;
        }
    }
    for (std::size_t i = 0; out.size() < max_degree && i < pool.size(); ++i) {
        if (!selected[i]) out.push_back(pool[i].id);
    }
}

}  // namespace

GraphIndex build_desk_index(const VectorStore& store, const BuildParams& params) {
    params.validate(store.count());
    const std::size_t n = store.count();
    const std::uint32_t r = params.max_degree;
    const std::uint32_t pool_cap =
        params.prune_pool_cap > 0 ? params.prune_pool_cap : 2 * params.build_beam;

    // random R-regular start, one RNG walked in vertex order
    std::vector<std::vector<VertexId>> adj(n);
    {
        std::mt19937_64 rng(params.seed);
        std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
        std::vector<std::uint8_t> used(n, 0);
        for (std::size_t v = 0; v < n; ++v) {
            auto& list = adj[v];
            list.reserve(r);
            used[v] = 1;
            while (list.size() < r) {
                auto u = static_cast<VertexId>(pick(rng));
                if (used[u]) continue;
                used[u] = 1;
                list.push_back(u);
            }
            used[v] = 0;
            for (VertexId u : list) used[u] = 0;
        }
    }

    const VertexId entry = medoid(store, params.kernel);

    std::size_t workers = params.threads > 0 ? params.threads : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min<std::size_t>(workers, 16));
    const std::size_t batch_size = 64;

    std::vector<std::vector<ScoredVertex>> pools(batch_size);
    std::vector<VertexId> pruned;
    std::vector<ScoredVertex> reverse_pool;

    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t batch_start = 0; batch_start < n; batch_start += batch_size) {
            std::size_t batch_end = std::min(n, batch_start + batch_size);

            // searches run against the adjacency frozen at batch start, so the
            // result is independent of the worker count
            auto search_one = [&](std::size_t idx, VisitSet& visits) {
                auto v = static_cast<VertexId>(batch_start + idx);
                greedy_collect(adj, store, entry, store.row_ptr(v), params.build_beam,
                               params.kernel, visits, pools[idx]);
            };
            if (workers <= 1 || batch_end - batch_start < 2) {
                VisitSet visits(n);
                for (std::size_t i = 0; i < batch_end - batch_start; ++i) search_one(i, visits);
            } else {
                std::atomic<std::size_t> next{0};
                std::vector<std::thread> pool_threads;
                for (std::size_t w = 0; w < workers; ++w) {
                    pool_threads.emplace_back([&] {
                        VisitSet visits(n);
                        for (std::size_t i = next.fetch_add(1); i < batch_end - batch_start;
                             i = next.fetch_add(1)) {
                            search_one(i, visits);
                        }
                    });
                }
                for (auto& t : pool_threads) t.join();
            }

            // prune and wire edges serially, in vertex order
            for (std::size_t i = 0; i < batch_end - batch_start; ++i) {
                auto v = static_cast<VertexId>(batch_start + i);
                auto& pool = pools[i];
                for (VertexId u : adj[v]) {
                    float d = distance_raw(store.row_ptr(v), store.row_ptr(u), store.dim(),
                                           store.metric(), params.kernel);
                    pool.push_back({u, d});
                }
                if (pool.size() > pool_cap) {
                    std::nth_element(pool.begin(), pool.begin() + pool_cap, pool.end(), scored_less);
                    pool.resize(pool_cap);
                }
                robust_prune(v, pool, store, params.alpha, r, params.kernel, pruned);
                adj[v] = pruned;

                for (VertexId u : adj[v]) {
                    auto& back = adj[u];
                    if (std::find(back.begin(), back.end(), v) != back.end()) continue;
                    back.push_back(v);
                    if (back.size() > r) {
                        reverse_pool.clear();
                        for (VertexId w : back) {
                            float d = distance_raw(store.row_ptr(u), store.row_ptr(w), store.dim(),
                                                   store.metric(), params.kernel);
                            reverse_pool.push_back({w, d});
                        }
                        robust_prune(u, reverse_pool, store, params.alpha, r, params.kernel, pruned);
                        back = pruned;
                    }
                }
            }
        }
    }

    // freeze to CSR
    std::vector<std::uint64_t> offsets(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) offsets[v + 1] = offsets[v] + adj[v].size();
    std::vector<VertexId> neighbors;
    neighbors.reserve(offsets[n]);
    for (std::size_t v = 0; v < n; ++v) {
        neighbors.insert(neighbors.end(), adj[v].begin(), adj[v].end());
    }
    return GraphIndex(std::move(offsets), std::move(neighbors), {entry}, r);
}

}  // namespace graphann

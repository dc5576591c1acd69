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

#include "graphann/async_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "graphann/graph_index.hpp"

namespace graphann {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

inline void cpu_pause() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#else
    std::this_thread::yield();
#endif
}

// short spin, then hand the core back; the whole engine must stay polite
// under heavy oversubscription
inline void relax(unsigned round) {
    if (round < 16) {
        cpu_pause();
    } else {
        std::this_thread::yield();
    }
}

}  // namespace

void AsyncParams::validate(std::size_t vertex_count) const {
    base.validate(vertex_count);
    if (groups < 1 || groups > 64) throw UsageError("async: groups must be in [1,64]");
    if (inline_fraction < 0.0f || inline_fraction > 1.0f) {
        throw UsageError("async: inline_fraction must be in [0,1]");
    }
    if (balancer_period < 1) throw UsageError("async: balancer_period must be >= 1");
    if (offload_watermark < 1.0f) throw UsageError("async: offload_watermark must be >= 1");
    if (pull_watermark > 1.0f || pull_watermark <= 0.0f) {
        throw UsageError("async: pull_watermark must be in (0,1]");
    }
}

void DistanceBoard::reset(std::size_t n) {
    size_ = n;
    slots_ = n ? std::make_unique<Slot[]>(n) : nullptr;
    epoch_ = 0;
}

void DistanceBoard::begin_query() {
    if (++epoch_ == 0) {
        for (std::size_t i = 0; i < size_; ++i) {
            slots_[i].claim.store(0, std::memory_order_relaxed);
            slots_[i].ready.store(0, std::memory_order_relaxed);
        }
        epoch_ = 1;
    }
}

void GlobalBuffer::clear() {
    std::lock_guard lock(mu_);
    pool_.clear();
    size_.store(0, std::memory_order_release);
}

void GlobalBuffer::push_batch(std::span<const Candidate> batch) {
    if (batch.empty()) return;
    std::lock_guard lock(mu_);
    pool_.insert(pool_.end(), batch.begin(), batch.end());
    size_.store(pool_.size(), std::memory_order_release);
}

std::size_t GlobalBuffer::pop_batch(std::size_t max_n, std::vector<Candidate>& out) {
    std::lock_guard lock(mu_);
    std::size_t take = std::min(max_n, pool_.size());
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back(pool_.back());
        pool_.pop_back();
    }
    size_.store(pool_.size(), std::memory_order_release);
    return take;
}

void SubQueueView::reset(std::size_t capacity) {
    capacity_ = capacity;
    keys_ = std::make_unique<std::atomic<std::uint64_t>[]>(capacity);
    checked_ = std::make_unique<std::atomic<std::uint8_t>[]>(capacity);
    published_len_.store(0, std::memory_order_relaxed);
    true_len_.store(0, std::memory_order_relaxed);
    true_unchecked_.store(0, std::memory_order_relaxed);
}

void SubQueueView::publish(const CandidateQueue& queue) {
    std::size_t pub = std::min(queue.size(), capacity_);
    std::uint64_t v = version_.load(std::memory_order_relaxed);
    version_.store(v + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    for (std::size_t i = 0; i < pub; ++i) {
        keys_[i].store(queue[i].key(), std::memory_order_relaxed);
        checked_[i].store(queue[i].checked ? 1 : 0, std::memory_order_relaxed);
    }
    published_len_.store(pub, std::memory_order_relaxed);
    true_len_.store(queue.size(), std::memory_order_relaxed);
    true_unchecked_.store(queue.unchecked_count(), std::memory_order_relaxed);
    version_.store(v + 2, std::memory_order_release);
    version_.notify_all();
}

void SubQueueView::bump() {
    version_.fetch_add(2, std::memory_order_acq_rel);
    version_.notify_all();
}

void SubQueueView::snapshot_into(Snapshot& out) const {
    unsigned round = 0;
    while (true) {
        std::uint64_t v1 = version_.load(std::memory_order_acquire);
        if (v1 & 1) {
            relax(round++);
            continue;
        }
        std::size_t pub = published_len_.load(std::memory_order_relaxed);
        if (pub > capacity_) pub = capacity_;
        out.keys.resize(pub);
        out.checked.resize(pub);
        for (std::size_t i = 0; i < pub; ++i) {
            out.keys[i] = keys_[i].load(std::memory_order_relaxed);
            out.checked[i] = checked_[i].load(std::memory_order_relaxed);
        }
        out.true_len = true_len_.load(std::memory_order_relaxed);
        out.true_unchecked = true_unchecked_.load(std::memory_order_relaxed);
        std::atomic_thread_fence(std::memory_order_acquire);
        if (version_.load(std::memory_order_relaxed) == v1) {
            out.version = v1;
            return;
        }
        relax(round++);
    }
}

void SubQueueView::wait_change(std::uint64_t seen, const std::atomic<bool>& done) const {
    for (unsigned i = 0; i < 64; ++i) {
        if (version_.load(std::memory_order_acquire) != seen ||
            done.load(std::memory_order_acquire)) {
            return;
        }
        cpu_pause();
    }
    while (version_.load(std::memory_order_acquire) == seen &&
           !done.load(std::memory_order_acquire)) {
        version_.wait(seen, std::memory_order_acquire);
    }
}

float estimate_l_threshold(const std::vector<std::vector<float>>& snapshots, std::uint32_t L) {
    std::size_t total = 0;
    for (const auto& s : snapshots) total += s.size();
    if (total <= L) return kInfDist;

    std::vector<std::size_t> ptr(snapshots.size());
    for (std::size_t i = 0; i < snapshots.size(); ++i) ptr[i] = snapshots[i].size();

    std::size_t remaining = total;
    while (remaining > L) {
        std::size_t best = snapshots.size();
        float best_val = -kInfDist;
        for (std::size_t i = 0; i < snapshots.size(); ++i) {
            if (ptr[i] == 0) continue;
            float tail = snapshots[i][ptr[i] - 1];
            if (best == snapshots.size() || tail > best_val) {
                best = i;
                best_val = tail;
            }
        }
        --ptr[best];
        --remaining;
    }
    float threshold = -kInfDist;
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        if (ptr[i] > 0) threshold = std::max(threshold, snapshots[i][ptr[i] - 1]);
    }
    return threshold;
}

std::uint64_t estimate_l_threshold_keys(std::span<const std::span<const std::uint64_t>> snapshots,
                                        std::size_t total_true, std::uint32_t L) {
    if (total_true <= L) return kNoPruneKey;
    std::size_t published = 0;
    for (const auto& s : snapshots) published += s.size();

    std::size_t ptr[64];
    std::size_t n = std::min<std::size_t>(snapshots.size(), 64);
    for (std::size_t i = 0; i < n; ++i) ptr[i] = snapshots[i].size();

    std::size_t remaining = published;
    while (remaining > L) {
        std::size_t best = n;
        std::uint64_t best_key = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (ptr[i] == 0) continue;
            std::uint64_t tail = snapshots[i][ptr[i] - 1];
            if (best == n || tail > best_key) {
                best = i;
                best_key = tail;
            }
        }
        if (best == n) break;
        --ptr[best];
        --remaining;
    }
    std::uint64_t threshold = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ptr[i] > 0) threshold = std::max(threshold, snapshots[i][ptr[i] - 1]);
    }
    return threshold == 0 ? kNoPruneKey : threshold;
}

ExpansionTrace AsyncResult::merged_trace() const {
    ExpansionTrace merged;
    for (const auto& t : group_traces) {
        for (const auto& e : t) merged.push_back(e.id);
    }
    return merged;
}

// ---------------------------------------------------------------------------

struct AsyncEngine::Impl {
    const GraphIndex& graph;
    const VectorStore& store;
    const AsyncParams params;
    const std::uint32_t effective_period;
    const bool debug;

    struct GroupState {
        CandidateQueue queue;
        SubQueueView view;
        std::vector<VertexId> pending;  // claim-lost neighbors, resolved via the board
        std::atomic<std::uint8_t> busy{1};

        std::vector<Candidate> batch;
        std::vector<Candidate> steal_buf;
        std::vector<SubQueueView::Snapshot> snaps;
        std::vector<std::uint64_t> self_keys;

        std::vector<TraceEvent> trace;
        SearchCounters counters;
        std::uint64_t sync_ns = 0;
        std::uint64_t claim_wins = 0, reuses = 0, lost = 0;
        std::uint64_t pruned = 0, offloaded = 0, adopted = 0;
    };

    struct DiscalState {
        std::uint32_t group = 0;
        VisitSet speculated;
        SubQueueView::Snapshot snap;
        std::vector<TraceEvent> events;
        SearchCounters counters;
        std::uint64_t sync_ns = 0;
        std::uint64_t claim_wins = 0;
    };

    std::vector<std::unique_ptr<GroupState>> group_states;
    std::vector<std::unique_ptr<DiscalState>> discal_states;
    std::vector<SubQueueView::Snapshot> balancer_snaps;

    AtomicVisitSet visited;
    DistanceBoard board;
    GlobalBuffer buffer;
    std::atomic<std::uint64_t> threshold{kNoPruneKey};
    std::atomic<bool> done{false};

    // debug-mode ownership audit: per-vertex (query counter << 8 | owner code)
    std::unique_ptr<std::atomic<std::uint64_t>[]> owner;
    std::uint64_t owner_query = 0;
    static constexpr std::uint64_t kOwnerTransit = 0xFF;

    // job control for the persistent role threads
    std::atomic<std::uint64_t> job_seq{0};
    std::atomic<std::uint32_t> remaining{0};
    std::atomic<bool> stop{false};
    const float* query = nullptr;
    std::vector<std::thread> threads;

    Impl(const GraphIndex& g, const VectorStore& s, const AsyncParams& p)
        : graph(g),
          store(s),
          params(p),
          // the degenerate single-maintainer configuration collapses to the
          // serial loop only if the threshold is refreshed every iteration
          effective_period((p.groups == 1 && p.discal_per_group == 0 && !p.dedicated_balancer)
                               ? 1
                               : p.balancer_period),
          debug(p.base.debug_checks),
          visited(g.vertex_count()),
          board(g.vertex_count()) {
        params.validate(graph.vertex_count());
        // single-group inline-balancer engines estimate the threshold from the
        // live queue, so only the calculators read the view and a head window
        // covering the speculation frontier suffices; anything else needs the
        // per-queue top-L for the pointer merge
        std::size_t view_cap;
        if (params.groups == 1 && !params.dedicated_balancer) {
            view_cap = std::max<std::size_t>(128, 4 * std::size_t(graph.max_degree()));
        } else {
            view_cap = std::size_t(params.base.L) + 2 * std::size_t(graph.max_degree()) + 64;
        }
        for (std::uint32_t i = 0; i < params.groups; ++i) {
            auto gs = std::make_unique<GroupState>();
            gs->view.reset(view_cap);
            gs->snaps.resize(params.groups);
            group_states.push_back(std::move(gs));
        }
        for (std::uint32_t i = 0; i < params.groups * params.discal_per_group; ++i) {
            auto ds = std::make_unique<DiscalState>();
            ds->group = i % params.groups;
            ds->speculated.reset(graph.vertex_count());
            discal_states.push_back(std::move(ds));
        }
        balancer_snaps.resize(params.groups);
        if (debug) {
            owner = std::make_unique<std::atomic<std::uint64_t>[]>(graph.vertex_count());
        }
        spawn_threads();
    }

    ~Impl() {
        stop.store(true, std::memory_order_release);
        job_seq.fetch_add(1, std::memory_order_acq_rel);
        job_seq.notify_all();
        for (auto& t : threads) t.join();
    }

    void spawn_threads() {
        std::uint32_t total = params.total_threads();
        threads.reserve(total);
        // the spawn-time sequence is captured here so a late-starting worker
        // cannot mistake the first job for its baseline
        std::uint64_t base = job_seq.load(std::memory_order_acquire);
        for (std::uint32_t g = 0; g < params.groups; ++g) {
            threads.emplace_back(
                [this, g, base] { worker_entry(base, [this, g] { maintainer_loop(g); }); });
        }
        for (std::uint32_t d = 0; d < params.groups * params.discal_per_group; ++d) {
            threads.emplace_back(
                [this, d, base] { worker_entry(base, [this, d] { discal_loop(d); }); });
        }
        if (params.dedicated_balancer) {
            threads.emplace_back([this, base] { worker_entry(base, [this] { balancer_loop(); }); });
        }
    }

    template <typename RoleFn>
    void worker_entry(std::uint64_t seen, RoleFn role) {
        while (true) {
            job_seq.wait(seen, std::memory_order_acquire);
            std::uint64_t cur = job_seq.load(std::memory_order_acquire);
            if (cur == seen) continue;
            seen = cur;
            if (stop.load(std::memory_order_acquire)) return;
            role();
            if (remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                remaining.notify_all();
            }
        }
    }

    // --- debug ownership audit ------------------------------------------

    void audit_insert(VertexId v, std::uint32_t g) {
        if (!debug) return;
        std::uint64_t mine = (owner_query << 8) | (g + 1);
        std::uint64_t prev = owner[v].exchange(mine, std::memory_order_acq_rel);
        if ((prev >> 8) == owner_query) {
            throw InvariantError("ownership audit: vertex " + std::to_string(v) +
                                 " inserted twice in one query");
        }
    }

    void audit_transit(VertexId v, std::uint32_t g) {
        if (!debug) return;
        std::uint64_t mine = (owner_query << 8) | (g + 1);
        std::uint64_t transit = (owner_query << 8) | kOwnerTransit;
        std::uint64_t prev = owner[v].exchange(transit, std::memory_order_acq_rel);
        if (prev != mine) {
            throw InvariantError("ownership audit: vertex " + std::to_string(v) +
                                 " offloaded by a non-owner");
        }
    }

    void audit_adopt(VertexId v, std::uint32_t g) {
        if (!debug) return;
        std::uint64_t mine = (owner_query << 8) | (g + 1);
        std::uint64_t transit = (owner_query << 8) | kOwnerTransit;
        std::uint64_t prev = owner[v].exchange(mine, std::memory_order_acq_rel);
        if (prev != transit) {
            throw InvariantError("ownership audit: vertex " + std::to_string(v) +
                                 " adopted while not in transit");
        }
    }

    // --- balancer --------------------------------------------------------

    void refresh_threshold(std::uint32_t self, std::vector<SubQueueView::Snapshot>& snaps,
                           std::vector<std::uint64_t>* self_keys) {
        if (params.groups == 1 && self == 0) {
            // single sub-queue: the L-th smallest key is just the L-th entry
            const auto& queue = group_states[0]->queue;
            std::uint64_t th =
                queue.size() > params.base.L ? queue[params.base.L - 1].key() : kNoPruneKey;
            threshold.store(th, std::memory_order_release);
            return;
        }
        std::span<const std::uint64_t> spans_storage[64];
        std::size_t total_true = 0;
        for (std::uint32_t h = 0; h < params.groups; ++h) {
            if (h == self && self_keys) {
                auto& gs = *group_states[h];
                self_keys->clear();
                for (std::size_t i = 0; i < gs.queue.size(); ++i) {
                    self_keys->push_back(gs.queue[i].key());
                }
                total_true += gs.queue.size();
                spans_storage[h] = *self_keys;
            } else {
                group_states[h]->view.snapshot_into(snaps[h]);
                total_true += snaps[h].true_len;
                spans_storage[h] = snaps[h].keys;
            }
        }
        std::uint64_t th = estimate_l_threshold_keys(
            std::span<const std::span<const std::uint64_t>>(spans_storage, params.groups),
            total_true, params.base.L);
        threshold.store(th, std::memory_order_release);
    }

    void balancer_loop() {
        while (!done.load(std::memory_order_acquire)) {
            refresh_threshold(kInvalidVertex, balancer_snaps, nullptr);
            std::this_thread::yield();
        }
    }

    // --- termination -----------------------------------------------------

    bool try_terminate() {
        for (auto& gs : group_states) {
            if (gs->busy.load(std::memory_order_seq_cst) != 0) return false;
        }
        for (auto& gs : group_states) {
            if (gs->view.true_unchecked() != 0) return false;
        }
        if (buffer.size() != 0) return false;
        for (auto& gs : group_states) {
            if (gs->busy.load(std::memory_order_seq_cst) != 0) return false;
        }
        done.store(true, std::memory_order_seq_cst);
        for (auto& gs : group_states) gs->view.bump();
        return true;
    }

    // --- maintainer ------------------------------------------------------

    void maintainer_loop(std::uint32_t g) {
        auto& gs = *group_states[g];
        const std::uint32_t dim_bytes = store.dim() * sizeof(float);

        auto compute = [&](VertexId u) {
            ++gs.counters.dist_evals;
            gs.counters.bytes_vectors += dim_bytes;
            return store.query_distance(query, u, params.base.kernel);
        };

        // seed: entry nodes round-robin across the groups, in entry order
        gs.batch.clear();
        const auto& entries = graph.entry_nodes();
        for (std::size_t i = g; i < entries.size(); i += params.groups) {
            VertexId e = entries[i];
            if (!visited.try_mark(e)) continue;
            audit_insert(e, g);
            auto oc = claim_or_read(board, e, [&] { return compute(e); }, debug);
            if (oc.kind == ClaimOutcome::LostClaim) {
                gs.pending.push_back(e);
                ++gs.lost;
            } else {
                oc.kind == ClaimOutcome::Computed ? ++gs.claim_wins : ++gs.reuses;
                gs.batch.push_back({e, oc.dist, false});
            }
        }
        gs.queue.merge(gs.batch);
        gs.view.publish(gs.queue);

        std::uint64_t iter = 0;
        while (!done.load(std::memory_order_acquire)) {
            bool progress = false;
            bool dirty = false;

            // pick up distances that calculators finished for us
            if (!gs.pending.empty()) {
                gs.batch.clear();
                for (std::size_t i = 0; i < gs.pending.size();) {
                    VertexId u = gs.pending[i];
                    if (board.is_ready(u)) {
                        gs.batch.push_back({u, board.dist(u), false});
                        ++gs.reuses;
                        gs.pending[i] = gs.pending.back();
                        gs.pending.pop_back();
                    } else {
                        ++i;
                    }
                }
                if (!gs.batch.empty()) {
                    gs.queue.merge(gs.batch);
                    progress = dirty = true;
                }
            }

            // prune against a fresh threshold before choosing what to expand,
            // so adopted or displaced candidates die instead of being expanded
            ++iter;
            if (!params.dedicated_balancer && iter % effective_period == 0) {
                refresh_threshold(g, gs.snaps, &gs.self_keys);
            }
            std::uint64_t th = threshold.load(std::memory_order_acquire);
            if (th != kNoPruneKey) {
                std::size_t dropped = gs.queue.prune_above(th);
                if (dropped) {
                    gs.pruned += dropped;
                    dirty = true;
                }
            }

            // expand the first unchecked candidate still under the threshold;
            // a sorted queue whose first unchecked exceeds it holds no
            // expandable work at all
            std::size_t pos = gs.queue.first_unchecked();
            if (pos != CandidateQueue::npos) {
                std::uint64_t live_th = threshold.load(std::memory_order_acquire);
                if (gs.queue[pos].key() > live_th) {
                    std::size_t dropped = gs.queue.prune_above(live_th);
                    if (dropped) {
                        gs.pruned += dropped;
                        dirty = true;
                    }
                    pos = CandidateQueue::npos;
                }
            }
            if (pos != CandidateQueue::npos) {
                progress = dirty = true;
                VertexId v = gs.queue[pos].id;
                auto t0 = Clock::now();
                gs.queue.mark_checked(pos);
                ++gs.counters.expansions;

                auto nbrs = graph.neighbors(v);
                gs.counters.bytes_neighbors += nbrs.size() * sizeof(VertexId);
                gs.batch.clear();
                std::uint32_t fresh = 0;
                const float eager_quota = params.inline_fraction * float(nbrs.size());
                for (VertexId u : nbrs) {
                    if (visited.test(u)) continue;
                    if (!visited.try_mark(u)) continue;
                    audit_insert(u, g);
                    ++fresh;
                    ClaimOutcome oc;
                    if (float(fresh) <= eager_quota) {
                        // inline path: claim first, probe the board only on a
                        // lost claim
                        if (board.try_claim(u)) {
                            float d = compute(u);
                            board.publish(u, d, debug);
                            oc = {ClaimOutcome::Computed, d};
                        } else if (board.is_ready(u)) {
                            oc = {ClaimOutcome::Reused, board.dist(u)};
                        } else {
                            oc = {ClaimOutcome::LostClaim, 0.0f};
                        }
                    } else {
                        oc = claim_or_read(board, u, [&] { return compute(u); }, debug);
                    }
                    if (oc.kind == ClaimOutcome::LostClaim) {
                        gs.pending.push_back(u);
                        ++gs.lost;
                    } else {
                        oc.kind == ClaimOutcome::Computed ? ++gs.claim_wins : ++gs.reuses;
                        gs.batch.push_back({u, oc.dist, false});
                    }
                }
                gs.queue.merge(gs.batch);
                gs.trace.push_back({v, ns_since(t0)});
            }

            if (params.enable_stealing && params.groups > 1) {
                std::size_t own = gs.queue.size();
                std::size_t total = own;
                for (std::uint32_t h = 0; h < params.groups; ++h) {
                    if (h != g) total += group_states[h]->view.true_len();
                }
                double mean = double(total) / double(params.groups);
                if (double(own) > params.offload_watermark * mean && own >= 2) {
                    std::size_t excess = own - std::size_t(mean);
                    std::size_t n_off = excess / 2;
                    if (n_off > 0) {
                        // offload promising candidates (keeping the head for
                        // ourselves); adopters gate on the threshold anyway
                        gs.steal_buf.clear();
                        std::size_t got = gs.queue.take_unchecked_front(2, n_off, gs.steal_buf);
                        if (got > 0) {
                            for (const auto& c : gs.steal_buf) audit_transit(c.id, g);
                            buffer.push_batch(gs.steal_buf);
                            gs.offloaded += got;
                            dirty = true;
                        }
                    }
                } else if (double(own) < params.pull_watermark * mean && buffer.size() > 0) {
                    std::size_t want = std::max<std::size_t>(1, std::size_t(mean) - own);
                    gs.steal_buf.clear();
                    std::size_t got = buffer.pop_batch(want, gs.steal_buf);
                    if (got > 0) {
                        for (const auto& c : gs.steal_buf) audit_adopt(c.id, g);
                        gs.queue.merge(gs.steal_buf);
                        gs.adopted += got;
                        progress = dirty = true;
                    }
                }
            }

            if (debug) gs.queue.check_invariants();
            if (dirty) gs.view.publish(gs.queue);
            if (progress) continue;

            if (!gs.pending.empty()) {
                // a calculator holds the claim for every pending neighbor and
                // will publish shortly
                auto t0 = Clock::now();
                cpu_pause();
                gs.sync_ns += ns_since(t0);
                continue;
            }

            if (params.enable_stealing && buffer.size() > 0) {
                gs.steal_buf.clear();
                std::size_t got = buffer.pop_batch(
                    std::max<std::size_t>(1, params.base.L / (4 * params.groups)), gs.steal_buf);
                if (got > 0) {
                    for (const auto& c : gs.steal_buf) audit_adopt(c.id, g);
                    gs.queue.merge(gs.steal_buf);
                    gs.adopted += got;
                    gs.view.publish(gs.queue);
                    continue;
                }
            }

            // quiescent: no unchecked work, no pending, nothing to adopt
            auto t_idle = Clock::now();
            gs.busy.store(0, std::memory_order_seq_cst);
            bool terminated = false;
            unsigned round = 0;
            while (true) {
                if (done.load(std::memory_order_acquire)) {
                    terminated = true;
                    break;
                }
                if (gs.queue.unchecked_count() > 0) break;
                if (params.enable_stealing && buffer.size() > 0) break;
                if (try_terminate()) {
                    terminated = true;
                    break;
                }
                relax(round++);
            }
            gs.busy.store(1, std::memory_order_seq_cst);
            gs.sync_ns += ns_since(t_idle);
            if (terminated) break;
        }
    }

    // --- distance calculator ---------------------------------------------

    void discal_loop(std::uint32_t idx) {
        auto& ds = *discal_states[idx];
        auto& gs = *group_states[ds.group];
        const std::uint32_t dim_bytes = store.dim() * sizeof(float);
        ds.speculated.begin_query();

        // consecutive rounds without a claim win; a calculator the maintainer
        // outruns backs off instead of stealing its core per publish
        unsigned useless = 0;

        while (!done.load(std::memory_order_acquire)) {
            gs.view.snapshot_into(ds.snap);

            // first unchecked candidate this thread has not speculated yet;
            // restarting from the front on every round gives the reset-on-
            // update rule and the skip-already-speculated rule in one scan
            VertexId target = kInvalidVertex;
            for (std::size_t i = 0; i < ds.snap.keys.size(); ++i) {
                if (ds.snap.checked[i]) continue;
                VertexId id = key_vertex(ds.snap.keys[i]);
                if (ds.speculated.test(id)) continue;
                target = id;
                break;
            }
            if (target == kInvalidVertex) {
                auto t0 = Clock::now();
                gs.view.wait_change(ds.snap.version, done);
                ds.sync_ns += ns_since(t0);
                continue;
            }

            ds.speculated.mark(target);
            auto t0 = Clock::now();
            auto nbrs = graph.neighbors(target);
            ds.counters.bytes_neighbors += nbrs.size() * sizeof(VertexId);
            std::uint64_t wins_before = ds.claim_wins;
            for (VertexId u : nbrs) {
                if (visited.test(u)) continue;
                if (board.is_ready(u)) continue;
                if (board.try_claim(u)) {
                    float d = store.query_distance(query, u, params.base.kernel);
                    ++ds.counters.dist_evals;
                    ds.counters.bytes_vectors += dim_bytes;
                    board.publish(u, d, debug);
                    ++ds.claim_wins;
                }
            }
            ds.events.push_back({target, ns_since(t0)});

            if (ds.claim_wins != wins_before) {
                useless = 0;
            } else if (++useless > 2) {
                // the maintainer is outrunning us; keep off its cores and the
                // memory bus until speculation is worth something again
                auto t0_idle = Clock::now();
                std::this_thread::sleep_for(
                    std::chrono::microseconds(std::min<unsigned>(1u << (useless - 2), 256)));
                ds.sync_ns += ns_since(t0_idle);
            }
        }
    }

    // --- coordinator -------------------------------------------------------

    AsyncResult run(const float* q) {
        auto t_start = Clock::now();
        AsyncResult out;

        visited.begin_query();
        board.begin_query();
        buffer.clear();
        threshold.store(kNoPruneKey, std::memory_order_relaxed);
        done.store(false, std::memory_order_relaxed);
        ++owner_query;
        for (auto& gs : group_states) {
            gs->queue.clear();
            gs->pending.clear();
            gs->busy.store(1, std::memory_order_relaxed);
            gs->batch.clear();
            gs->trace.clear();
            gs->counters = {};
            gs->sync_ns = gs->claim_wins = gs->reuses = gs->lost = 0;
            gs->pruned = gs->offloaded = gs->adopted = 0;
            gs->view.publish(gs->queue);
        }
        for (auto& ds : discal_states) {
            ds->events.clear();
            ds->counters = {};
            ds->sync_ns = ds->claim_wins = 0;
        }
        query = q;

        remaining.store(params.total_threads(), std::memory_order_release);
        std::uint64_t setup_ns = ns_since(t_start);
        job_seq.fetch_add(1, std::memory_order_acq_rel);
        job_seq.notify_all();

        std::uint32_t rem;
        while ((rem = remaining.load(std::memory_order_acquire)) != 0) {
            remaining.wait(rem, std::memory_order_acquire);
        }

        auto t_merge = Clock::now();
        std::vector<Candidate> merged;
        for (auto& gs : group_states) {
            merged.insert(merged.end(), gs->queue.entries().begin(), gs->queue.entries().end());
        }
        std::sort(merged.begin(), merged.end(), candidate_less);
        std::size_t n = std::min<std::size_t>(params.base.K, merged.size());
        for (std::size_t i = 0; i < n; ++i) {
            out.results.push_back(merged[i].id);
            out.result_dists.push_back(merged[i].dist);
        }
        out.short_result = out.results.size() < params.base.K;

        for (auto& gs : group_states) {
            out.group_traces.push_back(gs->trace);
            out.counters += gs->counters;
            out.sync_wait_ns += gs->sync_ns;
            out.claim_wins += gs->claim_wins;
            out.ready_reuses += gs->reuses;
            out.claims_lost += gs->lost;
            out.pruned_candidates += gs->pruned;
            out.offloaded += gs->offloaded;
            out.adopted += gs->adopted;
        }
        for (auto& ds : discal_states) {
            out.discal_events.push_back(ds->events);
            out.counters += ds->counters;
            out.sync_wait_ns += ds->sync_ns;
            out.claim_wins += ds->claim_wins;
        }
        out.serial_ns = setup_ns + ns_since(t_merge);
        out.wall_ns = ns_since(t_start);
        return out;
    }
};

AsyncEngine::AsyncEngine(const GraphIndex& graph, const VectorStore& store, AsyncParams params)
    : impl_(std::make_unique<Impl>(graph, store, params)), params_(params) {}

AsyncEngine::~AsyncEngine() = default;

AsyncResult AsyncEngine::search(const float* query) { return impl_->run(query); }

AsyncResult async_search(const float* query, const GraphIndex& graph, const VectorStore& store,
                         const AsyncParams& params) {
    AsyncEngine engine(graph, store, params);
    return engine.search(query);
}

}  // namespace graphann

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

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "graphann/candidate_queue.hpp"
#include "graphann/serial_engine.hpp"

namespace graphann {

struct AsyncParams {
    std::uint32_t groups = 1;            // sub-queue maintainer threads (G)
    std::uint32_t discal_per_group = 0;  // distance calculators per group (C)
    bool dedicated_balancer = false;
    bool enable_stealing = true;
    float inline_fraction = 0.0f;        // fraction of missing distances a maintainer
                                         // computes eagerly, before probing the board
    std::uint32_t balancer_period = 4;   // maintainer iterations between inline threshold refreshes
    float offload_watermark = 1.25f;     // offload when own length > watermark * mean
    float pull_watermark = 0.75f;        // pull when own length < watermark * mean
    SearchParams base;

    std::uint32_t total_threads() const {
        return groups * (1 + discal_per_group) + (dedicated_balancer ? 1u : 0u);
    }

    void validate(std::size_t vertex_count) const;
};

/// Per-query write-once array of (claim, ready, distance) slots keyed by
/// vertex. A distance is written at most once per query, always before the
/// ready flag; a reader observing ready sees the final value. Epoch-stamped so
/// begin_query() is O(1).
class DistanceBoard {
public:
    explicit DistanceBoard(std::size_t n = 0) { reset(n); }

    void reset(std::size_t n);
    void begin_query();

    bool is_ready(VertexId u) const {
        return slots_[u].ready.load(std::memory_order_acquire) == epoch_;
    }
    /// Valid only after is_ready(u) returned true.
    float dist(VertexId u) const { return slots_[u].dist; }

    bool is_claimed(VertexId u) const {
        return slots_[u].claim.load(std::memory_order_acquire) == epoch_;
    }

    /// Exactly one caller per query per vertex wins.
    bool try_claim(VertexId u) {
        std::uint32_t cur = slots_[u].claim.load(std::memory_order_relaxed);
        if (cur == epoch_) return false;
        return slots_[u].claim.compare_exchange_strong(cur, epoch_, std::memory_order_acq_rel,
                                                       std::memory_order_relaxed);
    }

    /// Claim winner publishes the distance; dist is stored before ready.
    void publish(VertexId u, float d, bool debug_checks = false) {
        if (debug_checks && slots_[u].ready.load(std::memory_order_acquire) == epoch_) {
            throw InvariantError("distance board: double publish for vertex " + std::to_string(u));
        }
        slots_[u].dist = d;
        slots_[u].ready.store(epoch_, std::memory_order_release);
    }

private:
    struct Slot {
        std::atomic<std::uint32_t> claim{0};
        std::atomic<std::uint32_t> ready{0};
        float dist = 0.0f;
    };
    std::unique_ptr<Slot[]> slots_;
    std::size_t size_ = 0;
    std::uint32_t epoch_ = 0;
};

struct ClaimOutcome {
    enum Kind { Computed, Reused, LostClaim } kind;
    float dist;
};

/// Claim protocol around the board: the winner computes and publishes, losers
/// reuse the published value or report LostClaim and move on.
template <typename ComputeFn>
ClaimOutcome claim_or_read(DistanceBoard& board, VertexId u, ComputeFn&& compute,
                           bool debug_checks = false) {
    if (board.is_ready(u)) return {ClaimOutcome::Reused, board.dist(u)};
    if (board.try_claim(u)) {
        float d = compute();
        board.publish(u, d, debug_checks);
        return {ClaimOutcome::Computed, d};
    }
    if (board.is_ready(u)) return {ClaimOutcome::Reused, board.dist(u)};
    return {ClaimOutcome::LostClaim, 0.0f};
}

/// Multi-producer multi-consumer pool through which overloaded maintainers
/// offload unchecked candidates and underloaded ones adopt them. Ownership
/// transfers atomically on pop.
class GlobalBuffer {
public:
    void clear();
    void push_batch(std::span<const Candidate> batch);
    std::size_t pop_batch(std::size_t max_n, std::vector<Candidate>& out);
    std::size_t size() const { return size_.load(std::memory_order_acquire); }

private:
    mutable std::mutex mu_;
    std::vector<Candidate> pool_;
    std::atomic<std::size_t> size_{0};
};

/// Single-writer versioned snapshot of a maintainer's queue (seqlock).
/// Readers never observe torn entries; a read either reflects a complete
/// published version or is retried. Entries beyond the capacity are truncated
/// (the head always covers at least the first L entries, which is all any
/// reader needs); true lengths are published alongside.
class SubQueueView {
public:
    void reset(std::size_t capacity);

    void publish(const CandidateQueue& queue);
    /// Version bump without content change; wakes waiting readers.
    void bump();

    struct Snapshot {
        std::vector<std::uint64_t> keys;  // packed (dist, id), ascending
        std::vector<std::uint8_t> checked;
        std::size_t true_len = 0;
        std::size_t true_unchecked = 0;
        std::uint64_t version = 0;
    };

    /// Copies a stable snapshot; retries internally on concurrent publishes.
    void snapshot_into(Snapshot& out) const;

    std::uint64_t version() const { return version_.load(std::memory_order_acquire); }
    std::size_t true_len() const { return true_len_.load(std::memory_order_acquire); }
    std::size_t true_unchecked() const { return true_unchecked_.load(std::memory_order_acquire); }

    /// Blocks (spin then futex) until the version differs from `seen` or the
    /// done flag is set.
    void wait_change(std::uint64_t seen, const std::atomic<bool>& done) const;

private:
    std::atomic<std::uint64_t> version_{0};
    std::unique_ptr<std::atomic<std::uint64_t>[]> keys_;
    std::unique_ptr<std::atomic<std::uint8_t>[]> checked_;
    std::atomic<std::size_t> published_len_{0};
    std::atomic<std::size_t> true_len_{0};
    std::atomic<std::size_t> true_unchecked_{0};
    std::size_t capacity_ = 0;
};

/// Pointer-merge estimate of the L-th smallest distance over a set of sorted
/// snapshots: pointers start past the ends and the largest tail element is
/// retracted until exactly L elements remain; returns the largest element
/// still in front of the pointers, or +inf when the total count is <= L.
/// For static snapshots the result is exact.
float estimate_l_threshold(const std::vector<std::vector<float>>& snapshots, std::uint32_t L);

/// Key-space variant used by the engine; exact L-th smallest key of the union
/// whenever total_true > L (ties broken by vertex id inside the keys).
std::uint64_t estimate_l_threshold_keys(std::span<const std::span<const std::uint64_t>> snapshots,
                                        std::size_t total_true, std::uint32_t L);

struct AsyncResult {
    std::vector<VertexId> results;
    std::vector<float> result_dists;
    std::vector<std::vector<TraceEvent>> group_traces;   // maintainer expansions, per group
    std::vector<std::vector<TraceEvent>> discal_events;  // speculative work, per calculator
    SearchCounters counters;
    std::uint64_t wall_ns = 0;
    std::uint64_t serial_ns = 0;       // coordinator setup + final merge
    std::uint64_t sync_wait_ns = 0;    // calculator park/retry + maintainer idle waits
    std::uint64_t claim_wins = 0;
    std::uint64_t ready_reuses = 0;
    std::uint64_t claims_lost = 0;
    std::uint64_t pruned_candidates = 0;
    std::uint64_t offloaded = 0;
    std::uint64_t adopted = 0;
    bool short_result = false;

    ExpansionTrace merged_trace() const;
};

/// Fully asynchronous search engine: per query, G maintainer threads each own
/// one sub-queue, G*C calculator threads speculatively fill the distance
/// board, and the L-threshold (dedicated thread or inlined) drives
/// decentralized pruning. No barriers; cross-thread data flows through the
/// board, the threshold, the global buffer and the versioned views. Role
/// threads are created once and reused across sequential search() calls.
class AsyncEngine {
public:
    AsyncEngine(const GraphIndex& graph, const VectorStore& store, AsyncParams params);
    ~AsyncEngine();

    AsyncEngine(const AsyncEngine&) = delete;
    AsyncEngine& operator=(const AsyncEngine&) = delete;

    AsyncResult search(const float* query);

    const AsyncParams& params() const { return params_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    AsyncParams params_;
};

/// One-shot convenience wrapper: spawns the per-query role threads, runs the
/// query, joins.
AsyncResult async_search(const float* query, const GraphIndex& graph, const VectorStore& store,
                         const AsyncParams& params);

}  // namespace graphann

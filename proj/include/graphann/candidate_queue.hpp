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
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "graphann/common.hpp"

namespace graphann {

struct Candidate {
    VertexId id;
    float dist;
    bool checked;

    std::uint64_t key() const { return pack_key(dist, id); }
};

inline bool candidate_less(const Candidate& a, const Candidate& b) {
    return a.key() < b.key();
}

/// Distance-sorted bounded sequence of (vertex, distance, checked) entries,
/// ascending by (dist, id). Realized as a sorted array with batch merge; the
/// capacity bound is enforced by the caller via resize_to / prune_above so the
/// queue may transiently exceed it within one iteration.
class CandidateQueue {
public:
    CandidateQueue() = default;
    explicit CandidateQueue(std::size_t reserve) { entries_.reserve(reserve); }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Candidate& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<Candidate>& entries() const { return entries_; }

    std::size_t unchecked_count() const { return unchecked_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Position of the first unchecked entry, npos if none.
    std::size_t first_unchecked() const;

    void mark_checked(std::size_t pos);

    /// Merges a batch of new candidates (need not be sorted); keeps the queue
    /// sorted. Caller guarantees the ids are not already present.
    void merge(std::span<const Candidate> batch);

    /// Appends an entry the caller knows sorts after every current entry.
    void append_back(const Candidate& c) {
        entries_.push_back(c);
        if (!c.checked) ++unchecked_;
    }

    /// Keeps the first max_len entries (the L-resize of the serial loop).
    void resize_to(std::size_t max_len);

    /// Drops every entry whose (dist, id) key exceeds threshold_key. Returns
    /// the number of dropped entries.
    std::size_t prune_above(std::uint64_t threshold_key);

    /// Removes up to want unchecked entries scanning from the head after
    /// skipping the first `skip` unchecked ones, so the offloaded work is
    /// worth expanding by its adopter.
    std::size_t take_unchecked_front(std::size_t skip, std::size_t want,
                                     std::vector<Candidate>& out);

    void clear();

    /// Throws InvariantError if the sort order is broken, ids repeat, or the
    /// unchecked counter drifted.
    void check_invariants() const;

private:
    std::vector<Candidate> entries_;
    std::vector<Candidate> scratch_;
    std::size_t unchecked_ = 0;
    mutable std::size_t first_unchecked_hint_ = 0;  // no unchecked entry before this index
};

/// Per-query visited flags with an epoch stamp: begin_query() is O(1).
class VisitSet {
public:
    explicit VisitSet(std::size_t n = 0) : stamps_(n, 0) {}

    void reset(std::size_t n) {
        stamps_.assign(n, 0);
        epoch_ = 0;
    }

    void begin_query() {
        if (++epoch_ == 0) {
            std::fill(stamps_.begin(), stamps_.end(), 0);
            epoch_ = 1;
        }
    }

    bool test(VertexId v) const { return stamps_[v] == epoch_; }
    void mark(VertexId v) { stamps_[v] = epoch_; }

private:
    std::vector<std::uint32_t> stamps_;
    std::uint32_t epoch_ = 0;
};

/// Shared visited flags with atomic test-and-set, so two threads never both
/// win insertion of the same vertex.
class AtomicVisitSet {
public:
    explicit AtomicVisitSet(std::size_t n = 0) { reset(n); }

    void reset(std::size_t n) {
        size_ = n;
        stamps_ = std::make_unique<std::atomic<std::uint32_t>[]>(n);
        epoch_ = 0;
    }

    void begin_query() {
        if (++epoch_ == 0) {
            for (std::size_t i = 0; i < size_; ++i) stamps_[i].store(0, std::memory_order_relaxed);
            epoch_ = 1;
        }
    }

    bool test(VertexId v) const { return stamps_[v].load(std::memory_order_acquire) == epoch_; }

    /// Returns true iff this caller transitioned v to visited.
    bool try_mark(VertexId v) {
        std::uint32_t cur = stamps_[v].load(std::memory_order_relaxed);
        if (cur == epoch_) return false;
        return stamps_[v].compare_exchange_strong(cur, epoch_, std::memory_order_acq_rel,
                                                  std::memory_order_relaxed);
    }

private:
    std::unique_ptr<std::atomic<std::uint32_t>[]> stamps_;
    std::size_t size_ = 0;
    std::uint32_t epoch_ = 0;
};

}  // namespace graphann

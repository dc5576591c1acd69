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

#include "graphann/candidate_queue.hpp"

#include <algorithm>

namespace graphann {

std::size_t CandidateQueue::first_unchecked() const {
    if (unchecked_ == 0) return npos;
    for (std::size_t i = first_unchecked_hint_; i < entries_.size(); ++i) {
        if (!entries_[i].checked) {
            first_unchecked_hint_ = i;
            return i;
        }
    }
    return npos;
}

void CandidateQueue::mark_checked(std::size_t pos) {
    if (!entries_[pos].checked) {
        entries_[pos].checked = true;
        --unchecked_;
    }
}

void CandidateQueue::merge(std::span<const Candidate> batch) {
    if (batch.empty()) return;
    scratch_.assign(batch.begin(), batch.end());
    std::sort(scratch_.begin(), scratch_.end(), candidate_less);

    std::size_t old_len = entries_.size();
    entries_.resize(old_len + scratch_.size());
    // backwards two-way merge in place
    std::size_t a = old_len, b = scratch_.size(), w = entries_.size();
    while (b > 0) {
        if (a > 0 && candidate_less(scratch_[b - 1], entries_[a - 1])) {
            entries_[--w] = entries_[--a];
        } else {
            entries_[--w] = scratch_[--b];
        }
    }
    for (const auto& c : scratch_) {
        if (!c.checked) ++unchecked_;
    }
    // a is the first position that may have moved
    first_unchecked_hint_ = std::min(first_unchecked_hint_, a);
}

void CandidateQueue::resize_to(std::size_t max_len) {
    if (entries_.size() <= max_len) return;
    for (std::size_t i = max_len; i < entries_.size(); ++i) {
        if (!entries_[i].checked) --unchecked_;
    }
    entries_.resize(max_len);
    first_unchecked_hint_ = std::min(first_unchecked_hint_, entries_.size());
}

std::size_t CandidateQueue::prune_above(std::uint64_t threshold_key) {
    // entries are sorted by key, so pruning is a suffix chop
    std::size_t keep = entries_.size();
    while (keep > 0 && entries_[keep - 1].key() > threshold_key) --keep;
    std::size_t dropped = entries_.size() - keep;
    if (dropped > 0) {
        for (std::size_t i = keep; i < entries_.size(); ++i) {
            if (!entries_[i].checked) --unchecked_;
        }
        entries_.resize(keep);
        first_unchecked_hint_ = std::min(first_unchecked_hint_, entries_.size());
    }
    return dropped;
}

std::size_t CandidateQueue::take_unchecked_front(std::size_t skip, std::size_t want,
                                                 std::vector<Candidate>& out) {
    if (want == 0 || unchecked_ <= skip) return 0;
    std::size_t taken = 0;
    std::size_t seen_unchecked = 0;
    std::size_t w = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        bool take = false;
        if (!entries_[i].checked) {
            ++seen_unchecked;
            take = seen_unchecked > skip && taken < want;
        }
        if (take) {
            out.push_back(entries_[i]);
            ++taken;
        } else {
            entries_[w++] = entries_[i];
        }
    }
    if (taken > 0) {
        entries_.resize(w);
        unchecked_ -= taken;
        first_unchecked_hint_ = 0;
    }
    return taken;
}

void CandidateQueue::clear() {
    entries_.clear();
    unchecked_ = 0;
    first_unchecked_hint_ = 0;
}

void CandidateQueue::check_invariants() const {
    std::size_t unchecked = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!entries_[i].checked) ++unchecked;
        if (i > 0 && !(entries_[i - 1].key() < entries_[i].key())) {
            throw InvariantError("candidate queue out of order or duplicate id at position " +
                                 std::to_string(i));
        }
    }
    if (unchecked != unchecked_) {
        throw InvariantError("candidate queue unchecked counter drifted");
    }
}

}  // namespace graphann

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

#include "graphann/metrics.hpp"

#include <algorithm>

namespace graphann {

double recall_at_k(const std::vector<std::vector<VertexId>>& results, const GroundTruth& gt,
                   std::uint32_t k) {
    if (results.size() != gt.query_count()) {
        throw UsageError("recall_at_k: result count " + std::to_string(results.size()) +
                         " does not match ground-truth query count " +
                         std::to_string(gt.query_count()));
    }
    if (k == 0 || k > gt.k) {
        throw UsageError("recall_at_k: K=" + std::to_string(k) +
                         " exceeds ground-truth depth " + std::to_string(gt.k));
    }
    if (results.empty()) return 0.0;

    double sum = 0.0;
    std::vector<VertexId> truth;
    for (std::size_t q = 0; q < results.size(); ++q) {
        truth.assign(gt.ids[q].begin(), gt.ids[q].begin() + k);
        std::sort(truth.begin(), truth.end());
        std::size_t hit = 0;
        for (VertexId v : results[q]) {
            if (std::binary_search(truth.begin(), truth.end(), v)) ++hit;
        }
        sum += double(hit) / double(k);
    }
    return sum / double(results.size());
}

double redundant_ratio(const ExpansionTrace& parallel_trace, const ExpansionTrace& serial_trace) {
    if (parallel_trace.empty()) return 0.0;
    std::vector<VertexId> serial_sorted(serial_trace);
    std::sort(serial_sorted.begin(), serial_sorted.end());
    std::size_t redundant = 0;
    for (VertexId v : parallel_trace) {
        if (!std::binary_search(serial_sorted.begin(), serial_sorted.end(), v)) ++redundant;
    }
    return double(redundant) / double(parallel_trace.size());
}

double effective_bandwidth_gbps(std::uint64_t bytes_touched, std::uint64_t wall_ns, double rr) {
    if (wall_ns == 0) throw UsageError("effective_bandwidth: zero wall time");
    double pmb = double(bytes_touched) / double(wall_ns);  // bytes per ns == GB/s
    return pmb * (1.0 - rr);
}

BreakdownTimes& BreakdownTimes::operator+=(const BreakdownTimes& o) {
    serial_ns += o.serial_ns;
    expand_ns += o.expand_ns;
    redundant_ns += o.redundant_ns;
    sync_ns += o.sync_ns;
    total_thread_ns += o.total_thread_ns;
    expand_count += o.expand_count;
    redundant_count += o.redundant_count;
    return *this;
}

bool SerialReference::contains(VertexId v) const {
    return std::binary_search(expanded_sorted.begin(), expanded_sorted.end(), v);
}

SerialReference make_serial_reference(const SerialResult& r) {
    SerialReference ref;
    ref.expanded_sorted = r.trace;
    std::sort(ref.expanded_sorted.begin(), ref.expanded_sorted.end());
    ref.results = r.results;
    return ref;
}

namespace {

void classify_events(const std::vector<std::vector<TraceEvent>>& event_lists,
                     const SerialReference& ref, BreakdownTimes& t) {
    for (const auto& events : event_lists) {
        for (const auto& e : events) {
            if (ref.contains(e.id)) {
                t.expand_ns += e.duration_ns;
                ++t.expand_count;
            } else {
                t.redundant_ns += e.duration_ns;
                ++t.redundant_count;
            }
        }
    }
}

void finish_residual(BreakdownTimes& t) {
    std::uint64_t attributed = t.serial_ns + t.expand_ns + t.redundant_ns;
    t.sync_ns = t.total_thread_ns > attributed ? t.total_thread_ns - attributed : 0;
}

}  // namespace

BreakdownTimes classify_pathwise(const PathwiseResult& r, const SerialReference& ref) {
    BreakdownTimes t;
    t.serial_ns = r.master_serial_ns;
    classify_events(r.thread_traces, ref, t);
    // workers plus the master
    t.total_thread_ns = std::uint64_t(r.thread_traces.size() + 1) * r.wall_ns;
    finish_residual(t);
    return t;
}

BreakdownTimes classify_async(const AsyncResult& r, std::uint32_t total_threads,
                              const SerialReference& ref) {
    BreakdownTimes t;
    t.serial_ns = r.serial_ns;
    classify_events(r.group_traces, ref, t);
    BreakdownTimes discal_part;
    classify_events(r.discal_events, ref, discal_part);
    // speculative work contributes time but is not an expansion
    t.expand_ns += discal_part.expand_ns;
    t.redundant_ns += discal_part.redundant_ns;
    t.total_thread_ns = std::uint64_t(total_threads) * r.wall_ns + r.serial_ns;
    finish_residual(t);
    return t;
}

BreakdownFractions to_fractions(const BreakdownTimes& t) {
    BreakdownFractions f;
    if (t.total_thread_ns == 0) return f;
    double total = double(t.total_thread_ns);
    f.serial = double(t.serial_ns) / total;
    f.expand = double(t.expand_ns) / total;
    f.redundant = double(t.redundant_ns) / total;
    f.sync = double(t.sync_ns) / total;
    return f;
}

}  // namespace graphann

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

#include "graphann/run_suite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <thread>

namespace graphann {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

}  // namespace

std::string engine_name(EngineKind kind) {
    switch (kind) {
        case EngineKind::Serial: return "serial";
        case EngineKind::Pathwise: return "pathwise";
        case EngineKind::Async: return "async";
    }
    return "?";
}

EngineKind parse_engine(const std::string& name) {
    if (name == "serial") return EngineKind::Serial;
    if (name == "pathwise") return EngineKind::Pathwise;
    if (name == "async") return EngineKind::Async;
    throw UsageError("unknown engine '" + name + "' (expected serial|pathwise|async)");
}

std::vector<GridCell> parse_grid(const std::string& text) {
    std::vector<GridCell> grid;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string cell = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        std::size_t x = cell.find('x');
        if (x == std::string::npos) {
            throw UsageError("bad grid cell '" + cell + "' (expected IxJ, e.g. 4x2)");
        }
        try {
            int intra = std::stoi(cell.substr(0, x));
            int inter = std::stoi(cell.substr(x + 1));
            if (intra < 1 || inter < 1) throw std::invalid_argument("nonpositive");
            grid.push_back({std::uint32_t(intra), std::uint32_t(inter)});
        } catch (const std::exception&) {
            throw UsageError("bad grid cell '" + cell + "' (expected IxJ, e.g. 4x2)");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (grid.empty()) throw UsageError("empty parallelism grid");
    return grid;
}

void SuiteConfig::validate() const {
    if (grid.empty()) throw UsageError("suite: empty configuration grid");
    if (repetitions < 1) throw UsageError("suite: repetitions must be >= 1");
    if (width < 1) throw UsageError("suite: width must be >= 1");
    if (inline_fraction < 0.0f || inline_fraction > 1.0f) {
        throw UsageError("suite: inline fraction must be in [0,1]");
    }
}

AsyncParams derive_async_params(std::uint32_t intra, const SuiteConfig& config) {
    AsyncParams p;
    p.base = config.base;
    p.enable_stealing = config.stealing;
    p.inline_fraction = config.inline_fraction;
    p.dedicated_balancer = config.dedicated_balancer && intra >= 2;

    std::uint32_t rem = intra - (p.dedicated_balancer ? 1 : 0);
    if (rem < 1) throw UsageError("async layout: no threads left for maintainers");

    if (config.groups > 0) {
        p.groups = std::uint32_t(config.groups);
        if (rem % p.groups != 0) {
            throw UsageError("async layout: intra=" + std::to_string(intra) +
                             " is not divisible into groups=" + std::to_string(p.groups));
        }
        p.discal_per_group = rem / p.groups - 1;
        if (config.discal >= 0 && std::uint32_t(config.discal) != p.discal_per_group) {
            throw UsageError("async layout: groups*(1+discal)+balancer must equal intra");
        }
    } else if (config.discal >= 0) {
        std::uint32_t per_group = std::uint32_t(config.discal) + 1;
        if (rem % per_group != 0) {
            throw UsageError("async layout: intra does not divide into groups of " +
                             std::to_string(per_group));
        }
        p.groups = rem / per_group;
        p.discal_per_group = std::uint32_t(config.discal);
    } else {
        // prefer group size three (one maintainer, two calculators); ties go
        // to fewer groups, since extra calculators cost less redundancy than
        // extra queue partitions
        std::uint32_t best_g = 1;
        int best_score = 1 << 30;
        for (std::uint32_t g = 1; g <= rem; ++g) {
            if (rem % g != 0) continue;
            int size = int(rem / g);
            int score = std::abs(size - 3);
            if (score < best_score) {
                best_score = score;
                best_g = g;
            }
        }
        p.groups = best_g;
        p.discal_per_group = rem / best_g - 1;
    }
    return p;
}

SerialReferenceCache::SerialReferenceCache(const GraphIndex& graph, const VectorStore& store,
                                           const VectorStore& queries)
    : graph_(graph), store_(store), queries_(queries) {}

const std::vector<SerialReference>& SerialReferenceCache::refs(std::uint32_t l, std::uint32_t k,
                                                               KernelKind kernel) {
    auto it = cache_.find(l);
    if (it != cache_.end()) return it->second;

    std::vector<SerialReference> refs(queries_.count());
    SearchParams params;
    params.L = l;
    params.K = k;
    params.kernel = kernel;

    std::size_t workers = std::min<std::size_t>(std::thread::hardware_concurrency(),
                                                std::max<std::size_t>(queries_.count(), 1));
    if (workers <= 1) {
        SerialSearchContext ctx(graph_.vertex_count());
        for (std::size_t q = 0; q < queries_.count(); ++q) {
            refs[q] = make_serial_reference(
                best_first_search(queries_.row_ptr(VertexId(q)), graph_, store_, params, ctx));
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                SerialSearchContext ctx(graph_.vertex_count());
                for (std::size_t q = next.fetch_add(1); q < queries_.count();
                     q = next.fetch_add(1)) {
                    refs[q] = make_serial_reference(
                        best_first_search(queries_.row_ptr(VertexId(q)), graph_, store_, params, ctx));
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return cache_.emplace(l, std::move(refs)).first->second;
}

namespace {

struct QueryMeasurement {
    std::uint64_t latency_ns = 0;
    double rr = 0;
    double recall = 0;
    SearchCounters counters;
    BreakdownTimes breakdown;
    bool short_result = false;
};

double single_query_recall(const std::vector<VertexId>& results, const GroundTruth& gt,
                           std::size_t q, std::uint32_t k) {
    std::vector<VertexId> truth(gt.ids[q].begin(), gt.ids[q].begin() + k);
    std::sort(truth.begin(), truth.end());
    std::size_t hit = 0;
    for (VertexId v : results) {
        if (std::binary_search(truth.begin(), truth.end(), v)) ++hit;
    }
    return double(hit) / double(k);
}

}  // namespace

std::vector<ConfigReport> run_suite(const GraphIndex& graph, const VectorStore& store,
                                    const VectorStore& queries, const GroundTruth& gt,
                                    const SuiteConfig& config, SerialReferenceCache& ref_cache) {
    config.validate();
    config.base.validate(graph.vertex_count());
    if (gt.k < config.base.K) {
        throw UsageError("suite: ground truth depth " + std::to_string(gt.k) +
                         " is smaller than K=" + std::to_string(config.base.K));
    }
    if (queries.count() == 0) throw UsageError("suite: no queries");

    const std::size_t q_count = queries.count();
    const auto& refs = ref_cache.refs(config.base.L, config.base.K, config.base.kernel);

    std::vector<ConfigReport> reports;
    for (const GridCell& cell : config.grid) {
        ConfigReport rep;
        rep.engine = engine_name(config.engine);
        rep.cell = cell;
        rep.L = config.base.L;
        rep.K = config.base.K;
        rep.width = config.width;
        rep.stealing = config.stealing;
        rep.inline_fraction = config.inline_fraction;
        rep.seed = config.seed;

        AsyncParams async_params;
        PathwiseParams pathwise_params;
        if (config.engine == EngineKind::Async) {
            async_params = derive_async_params(cell.intra, config);
            rep.groups = async_params.groups;
            rep.discal = async_params.discal_per_group;
            rep.dedicated_balancer = async_params.dedicated_balancer;
        } else if (config.engine == EngineKind::Pathwise) {
            pathwise_params.threads = cell.intra;
            pathwise_params.width = config.width;
            pathwise_params.base = config.base;
        }

        // per-worker measurement sink; index = pass * q_count + query
        std::vector<QueryMeasurement> measurements;
        std::vector<double> pass_qps;
        std::vector<double> pass_mean_latency_ms;
        std::vector<double> pass_pmb;

        const std::uint32_t total_passes = config.warmup + config.repetitions;
        measurements.resize(std::size_t(config.repetitions) * q_count);

        // each inter-worker owns its engine instance for the whole cell
        std::vector<std::unique_ptr<AsyncEngine>> engines(cell.inter);
        if (config.engine == EngineKind::Async) {
            for (auto& e : engines) {
                e = std::make_unique<AsyncEngine>(graph, store, async_params);
            }
        }

        for (std::uint32_t pass = 0; pass < total_passes; ++pass) {
            const bool recorded = pass >= config.warmup;
            const std::size_t rec_base = recorded ? std::size_t(pass - config.warmup) * q_count : 0;
            auto t_pass = Clock::now();

            auto worker_fn = [&](std::uint32_t w) {
                SerialSearchContext ctx(config.engine == EngineKind::Serial ? graph.vertex_count()
                                                                            : 0);
                for (std::size_t q = w; q < q_count; q += cell.inter) {
                    const float* query = queries.row_ptr(VertexId(q));
                    QueryMeasurement m;
                    auto t0 = Clock::now();
                    switch (config.engine) {
                        case EngineKind::Serial: {
                            auto r = best_first_search(query, graph, store, config.base, ctx);
                            m.latency_ns = ns_since(t0);
                            if (recorded) {
                                m.counters = r.counters;
                                m.short_result = r.short_result;
                                m.rr = redundant_ratio(r.trace, refs[q].expanded_sorted);
                                m.recall = single_query_recall(r.results, gt, q, config.base.K);
                                m.breakdown.serial_ns = m.latency_ns;
                                m.breakdown.total_thread_ns = m.latency_ns;
                                m.breakdown.expand_count = r.trace.size();
                            }
                            break;
                        }
                        case EngineKind::Pathwise: {
                            auto r = pathwise_search(query, graph, store, pathwise_params);
                            m.latency_ns = ns_since(t0);
                            if (recorded) {
                                m.counters = r.counters;
                                m.short_result = r.short_result;
                                auto trace = r.merged_trace();
                                m.rr = redundant_ratio(trace, refs[q].expanded_sorted);
                                m.recall = single_query_recall(r.results, gt, q, config.base.K);
                                m.breakdown = classify_pathwise(r, refs[q]);
                            }
                            break;
                        }
                        case EngineKind::Async: {
                            auto r = engines[w]->search(query);
                            m.latency_ns = ns_since(t0);
                            if (recorded) {
                                m.counters = r.counters;
                                m.short_result = r.short_result;
                                auto trace = r.merged_trace();
                                m.rr = redundant_ratio(trace, refs[q].expanded_sorted);
                                m.recall = single_query_recall(r.results, gt, q, config.base.K);
                                m.breakdown = classify_async(r, async_params.total_threads(),
                                                             refs[q]);
                            }
                            break;
                        }
                    }
                    if (recorded) measurements[rec_base + q] = m;
                }
            };

            if (cell.inter == 1) {
                worker_fn(0);
            } else {
                std::vector<std::thread> workers;
                for (std::uint32_t w = 0; w < cell.inter; ++w) workers.emplace_back(worker_fn, w);
                for (auto& t : workers) t.join();
            }

            if (recorded) {
                double wall_s = double(ns_since(t_pass)) * 1e-9;
                pass_qps.push_back(double(q_count) / wall_s);
                std::uint64_t lat_sum = 0;
                std::uint64_t byte_sum = 0;
                for (std::size_t q = 0; q < q_count; ++q) {
                    lat_sum += measurements[rec_base + q].latency_ns;
                    byte_sum += measurements[rec_base + q].counters.bytes_touched();
                }
                pass_mean_latency_ms.push_back(double(lat_sum) / double(q_count) * 1e-6);
                pass_pmb.push_back(double(byte_sum) / (wall_s * 1e9));
            }
        }

        // aggregate
        SearchReport& m = rep.metrics;
        m.queries = q_count;
        m.repetitions = config.repetitions;

        std::vector<std::uint64_t> latencies;
        latencies.reserve(measurements.size());
        double rr_sum = 0, recall_sum = 0;
        double exp_sum = 0, red_sum = 0, eval_sum = 0, byte_sum = 0;
        BreakdownTimes breakdown_total;
        for (const auto& q : measurements) {
            latencies.push_back(q.latency_ns);
            rr_sum += q.rr;
            recall_sum += q.recall;
            exp_sum += double(q.counters.expansions);
            red_sum += double(q.breakdown.redundant_count);
            eval_sum += double(q.counters.dist_evals);
            byte_sum += double(q.counters.bytes_touched());
            breakdown_total += q.breakdown;
            if (q.short_result) ++m.short_results;
        }
        std::sort(latencies.begin(), latencies.end());
        double n = double(measurements.size());
        m.mean_latency_ms = latencies.empty()
                                ? 0.0
                                : double(std::accumulate(latencies.begin(), latencies.end(),
                                                         std::uint64_t(0))) /
                                      n * 1e-6;
        if (!latencies.empty()) {
            m.p50_latency_ms = double(latencies[latencies.size() / 2]) * 1e-6;
            m.p99_latency_ms = double(latencies[std::size_t(double(latencies.size() - 1) * 0.99)]) * 1e-6;
        }
        double qps_sum = 0;
        for (double q : pass_qps) qps_sum += q;
        m.qps = pass_qps.empty() ? 0.0 : qps_sum / double(pass_qps.size());
        if (pass_mean_latency_ms.size() > 1) {
            double mean = 0;
            for (double v : pass_mean_latency_ms) mean += v;
            mean /= double(pass_mean_latency_ms.size());
            double var = 0;
            for (double v : pass_mean_latency_ms) var += (v - mean) * (v - mean);
            m.latency_pass_variance_ms2 = var / double(pass_mean_latency_ms.size() - 1);
        }
        m.recall = recall_sum / n;
        m.mean_rr = rr_sum / n;
        double pmb_sum = 0;
        for (double v : pass_pmb) pmb_sum += v;
        m.logical_pmb_gbps = pass_pmb.empty() ? 0.0 : pmb_sum / double(pass_pmb.size());
        m.logical_emb_gbps = m.logical_pmb_gbps * (1.0 - m.mean_rr);
        m.breakdown = to_fractions(breakdown_total);
        m.littles_law_ratio = m.qps * (m.mean_latency_ms * 1e-3) / double(cell.inter);
        m.mean_expansions = exp_sum / n;
        m.mean_redundant_expansions = red_sum / n;
        m.mean_dist_evals = eval_sum / n;
        m.mean_bytes_touched = byte_sum / n;

        reports.push_back(std::move(rep));
    }
    return reports;
}

}  // namespace graphann

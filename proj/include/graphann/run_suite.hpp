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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphann/metrics.hpp"

namespace graphann {

enum class EngineKind { Serial, Pathwise, Async };

std::string engine_name(EngineKind kind);
EngineKind parse_engine(const std::string& name);

struct GridCell {
    std::uint32_t intra = 1;  // threads per query
    std::uint32_t inter = 1;  // concurrent queries
};

/// Parses "1x8,2x4,4x2" into grid cells.
std::vector<GridCell> parse_grid(const std::string& text);

struct SuiteConfig {
    EngineKind engine = EngineKind::Serial;
    std::vector<GridCell> grid = {{1, 1}};
    SearchParams base;
    std::uint32_t width = 1;  // pathwise expansions per worker per epoch
    // async layout; -1 derives groups/calculators from the cell's intra count
    int groups = -1;
    int discal = -1;
    bool dedicated_balancer = false;
    bool stealing = true;
    float inline_fraction = 0.0f;
    std::uint32_t repetitions = 1;
    std::uint32_t warmup = 1;
    std::uint64_t seed = 0;  // echoed into reports

    void validate() const;
};

/// One report row per grid cell (and per recall target when targets are used).
struct ConfigReport {
    std::string engine;
    GridCell cell;
    std::uint32_t L = 0;
    std::uint32_t K = 0;
    std::uint32_t width = 0;
    std::uint32_t groups = 0;
    std::uint32_t discal = 0;
    bool dedicated_balancer = false;
    bool stealing = true;
    float inline_fraction = 0.0f;
    std::uint64_t seed = 0;
    double recall_target = 0.0;  // 0 when no target was requested
    bool target_missed = false;
    SearchReport metrics;
};

/// Derives the async role layout for a given intra-thread budget: prefers
/// group sizes of three (one maintainer plus two calculators), breaking ties
/// toward more groups; explicit overrides must multiply out to exactly intra.
AsyncParams derive_async_params(std::uint32_t intra, const SuiteConfig& config);

/// Cache of serial reference runs keyed by L, shared across cells so RR and
/// breakdown classification reuse one serial pass per (query, L).
class SerialReferenceCache {
public:
    SerialReferenceCache(const GraphIndex& graph, const VectorStore& store,
                         const VectorStore& queries);

    const std::vector<SerialReference>& refs(std::uint32_t l, std::uint32_t k, KernelKind kernel);

private:
    const GraphIndex& graph_;
    const VectorStore& store_;
    const VectorStore& queries_;
    std::map<std::uint32_t, std::vector<SerialReference>> cache_;
};

/// Runs warmup plus `repetitions` timed passes per grid cell with `inter`
/// concurrent workers each owning `intra` threads, and aggregates the
/// per-query measurements into one report per cell. Query order is
/// deterministic: worker w handles queries w, w+inter, ...
std::vector<ConfigReport> run_suite(const GraphIndex& graph, const VectorStore& store,
                                    const VectorStore& queries, const GroundTruth& gt,
                                    const SuiteConfig& config, SerialReferenceCache& ref_cache);

}  // namespace graphann

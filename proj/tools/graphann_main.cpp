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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "graphann/graph_build.hpp"
#include "graphann/graph_index.hpp"
#include "graphann/report_io.hpp"
#include "graphann/run_suite.hpp"

namespace {

using namespace graphann;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

Metric parse_metric(const std::string& name) {
    if (name == "l2") return Metric::L2Squared;
    if (name == "ip") return Metric::InnerProduct;
    throw UsageError("unknown metric '" + name + "' (expected l2|ip)");
}

KernelKind parse_kernel(const std::string& name) {
    if (name == "vectorized") return KernelKind::Vectorized;
    if (name == "scalar") return KernelKind::Scalar;
    throw UsageError("unknown kernel '" + name + "' (expected vectorized|scalar)");
}

struct CommonOpts {
    std::string vectors;
    std::string queries;
    std::string groundtruth;
    std::string graph;
    std::string metric = "l2";
    std::string format;  // empty = guess from extension
    std::uint32_t dim = 0;
    std::string kernel = "vectorized";
    bool debug_invariants = false;
};

VectorStore load_store(const std::string& path, const CommonOpts& opts) {
    VectorFileFormat fmt = guess_vector_format(path);
    if (!opts.format.empty()) {
        if (opts.format == "fvecs") fmt = VectorFileFormat::Fvecs;
        else if (opts.format == "bvecs") fmt = VectorFileFormat::Bvecs;
        else if (opts.format == "raw-f32") fmt = VectorFileFormat::RawF32;
        else throw UsageError("unknown format '" + opts.format + "'");
    }
    return load_vectors(path, fmt, parse_metric(opts.metric), opts.dim);
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--vectors", opts.vectors, "database vector file");
    cmd->add_option("--queries", opts.queries, "query vector file");
    cmd->add_option("--groundtruth", opts.groundtruth, "ground-truth ivecs file");
    cmd->add_option("--graph", opts.graph, "graph index file");
    cmd->add_option("--metric", opts.metric, "distance metric: l2|ip")->capture_default_str();
    cmd->add_option("--format", opts.format, "vector file format: fvecs|bvecs|raw-f32");
    cmd->add_option("--dim", opts.dim, "dimension for raw-f32 input");
    cmd->add_option("--kernel", opts.kernel, "distance kernel: vectorized|scalar")
        ->capture_default_str();
    cmd->add_flag("--debug-invariants", opts.debug_invariants,
                  "enable runtime invariant checks (exit 3 on violation)");
}

int cmd_build(const CommonOpts& opts, const BuildParams& build_params) {
    if (opts.vectors.empty() || opts.graph.empty()) {
        throw UsageError("build requires --vectors and --graph");
    }
    auto store = load_store(opts.vectors, opts);
    BuildParams bp = build_params;
    bp.kernel = parse_kernel(opts.kernel);
    auto graph = build_desk_index(store, bp);
    save_graph(graph, opts.graph);

    nlohmann::json sidecar{
        {"command", "build"},
        {"vectors", opts.vectors},
        {"metric", opts.metric},
        {"count", store.count()},
        {"dim", store.dim()},
        {"max_degree", bp.max_degree},
        {"build_beam", bp.build_beam},
        {"alpha", bp.alpha},
        {"seed", bp.seed},
        {"entry_nodes", graph.entry_nodes()},
        {"edges", graph.edge_count()},
        {"graph", opts.graph},
        {"format_version", 1},
    };
    std::ofstream side(opts.graph + ".json", std::ios::trunc);
    if (!side) throw DataError("cannot write sidecar: " + opts.graph + ".json");
    side << sidecar.dump(2) << "\n";

    std::printf("built graph: %zu vertices, %llu edges, entry %u -> %s\n", graph.vertex_count(),
                static_cast<unsigned long long>(graph.edge_count()), graph.entry_nodes().front(),
                opts.graph.c_str());
    return kExitOk;
}

int cmd_groundtruth(const CommonOpts& opts, std::uint32_t k) {
    if (opts.vectors.empty() || opts.queries.empty() || opts.groundtruth.empty()) {
        throw UsageError("groundtruth requires --vectors, --queries and --groundtruth");
    }
    auto store = load_store(opts.vectors, opts);
    auto queries = load_store(opts.queries, opts);
    auto gt = brute_force_topk(store, queries, k, parse_kernel(opts.kernel));
    save_ivecs(opts.groundtruth, gt);
    std::printf("wrote exact top-%u for %zu queries -> %s\n", k, queries.count(),
                opts.groundtruth.c_str());
    return kExitOk;
}

struct SearchOpts {
    std::string engine = "serial";
    std::string grid = "1x1";
    std::uint32_t L = 100;
    std::uint32_t K = 10;
    std::uint32_t width = 1;
    int groups = -1;
    int discal = -1;
    bool balancer = false;
    bool no_stealing = false;
    float inline_fraction = 0.0f;
    std::uint32_t repetitions = 1;
    std::uint32_t warmup = 1;
    std::uint64_t seed = 0;
    std::string recall_targets;
    std::string out_json;
    std::string out_csv;
};

std::vector<double> parse_targets(const std::string& text) {
    std::vector<double> targets;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            double t = std::stod(item);
            if (t <= 0.0 || t > 1.0) throw std::invalid_argument("range");
            targets.push_back(t);
        } catch (const std::exception&) {
            throw UsageError("bad recall target '" + item + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return targets;
}

int cmd_search(const CommonOpts& opts, const SearchOpts& so) {
    if (opts.vectors.empty() || opts.queries.empty() || opts.graph.empty() ||
        opts.groundtruth.empty()) {
        throw UsageError("search requires --vectors, --queries, --graph and --groundtruth");
    }

    SuiteConfig config;
    config.engine = parse_engine(so.engine);
    config.grid = parse_grid(so.grid);
    config.base.L = so.L;
    config.base.K = so.K;
    config.base.kernel = parse_kernel(opts.kernel);
    config.base.debug_checks = opts.debug_invariants;
    config.width = so.width;
    config.groups = so.groups;
    config.discal = so.discal;
    config.dedicated_balancer = so.balancer;
    config.stealing = !so.no_stealing;
    config.inline_fraction = so.inline_fraction;
    config.repetitions = so.repetitions;
    config.warmup = so.warmup;
    config.seed = so.seed;
    config.validate();
    auto targets = parse_targets(so.recall_targets);

    auto store = load_store(opts.vectors, opts);
    auto queries = load_store(opts.queries, opts);
    auto graph = load_graph(opts.graph);
    auto gt = load_ivecs(opts.groundtruth);
    if (graph.vertex_count() != store.count()) {
        throw DataError("graph has " + std::to_string(graph.vertex_count()) +
                        " vertices but the store has " + std::to_string(store.count()));
    }
    if (queries.dim() != store.dim()) {
        throw UsageError("query dimension does not match the database");
    }
    if (gt.query_count() != queries.count()) {
        throw DataError("ground truth covers " + std::to_string(gt.query_count()) +
                        " queries, expected " + std::to_string(queries.count()));
    }

    SerialReferenceCache cache(graph, store, queries);
    std::vector<ConfigReport> reports;

    if (targets.empty()) {
        reports = run_suite(graph, store, queries, gt, config, cache);
    } else {
        // ladder of L values doubling from K up to the configured maximum
        std::vector<std::uint32_t> ladder;
        for (std::uint32_t l = config.base.K; l < config.base.L; l *= 2) ladder.push_back(l);
        ladder.push_back(config.base.L);

        for (double target : targets) {
            for (const GridCell& cell : config.grid) {
                SuiteConfig cell_config = config;
                cell_config.grid = {cell};
                ConfigReport chosen;
                bool reached = false;
                for (std::uint32_t l : ladder) {
                    cell_config.base.L = std::max(l, config.base.K);
                    auto rows = run_suite(graph, store, queries, gt, cell_config, cache);
                    chosen = rows.front();
                    if (chosen.metrics.recall >= target) {
                        reached = true;
                        break;
                    }
                }
                chosen.recall_target = target;
                chosen.target_missed = !reached;
                reports.push_back(chosen);
            }
        }
    }

    if (!so.out_json.empty()) write_json_report(so.out_json, reports);
    if (!so.out_csv.empty()) write_csv_report(so.out_csv, reports);

    // plot-data table on stdout, one line per configuration
    std::printf("engine,intra,inter,L,mean_latency_ms,qps,recall,rr,target,missed\n");
    for (const auto& r : reports) {
        std::printf("%s,%u,%u,%u,%.4f,%.1f,%.4f,%.4f,%.3f,%d\n", r.engine.c_str(), r.cell.intra,
                    r.cell.inter, r.L, r.metrics.mean_latency_ms, r.metrics.qps, r.metrics.recall,
                    r.metrics.mean_rr, r.recall_target, r.target_missed ? 1 : 0);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-based approximate nearest neighbor search benchmark"};
    app.require_subcommand(1);
    // flat key=value config with one [section] per subcommand; flags win
    app.set_config("--config", "", "config file (key=value under a [build]/[groundtruth]/[search] section)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    CommonOpts opts;
    BuildParams build_params;
    std::uint32_t gt_k = 100;
    SearchOpts search_opts;

    auto* build = app.add_subcommand("build", "construct a graph index over a vector file");
    build->configurable();
    add_common(build, opts);
    build->add_option("--degree", build_params.max_degree, "max out-degree R")
        ->capture_default_str();
    build->add_option("--build-beam", build_params.build_beam, "construction beam width")
        ->capture_default_str();
    build->add_option("--alpha", build_params.alpha, "pruning diversity parameter")
        ->capture_default_str();
    build->add_option("--seed", build_params.seed, "build seed")->capture_default_str();

    auto* groundtruth =
        app.add_subcommand("groundtruth", "exact top-K per query by exhaustive scan");
    groundtruth->configurable();
    add_common(groundtruth, opts);
    groundtruth->add_option("--K", gt_k, "neighbors per query")->capture_default_str();

    auto* search = app.add_subcommand("search", "run a search benchmark sweep");
    search->configurable();
    add_common(search, opts);
    search->add_option("--engine", search_opts.engine, "serial|pathwise|async")
        ->capture_default_str();
    search->add_option("--grid", search_opts.grid, "intra x inter cells, e.g. 1x8,2x4,4x2")
        ->capture_default_str();
    search->add_option("--L", search_opts.L, "queue capacity (max when sweeping targets)")
        ->capture_default_str();
    search->add_option("--K", search_opts.K, "result count")->capture_default_str();
    search->add_option("--width", search_opts.width, "pathwise expansions per thread per epoch")
        ->capture_default_str();
    search->add_option("--groups", search_opts.groups, "async sub-queue count (-1 derives)");
    search->add_option("--discal", search_opts.discal, "async calculators per group (-1 derives)");
    search->add_flag("--balancer", search_opts.balancer, "dedicate a balancer thread");
    search->add_flag("--no-stealing", search_opts.no_stealing, "disable work stealing");
    search->add_option("--inline", search_opts.inline_fraction,
                       "fraction of missing distances maintainers compute eagerly");
    search->add_option("--repetitions", search_opts.repetitions, "timed passes per cell")
        ->capture_default_str();
    search->add_option("--warmup", search_opts.warmup, "warmup passes per cell")
        ->capture_default_str();
    search->add_option("--seed", search_opts.seed, "seed echoed into reports");
    search->add_option("--recall-targets", search_opts.recall_targets,
                       "comma list; sweeps L per target and flags target-missed");
    search->add_option("--out-json", search_opts.out_json, "JSON report path");
    search->add_option("--out-csv", search_opts.out_csv, "CSV report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (build->parsed()) return cmd_build(opts, build_params);
        if (groundtruth->parsed()) return cmd_groundtruth(opts, gt_k);
        if (search->parsed()) return cmd_search(opts, search_opts);
        throw UsageError("no subcommand given");
    } catch (const InvariantError& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return kExitInvariant;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
}

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

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "graphann/graph_build.hpp"
#include "graphann/graph_index.hpp"
#include "graphann/serial_engine.hpp"
#include "graphann/vector_store.hpp"
#include "support/fixtures.hpp"

using namespace graphann;
using graphann::testing::WalkthroughFixture;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "graphann_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("graph round-trip: walkthrough graph survives save/load bit-exactly") {
    auto fx = WalkthroughFixture::make();
    CHECK(fx.graph.degree(1) == 2);
    CHECK(fx.graph.degree(4) == 0);

    auto path = temp_file("walkthrough.graph");
    save_graph(fx.graph, path.string());
    auto loaded = load_graph(path.string());
    CHECK(loaded.offsets() == fx.graph.offsets());
    CHECK(loaded.neighbor_array() == fx.graph.neighbor_array());
    CHECK(loaded.entry_nodes() == fx.graph.entry_nodes());

    // re-save must be byte-identical
    auto path2 = temp_file("walkthrough2.graph");
    save_graph(loaded, path2.string());
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("graph round-trip: 10K-vertex random graph is byte-identical on re-save") {
    std::mt19937 rng(271828);
    const std::size_t n = 10'000;
    std::uniform_int_distribution<std::uint32_t> degree_dist(0, 12);
    std::uniform_int_distribution<VertexId> vertex_dist(0, VertexId(n - 1));

    std::vector<std::uint64_t> offsets(n + 1, 0);
    std::vector<VertexId> neighbors;
    std::vector<VertexId> scratch;
    for (std::size_t v = 0; v < n; ++v) {
        scratch.clear();
        std::uint32_t deg = degree_dist(rng);
        while (scratch.size() < deg) {
            VertexId u = vertex_dist(rng);
            if (u == v || std::find(scratch.begin(), scratch.end(), u) != scratch.end()) continue;
            scratch.push_back(u);
        }
        offsets[v + 1] = offsets[v] + scratch.size();
        neighbors.insert(neighbors.end(), scratch.begin(), scratch.end());
    }
    GraphIndex graph(std::move(offsets), std::move(neighbors), {0, 42}, 12);

    auto p1 = temp_file("rand10k_a.graph");
    auto p2 = temp_file("rand10k_b.graph");
    save_graph(graph, p1.string());
    auto loaded = load_graph(p1.string());
    save_graph(loaded, p2.string());
    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.edge_count() == graph.edge_count());
}

TEST_CASE("graph load: out-of-range neighbor names the vertex") {
    std::vector<std::uint64_t> offsets{0, 1};
    std::vector<VertexId> neighbors{1};  // N == 1, so neighbor 1 is out of range
    CHECK_THROWS_WITH_AS(GraphIndex(offsets, neighbors, {0}, 1), doctest::Contains("vertex 0"),
                         DataError);
}

TEST_CASE("graph load: corrupted offsets are rejected") {
    auto fx = WalkthroughFixture::make();
    auto path = temp_file("corrupt.graph");
    save_graph(fx.graph, path.string());

    auto bytes = slurp(path);
    // offsets start after magic(4) + version(4) + N(8) + max_degree(4) +
    // entry_count(4) + entries(3*4); byte-poke the second offset to break
    // monotonicity
    std::size_t offsets_base = 4 + 4 + 8 + 4 + 4 + 3 * 4;
    bytes[offsets_base + 8] = char(0xFF);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();

    CHECK_THROWS_AS(load_graph(path.string()), DataError);
}

TEST_CASE("empty-edge graph: searches return only entry nodes") {
    VectorStore::Matrix m(4, 1);
    m << 0, 1, 2, 3;
    VectorStore store(std::move(m), Metric::L2Squared);
    GraphIndex graph(std::vector<std::uint64_t>(5, 0), {}, {2}, 4);

    SearchParams params;
    params.L = 4;
    params.K = 2;
    float query = 0.0f;
    auto r = best_first_search(&query, graph, store, params);
    CHECK(r.results == std::vector<VertexId>{2});
    CHECK(r.trace == ExpansionTrace{2});
    CHECK(r.short_result);
}

TEST_CASE("medoid: midpoint of a 1-D triple") {
    VectorStore::Matrix m(3, 1);
    m << 0, 1, 2;
    VectorStore store(std::move(m), Metric::L2Squared);
    CHECK(medoid(store) == 1);
}

TEST_CASE("medoid: single vector") {
    VectorStore::Matrix m(1, 3);
    m << 1, 2, 3;
    VectorStore store(std::move(m), Metric::L2Squared);
    CHECK(medoid(store) == 0);
}

TEST_CASE("medoid: matches an exhaustive scan") {
    auto store = graphann::testing::make_uniform(500, 8, 21);
    Eigen::VectorXf centroid = store.matrix().colwise().mean();
    VertexId best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t v = 0; v < store.count(); ++v) {
        float d = 0;
        for (std::uint32_t c = 0; c < store.dim(); ++c) {
            float diff = centroid[c] - store.row(VertexId(v))[c];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = VertexId(v);
        }
    }
    CHECK(medoid(store) == best);
}

TEST_CASE("build_desk_index: N=3, R=2 gives the complete digraph") {
    VectorStore::Matrix m(3, 1);
    m << 0, 1, 2;
    VectorStore store(std::move(m), Metric::L2Squared);
    BuildParams bp;
    bp.max_degree = 2;
    bp.build_beam = 2;
    bp.alpha = 1.2f;
    auto graph = build_desk_index(store, bp);
    for (VertexId v = 0; v < 3; ++v) {
        auto nbrs = graph.neighbors(v);
        CHECK(nbrs.size() == 2);
        for (VertexId u = 0; u < 3; ++u) {
            if (u == v) continue;
            CHECK(std::find(nbrs.begin(), nbrs.end(), u) != nbrs.end());
        }
    }
}

TEST_CASE("build_desk_index: rejects N < R+1") {
    VectorStore::Matrix m(3, 1);
    m << 0, 1, 2;
    VectorStore store(std::move(m), Metric::L2Squared);
    BuildParams bp;
    bp.max_degree = 3;
    bp.build_beam = 3;
    CHECK_THROWS_AS(build_desk_index(store, bp), UsageError);
}

TEST_CASE("build_desk_index: deterministic for a fixed seed") {
    auto store = graphann::testing::make_uniform(300, 8, 33);
    BuildParams bp;
    bp.max_degree = 8;
    bp.build_beam = 16;
    bp.seed = 7;
    auto g1 = build_desk_index(store, bp);
    bp.threads = 1;
    auto g2 = build_desk_index(store, bp);
    CHECK(g1.offsets() == g2.offsets());
    CHECK(g1.neighbor_array() == g2.neighbor_array());
    CHECK(g1.entry_nodes() == g2.entry_nodes());
}

TEST_CASE("build_desk_index: jittered grid keeps each vertex's true nearest neighbor") {
    // 5x5 grid with small jitter so nearest neighbors are unique
    std::mt19937 rng(17);
    std::uniform_real_distribution<float> jitter(-0.05f, 0.05f);
    VectorStore::Matrix m(25, 2);
    for (int i = 0; i < 25; ++i) {
        m(i, 0) = float(i % 5) + jitter(rng);
        m(i, 1) = float(i / 5) + jitter(rng);
    }
    VectorStore store(std::move(m), Metric::L2Squared);

    BuildParams bp;
    bp.max_degree = 4;
    bp.build_beam = 25;
    bp.alpha = 1.0f;
    auto graph = build_desk_index(store, bp);

    for (VertexId v = 0; v < 25; ++v) {
        // exhaustive nearest other point
        VertexId nearest = kInvalidVertex;
        float best = std::numeric_limits<float>::infinity();
        for (VertexId u = 0; u < 25; ++u) {
            if (u == v) continue;
            float d = distance(store.row(v), store.row(u), Metric::L2Squared);
            if (d < best) {
                best = d;
                nearest = u;
            }
        }
        auto nbrs = graph.neighbors(v);
        CHECK(std::find(nbrs.begin(), nbrs.end(), nearest) != nbrs.end());
    }
}

TEST_CASE("build_desk_index: connected from the entry node and high recall on 1000 vectors") {
    auto store = graphann::testing::make_uniform(1000, 16, 55);
    BuildParams bp;
    bp.max_degree = 16;
    bp.build_beam = 32;
    bp.alpha = 1.2f;
    auto graph = build_desk_index(store, bp);

    // BFS reachability from the entry node
    std::vector<std::uint8_t> seen(store.count(), 0);
    std::vector<VertexId> frontier{graph.entry_nodes().front()};
    seen[frontier[0]] = 1;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        VertexId v = frontier.back();
        frontier.pop_back();
        for (VertexId u : graph.neighbors(v)) {
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                frontier.push_back(u);
            }
        }
    }
    CHECK(reached == store.count());

    // recall@10 >= 0.99 with the serial engine at L=64, against brute force
    auto queries = graphann::testing::make_uniform(100, 16, 56);
    auto gt = brute_force_topk(store, queries, 10);
    SearchParams params;
    params.L = 64;
    params.K = 10;
    double recall_sum = 0;
    SerialSearchContext ctx(store.count());
    for (std::size_t q = 0; q < queries.count(); ++q) {
        auto r = best_first_search(queries.row_ptr(VertexId(q)), graph, store, params, ctx);
        std::size_t hit = 0;
        for (VertexId v : r.results) {
            if (std::find(gt.ids[q].begin(), gt.ids[q].end(), v) != gt.ids[q].end()) ++hit;
        }
        recall_sum += double(hit) / 10.0;
    }
    CHECK(recall_sum / double(queries.count()) >= 0.99);
}

TEST_CASE("save_graph: unwritable path is an I/O error") {
    auto fx = WalkthroughFixture::make();
    CHECK_THROWS_AS(save_graph(fx.graph, "/nonexistent-dir/x.graph"), DataError);
}

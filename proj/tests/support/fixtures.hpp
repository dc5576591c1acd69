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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "graphann/graph_index.hpp"
#include "graphann/vector_store.hpp"

namespace graphann::testing {

// Small walkthrough fixture: eleven 1-D vectors (vertex 0 unused) so that the
// L2 distance ordering from query [0] follows the vertex labels, plus a
// sparse digraph with entry set {1,2,3}. With L=5 the serial search expands
// exactly [1,2,3,4,5].
struct WalkthroughFixture {
    VectorStore store;
    GraphIndex graph;
    std::vector<float> query{0.0f};

    static WalkthroughFixture make(bool far_vertex7 = false) {
        VectorStore::Matrix m(11, 1);
        for (int i = 0; i < 11; ++i) m(i, 0) = float(i);
        if (far_vertex7) m(7, 0) = 11.0f;  // pushes vertex 7 behind vertex 10

        // edges: 1->{4,5}, 2->{6,7}, 3->{8}, 6->{10}
        std::vector<std::uint64_t> offsets(12, 0);
        std::vector<VertexId> neighbors;
        auto set_edges = [&](VertexId v, std::vector<VertexId> out) {
            offsets[v + 1] = offsets[v] + out.size();
            for (VertexId u : out) neighbors.push_back(u);
        };
        set_edges(0, {});
        set_edges(1, {4, 5});
        set_edges(2, {6, 7});
        set_edges(3, {8});
        set_edges(4, {});
        set_edges(5, {});
        set_edges(6, {10});
        set_edges(7, {});
        set_edges(8, {});
        set_edges(9, {});
        set_edges(10, {});

        return WalkthroughFixture{
            VectorStore(std::move(m), Metric::L2Squared),
            GraphIndex(std::move(offsets), std::move(neighbors), {1, 2, 3}, 2)};
    }
};

inline VectorStore make_gaussian_mixture(std::size_t count, std::uint32_t dim,
                                         std::uint32_t centers, float sigma, std::uint64_t seed,
                                         Metric metric = Metric::L2Squared) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> center_dist(-1.0f, 1.0f);
    std::normal_distribution<float> noise(0.0f, sigma);

    std::vector<std::vector<float>> mus(centers, std::vector<float>(dim));
    for (auto& mu : mus) {
        for (auto& x : mu) x = center_dist(rng);
    }

    VectorStore::Matrix data(static_cast<Eigen::Index>(count), dim);
    std::uniform_int_distribution<std::uint32_t> pick(0, centers - 1);
    for (std::size_t r = 0; r < count; ++r) {
        const auto& mu = mus[pick(rng)];
        for (std::uint32_t c = 0; c < dim; ++c) {
            data(static_cast<Eigen::Index>(r), c) = mu[c] + noise(rng);
        }
    }
    return VectorStore(std::move(data), metric);
}

// Gaussian mixture with per-cluster low-dimensional latent structure: every
// cluster lives on its own random latent_dim-dimensional subspace (plus a
// little ambient noise), which gives the data a realistic intrinsic
// dimensionality so that exact top-K neighborhoods are identifiable at high
// ambient dimension. Structure (centers, loadings) comes from structure_seed;
// the draws come from sample_seed, so bases and queries can share a manifold.
inline VectorStore make_clustered(std::size_t count, std::uint32_t dim, std::uint32_t centers,
                                  std::uint32_t latent_dim, float sigma,
                                  std::uint64_t structure_seed, std::uint64_t sample_seed,
                                  Metric metric = Metric::L2Squared) {
    std::mt19937_64 structure_rng(structure_seed);
    std::uniform_real_distribution<float> center_dist(-1.0f, 1.0f);
    std::normal_distribution<float> loading(0.0f, 1.0f / std::sqrt(float(latent_dim)));

    std::vector<std::vector<float>> mus(centers, std::vector<float>(dim));
    std::vector<std::vector<float>> loadings(centers, std::vector<float>(std::size_t(dim) * latent_dim));
    for (std::uint32_t c = 0; c < centers; ++c) {
        for (auto& x : mus[c]) x = center_dist(structure_rng);
        for (auto& x : loadings[c]) x = loading(structure_rng);
    }

    std::mt19937_64 rng(sample_seed);
    std::normal_distribution<float> latent(0.0f, sigma);
    std::normal_distribution<float> ambient(0.0f, sigma / 20.0f);
    std::uniform_int_distribution<std::uint32_t> pick(0, centers - 1);

    VectorStore::Matrix data(static_cast<Eigen::Index>(count), dim);
    std::vector<float> z(latent_dim);
    for (std::size_t r = 0; r < count; ++r) {
        std::uint32_t c = pick(rng);
        for (auto& x : z) x = latent(rng);
        const auto& mu = mus[c];
        const auto& b = loadings[c];
        for (std::uint32_t i = 0; i < dim; ++i) {
            float v = mu[i];
            for (std::uint32_t j = 0; j < latent_dim; ++j) v += b[std::size_t(i) * latent_dim + j] * z[j];
            data(static_cast<Eigen::Index>(r), i) = v + ambient(rng);
        }
    }
    return VectorStore(std::move(data), metric);
}

inline VectorStore make_uniform(std::size_t count, std::uint32_t dim, std::uint64_t seed,
                                Metric metric = Metric::L2Squared) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    VectorStore::Matrix data(static_cast<Eigen::Index>(count), dim);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = dist(rng);
    }
    return VectorStore(std::move(data), metric);
}

// Independent quadratic-scan top-K oracle: its own distance loops, its own
// sort, no shared machinery with the library.
inline std::vector<std::vector<std::uint32_t>> quadratic_topk(const VectorStore& store,
                                                              const VectorStore& queries,
                                                              std::uint32_t k,
                                                              Metric metric) {
    std::vector<std::vector<std::uint32_t>> out(queries.count());
    for (std::size_t q = 0; q < queries.count(); ++q) {
        const float* qv = queries.row_ptr(static_cast<VertexId>(q));
        std::vector<std::pair<float, std::uint32_t>> scored;
        for (std::size_t v = 0; v < store.count(); ++v) {
            const float* sv = store.row_ptr(static_cast<VertexId>(v));
            float d = 0.0f;
            if (metric == Metric::L2Squared) {
                for (std::uint32_t c = 0; c < store.dim(); ++c) {
                    float diff = qv[c] - sv[c];
                    d += diff * diff;
                }
            } else {
                for (std::uint32_t c = 0; c < store.dim(); ++c) d += qv[c] * sv[c];
                d = -d;
            }
            scored.emplace_back(d, std::uint32_t(v));
        }
        std::sort(scored.begin(), scored.end());
        out[q].resize(k);
        for (std::uint32_t i = 0; i < k; ++i) out[q][i] = scored[i].second;
    }
    return out;
}

}  // namespace graphann::testing

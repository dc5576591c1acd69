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

#include "graphann/graph_index.hpp"

#include <cstring>
#include <fstream>
#include <unordered_set>

namespace graphann {

GraphIndex::GraphIndex(std::vector<std::uint64_t> offsets, std::vector<VertexId> neighbors,
                       std::vector<VertexId> entry_nodes, std::uint32_t max_degree)
    : offsets_(std::move(offsets)),
      neighbors_(std::move(neighbors)),
      entry_nodes_(std::move(entry_nodes)),
      max_degree_(max_degree) {
    validate();
}

void GraphIndex::validate() const {
    if (offsets_.empty()) {
        throw DataError("graph: empty offsets array");
    }
    if (offsets_.front() != 0) {
        throw DataError("graph: offsets[0] must be 0");
    }
    const std::size_t n = offsets_.size() - 1;
    if (n == 0) {
        throw DataError("graph: zero vertices");
    }
    if (offsets_.back() != neighbors_.size()) {
        throw DataError("graph: offsets[N]=" + std::to_string(offsets_.back()) +
                        " does not match neighbor array length " +
                        std::to_string(neighbors_.size()));
    }
    if (entry_nodes_.empty()) {
        throw DataError("graph: entry-node set is empty");
    }
    for (VertexId e : entry_nodes_) {
        if (e >= n) {
            throw DataError("graph: entry node " + std::to_string(e) + " out of range");
        }
    }
    std::unordered_set<VertexId> seen;
    for (std::size_t v = 0; v < n; ++v) {
        if (offsets_[v + 1] < offsets_[v]) {
            throw DataError("graph: offsets not monotone at vertex " + std::to_string(v));
        }
        std::uint64_t deg = offsets_[v + 1] - offsets_[v];
        if (deg > max_degree_) {
            throw DataError("graph: vertex " + std::to_string(v) + " has degree " +
                            std::to_string(deg) + " > max_degree " + std::to_string(max_degree_));
        }
        seen.clear();
        for (std::uint64_t i = offsets_[v]; i < offsets_[v + 1]; ++i) {
            VertexId u = neighbors_[i];
            if (u >= n) {
                throw DataError("graph: vertex " + std::to_string(v) + " has out-of-range neighbor " +
                                std::to_string(u));
            }
            if (u == static_cast<VertexId>(v)) {
                throw DataError("graph: vertex " + std::to_string(v) + " has a self-loop");
            }
            if (!seen.insert(u).second) {
                throw DataError("graph: vertex " + std::to_string(v) + " has duplicate neighbor " +
                                std::to_string(u));
            }
        }
    }
}

namespace {

constexpr char kMagic[4] = {'A', 'V', 'G', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void read_pod(std::ifstream& in, T& value, const std::string& path) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw DataError(path + ": truncated graph file");
    }
}

template <typename T>
void read_array(std::ifstream& in, std::vector<T>& out, std::size_t count, const std::string& path) {
    out.resize(count);
    in.read(reinterpret_cast<char*>(out.data()), std::streamsize(count * sizeof(T)));
    if (!in) {
        throw DataError(path + ": truncated graph file");
    }
}

}  // namespace

GraphIndex load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open graph file: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError(path + ": bad magic, not a graph file");
    }
    std::uint32_t version = 0;
    read_pod(in, version, path);
    if (version != kVersion) {
        throw DataError(path + ": unsupported graph version " + std::to_string(version));
    }
    std::uint64_t n = 0;
    std::uint32_t max_degree = 0;
    std::uint32_t entry_count = 0;
    read_pod(in, n, path);
    read_pod(in, max_degree, path);
    read_pod(in, entry_count, path);
    if (n == 0 || entry_count == 0) {
        throw DataError(path + ": graph must have at least one vertex and one entry node");
    }

    std::vector<VertexId> entries;
    read_array(in, entries, entry_count, path);
    std::vector<std::uint64_t> offsets;
    read_array(in, offsets, static_cast<std::size_t>(n) + 1, path);
    if (offsets.back() > (std::uint64_t(1) << 40)) {
        throw DataError(path + ": implausible edge count " + std::to_string(offsets.back()));
    }
    std::vector<VertexId> neighbors;
    read_array(in, neighbors, static_cast<std::size_t>(offsets.back()), path);

    in.peek();
    if (!in.eof()) {
        throw DataError(path + ": trailing bytes after neighbor array");
    }
    return GraphIndex(std::move(offsets), std::move(neighbors), std::move(entries), max_degree);
}

void save_graph(const GraphIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open graph file for writing: " + path);
    }
    out.write(kMagic, 4);
    std::uint32_t version = kVersion;
    std::uint64_t n = index.vertex_count();
    std::uint32_t max_degree = index.max_degree();
    std::uint32_t entry_count = static_cast<std::uint32_t>(index.entry_nodes().size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&max_degree), 4);
    out.write(reinterpret_cast<const char*>(&entry_count), 4);
    out.write(reinterpret_cast<const char*>(index.entry_nodes().data()),
              std::streamsize(entry_count) * 4);
    out.write(reinterpret_cast<const char*>(index.offsets().data()),
              std::streamsize(index.offsets().size() * 8));
    out.write(reinterpret_cast<const char*>(index.neighbor_array().data()),
              std::streamsize(index.neighbor_array().size() * 4));
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

VertexId medoid(const VectorStore& store, KernelKind kernel) {
    Eigen::VectorXf centroid = store.matrix().colwise().mean();
    std::uint64_t best = kNoPruneKey;
    for (std::size_t v = 0; v < store.count(); ++v) {
        float d = store.query_distance(centroid.data(), static_cast<VertexId>(v), kernel);
        best = std::min(best, pack_key(d, static_cast<VertexId>(v)));
    }
    return key_vertex(best);
}

}  // namespace graphann

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

#include "graphann/vector_store.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

namespace graphann {

namespace {

float l2_squared_scalar(const float* a, const float* b, std::uint32_t dim) {
    float sum = 0.0f;
    for (std::uint32_t i = 0; i < dim; ++i) {
        float diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

float neg_inner_product_scalar(const float* a, const float* b, std::uint32_t dim) {
    float sum = 0.0f;
    for (std::uint32_t i = 0; i < dim; ++i) {
        sum += a[i] * b[i];
    }
    return -sum;
}

float l2_squared_vec(const float* a, const float* b, std::uint32_t dim) {
    Eigen::Map<const Eigen::VectorXf> va(a, dim);
    Eigen::Map<const Eigen::VectorXf> vb(b, dim);
    return (va - vb).squaredNorm();
}

float neg_inner_product_vec(const float* a, const float* b, std::uint32_t dim) {
    Eigen::Map<const Eigen::VectorXf> va(a, dim);
    Eigen::Map<const Eigen::VectorXf> vb(b, dim);
    return -va.dot(vb);
}

}  // namespace

float distance_raw(const float* a, const float* b, std::uint32_t dim, Metric metric,
                   KernelKind kernel) {
    if (kernel == KernelKind::Scalar) {
        return metric == Metric::L2Squared ? l2_squared_scalar(a, b, dim)
                                           : neg_inner_product_scalar(a, b, dim);
    }
    return metric == Metric::L2Squared ? l2_squared_vec(a, b, dim)
                                       : neg_inner_product_vec(a, b, dim);
}

float distance(std::span<const float> a, std::span<const float> b, Metric metric,
               KernelKind kernel) {
    if (a.size() != b.size()) {
        throw UsageError("distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    return distance_raw(a.data(), b.data(), static_cast<std::uint32_t>(a.size()), metric, kernel);
}

VectorStore::VectorStore(Matrix data, Metric metric) : data_(std::move(data)), metric_(metric) {
    if (data_.rows() < 1 || data_.cols() < 1) {
        throw UsageError("VectorStore requires N >= 1 and dim >= 1");
    }
}

namespace {

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    return in;
}

std::uint64_t file_size_of(std::ifstream& in) {
    in.seekg(0, std::ios::end);
    auto size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    return size;
}

void check_finite(const VectorStore::Matrix& data, const std::string& path,
                  std::uint64_t record_header_bytes, std::uint64_t component_bytes) {
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.cols(); ++c) {
            if (!std::isfinite(data(r, c))) {
                // byte offset of the offending component in the source file
                std::uint64_t offset =
                    static_cast<std::uint64_t>(r) *
                        (record_header_bytes + static_cast<std::uint64_t>(data.cols()) * component_bytes) +
                    record_header_bytes + static_cast<std::uint64_t>(c) * component_bytes;
                throw DataError(path + ": non-finite component in vector " + std::to_string(r) +
                                " at byte offset " + std::to_string(offset));
            }
        }
    }
}

VectorStore load_prefixed(const std::string& path, Metric metric, bool bytes_payload) {
    auto in = open_binary(path);
    std::uint64_t size = file_size_of(in);
    if (size < 4) {
        throw DataError(path + ": truncated file, no dimension prefix at byte offset 0");
    }
    std::int32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    if (dim < 1) {
        throw DataError(path + ": invalid dimension " + std::to_string(dim) + " at byte offset 0");
    }
    std::uint64_t payload = bytes_payload ? std::uint64_t(dim) : std::uint64_t(dim) * 4;
    std::uint64_t record = 4 + payload;
    if (size % record != 0) {
        throw DataError(path + ": file size " + std::to_string(size) +
                        " is not a multiple of the record size " + std::to_string(record) +
                        "; truncated at byte offset " + std::to_string((size / record) * record));
    }
    std::uint64_t n = size / record;

    VectorStore::Matrix data(static_cast<Eigen::Index>(n), dim);
    std::vector<std::uint8_t> byte_buf(bytes_payload ? std::size_t(dim) : 0);
    in.seekg(0, std::ios::beg);
    for (std::uint64_t r = 0; r < n; ++r) {
        std::int32_t record_dim = 0;
        in.read(reinterpret_cast<char*>(&record_dim), 4);
        if (!in || record_dim != dim) {
            throw DataError(path + ": record " + std::to_string(r) + " has dimension " +
                            std::to_string(record_dim) + " (expected " + std::to_string(dim) +
                            ") at byte offset " + std::to_string(r * record));
        }
        if (bytes_payload) {
            in.read(reinterpret_cast<char*>(byte_buf.data()), std::streamsize(payload));
            for (std::int32_t c = 0; c < dim; ++c) {
                data(static_cast<Eigen::Index>(r), c) = static_cast<float>(byte_buf[std::size_t(c)]);
            }
        } else {
            in.read(reinterpret_cast<char*>(data.row(static_cast<Eigen::Index>(r)).data()),
                    std::streamsize(payload));
        }
        if (!in) {
            throw DataError(path + ": truncated record " + std::to_string(r) + " at byte offset " +
                            std::to_string(r * record + 4));
        }
    }
    if (!bytes_payload) {
        check_finite(data, path, 4, 4);
    }
    return VectorStore(std::move(data), metric);
}

VectorStore load_raw_f32(const std::string& path, Metric metric, std::uint32_t dim) {
    if (dim < 1) {
        throw UsageError("raw-f32 requires an explicit dimension");
    }
    auto in = open_binary(path);
    std::uint64_t size = file_size_of(in);
    std::uint64_t record = std::uint64_t(dim) * 4;
    if (size == 0 || size % record != 0) {
        throw DataError(path + ": file size " + std::to_string(size) +
                        " is not a positive multiple of " + std::to_string(record) +
                        " (dim " + std::to_string(dim) + " x 4 bytes)");
    }
    std::uint64_t n = size / record;
    VectorStore::Matrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(size));
    if (!in) {
        throw DataError(path + ": short read");
    }
    check_finite(data, path, 0, 4);
    return VectorStore(std::move(data), metric);
}

}  // namespace

VectorStore load_vectors(const std::string& path, VectorFileFormat format, Metric metric,
                         std::uint32_t raw_dim) {
    switch (format) {
        case VectorFileFormat::Fvecs:
            return load_prefixed(path, metric, /*bytes_payload=*/false);
        case VectorFileFormat::Bvecs:
            return load_prefixed(path, metric, /*bytes_payload=*/true);
        case VectorFileFormat::RawF32:
            return load_raw_f32(path, metric, raw_dim);
    }
    throw UsageError("unknown vector file format");
}

VectorFileFormat guess_vector_format(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        std::string s(suffix);
        return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".fvecs")) return VectorFileFormat::Fvecs;
    if (ends_with(".bvecs")) return VectorFileFormat::Bvecs;
    return VectorFileFormat::RawF32;
}

void save_fvecs(const std::string& path, const VectorStore& store) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path);
    }
    std::int32_t dim = static_cast<std::int32_t>(store.dim());
    for (std::size_t r = 0; r < store.count(); ++r) {
        out.write(reinterpret_cast<const char*>(&dim), 4);
        out.write(reinterpret_cast<const char*>(store.row_ptr(static_cast<VertexId>(r))),
                  std::streamsize(store.dim()) * 4);
    }
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

GroundTruth brute_force_topk(const VectorStore& store, const VectorStore& queries,
                             std::uint32_t k, KernelKind kernel) {
    if (k < 1 || k > store.count()) {
        throw UsageError("brute_force_topk: K must satisfy 1 <= K <= N (K=" + std::to_string(k) +
                         ", N=" + std::to_string(store.count()) + ")");
    }
    if (queries.dim() != store.dim()) {
        throw UsageError("brute_force_topk: query dimension mismatch");
    }

    GroundTruth gt;
    gt.k = k;
    gt.ids.resize(queries.count());
    gt.distances.resize(queries.count());

    auto scan_query = [&](std::size_t q) {
        const float* query = queries.row_ptr(static_cast<VertexId>(q));
        std::vector<std::uint64_t> keys;
        keys.reserve(store.count());
        for (std::size_t v = 0; v < store.count(); ++v) {
            float d = store.query_distance(query, static_cast<VertexId>(v), kernel);
            keys.push_back(pack_key(d, static_cast<VertexId>(v)));
        }
        std::partial_sort(keys.begin(), keys.begin() + k, keys.end());
        auto& ids = gt.ids[q];
        auto& dists = gt.distances[q];
        ids.resize(k);
        dists.resize(k);
        for (std::uint32_t i = 0; i < k; ++i) {
            ids[i] = key_vertex(keys[i]);
            dists[i] = key_dist(keys[i]);
        }
    };

    std::size_t workers = std::min<std::size_t>(std::thread::hardware_concurrency(),
                                                std::max<std::size_t>(queries.count(), 1));
    if (workers <= 1 || queries.count() < 2) {
        for (std::size_t q = 0; q < queries.count(); ++q) scan_query(q);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t q = next.fetch_add(1); q < queries.count();
                     q = next.fetch_add(1)) {
                    scan_query(q);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return gt;
}

GroundTruth load_ivecs(const std::string& path) {
    auto in = open_binary(path);
    std::uint64_t size = file_size_of(in);
    GroundTruth gt;
    std::uint64_t offset = 0;
    while (offset < size) {
        if (size - offset < 4) {
            throw DataError(path + ": truncated record header at byte offset " +
                            std::to_string(offset));
        }
        std::int32_t k = 0;
        in.read(reinterpret_cast<char*>(&k), 4);
        if (k < 1) {
            throw DataError(path + ": invalid record length " + std::to_string(k) +
                            " at byte offset " + std::to_string(offset));
        }
        if (gt.k == 0) {
            gt.k = static_cast<std::uint32_t>(k);
        } else if (gt.k != static_cast<std::uint32_t>(k)) {
            throw DataError(path + ": inconsistent record length at byte offset " +
                            std::to_string(offset));
        }
        if (size - offset - 4 < std::uint64_t(k) * 4) {
            throw DataError(path + ": truncated record at byte offset " + std::to_string(offset));
        }
        std::vector<VertexId> ids(static_cast<std::size_t>(k));
        in.read(reinterpret_cast<char*>(ids.data()), std::streamsize(k) * 4);
        gt.ids.push_back(std::move(ids));
        offset += 4 + std::uint64_t(k) * 4;
    }
    return gt;
}

void save_ivecs(const std::string& path, const GroundTruth& gt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path);
    }
    for (const auto& ids : gt.ids) {
        std::int32_t k = static_cast<std::int32_t>(ids.size());
        out.write(reinterpret_cast<const char*>(&k), 4);
        out.write(reinterpret_cast<const char*>(ids.data()), std::streamsize(ids.size()) * 4);
    }
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

}  // namespace graphann

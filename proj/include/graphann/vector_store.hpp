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

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graphann/common.hpp"

namespace graphann {

/// Distance kernel selection. The scalar kernel is always compiled in and can
/// be selected at runtime to cross-check the vectorized one.
enum class KernelKind { Vectorized, Scalar };

/// distance(a, b): L2Squared returns sum((a_i-b_i)^2); InnerProduct returns
/// -sum(a_i*b_i). The inner product is negated at the kernel boundary so that
/// smaller always means closer, for both metrics.
float distance(std::span<const float> a, std::span<const float> b, Metric metric,
               KernelKind kernel = KernelKind::Vectorized);

/// Unchecked hot-path variant; a and b must both have length dim.
float distance_raw(const float* a, const float* b, std::uint32_t dim, Metric metric,
                   KernelKind kernel);

/// Immutable set of N d-dimensional float32 vectors plus the metric that
/// searches over it use. Safe for unrestricted concurrent reads.
class VectorStore {
public:
    using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    VectorStore(Matrix data, Metric metric);

    std::size_t count() const { return static_cast<std::size_t>(data_.rows()); }
    std::uint32_t dim() const { return static_cast<std::uint32_t>(data_.cols()); }
    Metric metric() const { return metric_; }

    const float* row_ptr(VertexId v) const { return data_.data() + std::size_t(v) * dim(); }
    std::span<const float> row(VertexId v) const { return {row_ptr(v), dim()}; }
    const Matrix& matrix() const { return data_; }

    /// Distance from an external query (length dim) to stored vector v.
    float query_distance(const float* query, VertexId v, KernelKind kernel) const {
        return distance_raw(query, row_ptr(v), dim(), metric_, kernel);
    }

private:
    Matrix data_;
    Metric metric_;
};

enum class VectorFileFormat { Fvecs, Bvecs, RawF32 };

/// Loads a vector file into a store. N is inferred from the file size; bvecs
/// bytes are widened to float32. raw-f32 needs the dimension passed in.
/// Truncated files, inconsistent per-record dims and non-finite components are
/// rejected with the offending byte offset in the message.
VectorStore load_vectors(const std::string& path, VectorFileFormat format, Metric metric,
                         std::uint32_t raw_dim = 0);

/// Picks the format from the file extension (.fvecs/.bvecs), defaulting to
/// raw-f32 otherwise.
VectorFileFormat guess_vector_format(const std::string& path);

void save_fvecs(const std::string& path, const VectorStore& store);

/// Exact top-K lists per query, distances non-decreasing, ties broken by
/// smaller vertex id. Produced by exhaustive scan only.
struct GroundTruth {
    std::uint32_t k = 0;
    std::vector<std::vector<VertexId>> ids;        // one list per query
    std::vector<std::vector<float>> distances;     // parallel to ids

    std::size_t query_count() const { return ids.size(); }
};

GroundTruth brute_force_topk(const VectorStore& store, const VectorStore& queries,
                             std::uint32_t k, KernelKind kernel = KernelKind::Vectorized);

GroundTruth load_ivecs(const std::string& path);
void save_ivecs(const std::string& path, const GroundTruth& gt);

}  // namespace graphann

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

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace graphann {

using VertexId = std::uint32_t;

inline constexpr VertexId kInvalidVertex = std::numeric_limits<VertexId>::max();

enum class Metric { L2Squared, InnerProduct };

/// Bad arguments or configuration (CLI exit code 1).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or unreadable input data (CLI exit code 2).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A runtime invariant check failed in debug-invariants mode (CLI exit code 3).
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

// Order-preserving float -> u32 mapping: for any finite (or infinite) floats
// a < b  <=>  sortable_bits(a) < sortable_bits(b). Lets distances live in
// integer keys that sort with plain unsigned comparison.
inline std::uint32_t sortable_bits(float v) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    return (bits & 0x80000000u) ? ~bits : (bits | 0x80000000u);
}

inline float from_sortable_bits(std::uint32_t bits) {
    std::uint32_t raw = (bits & 0x80000000u) ? (bits & 0x7FFFFFFFu) : ~bits;
    return std::bit_cast<float>(raw);
}

// Packed (distance, vertex) key. Sorting keys ascending sorts by distance
// first and breaks ties by ascending vertex id, which is the tie rule used by
// every queue and top-K ordering in the library.
inline std::uint64_t pack_key(float dist, VertexId id) {
    return (static_cast<std::uint64_t>(sortable_bits(dist)) << 32) | id;
}

inline float key_dist(std::uint64_t key) {
    return from_sortable_bits(static_cast<std::uint32_t>(key >> 32));
}

inline VertexId key_vertex(std::uint64_t key) {
    return static_cast<VertexId>(key & 0xFFFFFFFFu);
}

/// Sentinel threshold meaning "prune nothing".
inline constexpr std::uint64_t kNoPruneKey = std::numeric_limits<std::uint64_t>::max();

inline constexpr float kInfDist = std::numeric_limits<float>::infinity();

}  // namespace graphann

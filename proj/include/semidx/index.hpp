// Copyright 2026-present the semidx authors
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/kernels.hpp"
#include "semidx/matrix.hpp"
#include "semidx/synth.hpp"

namespace semidx {

inline constexpr std::uint32_t kIndexVersion = 1;

struct IndexMeta {
    std::uint64_t seed = 0;
    double random_fraction = 0.1;
    std::string model_hash;
    std::uint32_t version = kIndexVersion;

    bool operator==(const IndexMeta&) const = default;
};

/// Annotated cluster representatives plus, for every record, its k nearest
/// representatives in embedding space. Immutable once built; crack() returns
/// a new value.
struct Index {
    std::size_t n_records = 0;
    std::size_t dim = 0;
    std::size_t k = 0;
    std::vector<std::size_t> rep_ids;
    std::vector<Neighbor> topk;  // n_records * k, each row ascending
    std::map<std::size_t, Annotation> annotations;
    Matrix embeddings;
    IndexMeta meta;

    std::span<const Neighbor> neighbors(std::size_t record) const { return {topk.data() + record * k, k}; }

    /// c(x): id of the nearest representative.
    std::size_t nearest_rep(std::size_t record) const { return rep_ids[topk[record * k].rep]; }

    const Annotation& rep_annotation(std::size_t rep_pos) const { return annotations.at(rep_ids[rep_pos]); }

    /// Throws ErrorKind::Integrity on any violated invariant.
    void validate() const;

    /// crc32 over representative ids and the top-k table.
    std::string hash() const;

    bool operator==(const Index&) const = default;
};

std::size_t default_rep_count(std::size_t n_records);

/// First ceil(random_fraction * count) ids uniformly at random, the rest by
/// furthest-point-first continuing from them (from the lowest id if none).
std::vector<std::size_t> select_representatives(const Matrix& embeddings, std::size_t count, double random_fraction,
                                                std::uint64_t seed);

/// Uniformly random representatives; the clustering lesion.
std::vector<std::size_t> select_random_representatives(std::size_t n_records, std::size_t count, std::uint64_t seed);

/// k nearest representatives for every record, ascending by distance, ties to
/// the lower representative position.
std::vector<Neighbor> build_distance_cache(const Matrix& embeddings, std::span<const std::size_t> rep_ids,
                                           std::size_t k);

/// Annotates the representatives through the oracle and builds the cache.
Index build_index(Matrix embeddings, std::vector<std::size_t> rep_ids, std::size_t k, Oracle& oracle,
                  IndexMeta meta);

/// Adds `new_ids` as representatives using the supplied annotations. Ids that
/// are already representatives are skipped.
Index crack(const Index& index, std::span<const std::size_t> new_ids,
            const std::map<std::size_t, Annotation>& annotations);

/// Same, taking every key of `annotations` in ascending order.
Index crack(const Index& index, const std::map<std::size_t, Annotation>& annotations);

void save_index(const Index& index, const std::filesystem::path& dir);
Index load_index(const std::filesystem::path& dir);

std::string encode_embeddings(const Matrix& m);
Matrix decode_embeddings(std::string_view blob, std::size_t rows, std::size_t cols);

}  // namespace semidx

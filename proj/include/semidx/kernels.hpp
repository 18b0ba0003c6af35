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

// Distance kernels behind FPF selection and the top-k cache. Each kernel has a
// serial reference and an OpenMP version; both evaluate every pair with the
// same per-pair routine, so their outputs are bit-identical.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "semidx/matrix.hpp"

namespace semidx {

/// One cached (representative position, distance) pair.
struct Neighbor {
    std::uint32_t rep = 0;
    float distance = 0.0f;

    bool operator==(const Neighbor&) const = default;
};

/// Ordering used everywhere for top-k lists: distance, then rep position.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) {
        return a.distance < b.distance;
    }
    return a.rep < b.rep;
}

double squared_distance(std::span<const float> a, std::span<const float> b);
double distance(std::span<const float> a, std::span<const float> b);

namespace serial {

/// mind[i] = min(mind[i], dist(points[i], points[center])).
void update_min_distances(const Matrix& points, std::size_t center, std::span<double> mind);

/// For each row, the k nearest of `rep_ids` (positions offset by `rep_offset`),
/// merged into the existing k entries per row of `topk` (pass an empty table of
/// size rows*k filled with sentinels to build from scratch).
void merge_nearest(const Matrix& points, std::span<const std::size_t> rep_ids, std::uint32_t rep_offset,
                   std::size_t k, std::span<Neighbor> topk);

}  // namespace serial

namespace parallel {

void update_min_distances(const Matrix& points, std::size_t center, std::span<double> mind);

void merge_nearest(const Matrix& points, std::span<const std::size_t> rep_ids, std::uint32_t rep_offset,
                   std::size_t k, std::span<Neighbor> topk);

}  // namespace parallel

/// Furthest-point-first: starting from `seeds` (in order), repeatedly adds the
/// row farthest from everything chosen so far until `count` rows are chosen.
/// Empty seeds start from row 0. Ties go to the lowest row index.
std::vector<std::size_t> furthest_point_first(const Matrix& points, std::vector<std::size_t> seeds,
                                              std::size_t count);

/// Sentinel entry (infinite distance) used to seed an empty top-k table.
Neighbor empty_neighbor();

/// Index of the first maximum of `values` (lowest index wins ties).
std::size_t argmax_first(std::span<const double> values);

}  // namespace semidx

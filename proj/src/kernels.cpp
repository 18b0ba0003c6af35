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

#include "semidx/kernels.hpp"

#include <cmath>
#include <limits>

namespace semidx {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        acc += d * d;
    }
    return acc;
}

double distance(std::span<const float> a, std::span<const float> b) { return std::sqrt(squared_distance(a, b)); }

Neighbor empty_neighbor() {
    return Neighbor{std::numeric_limits<std::uint32_t>::max(), std::numeric_limits<float>::infinity()};
}

std::size_t argmax_first(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> furthest_point_first(const Matrix& points, std::vector<std::size_t> seeds,
                                              std::size_t count) {
    std::vector<std::size_t> chosen = std::move(seeds);
    if (count == 0 || points.rows == 0) {
        return chosen;
    }
    if (chosen.empty()) {
        chosen.push_back(0);
    }
    std::vector<double> mind(points.rows, std::numeric_limits<double>::infinity());
    for (std::size_t c : chosen) {
        parallel::update_min_distances(points, c, mind);
    }
    // Chosen rows are excluded from the argmax, even when duplicates sit at 0.
    for (std::size_t c : chosen) {
        mind[c] = -1.0;
    }
    while (chosen.size() < count) {
        const std::size_t next = argmax_first(mind);
        chosen.push_back(next);
        parallel::update_min_distances(points, next, mind);
        mind[next] = -1.0;
    }
    return chosen;
}

namespace {

void update_row(const Matrix& points, std::span<const float> center, std::size_t i, std::span<double> mind) {
    const double d = distance(points.row(i), center);
    if (d < mind[i]) {
        mind[i] = d;
    }
}

// Insert candidate into a sorted list of k entries, dropping the largest.
void insert_sorted(std::span<Neighbor> row, Neighbor cand) {
    const std::size_t k = row.size();
    if (k == 0 || !neighbor_less(cand, row[k - 1])) {
        return;
    }
    std::size_t pos = k - 1;
    while (pos > 0 && neighbor_less(cand, row[pos - 1])) {
        row[pos] = row[pos - 1];
        --pos;
    }
    row[pos] = cand;
}

void merge_row(const Matrix& points, std::span<const std::size_t> rep_ids, std::uint32_t rep_offset, std::size_t k,
               std::size_t i, std::span<Neighbor> topk) {
    std::span<Neighbor> row = topk.subspan(i * k, k);
    const auto x = points.row(i);
    for (std::size_t j = 0; j < rep_ids.size(); ++j) {
        const auto d = static_cast<float>(distance(x, points.row(rep_ids[j])));
        insert_sorted(row, Neighbor{static_cast<std::uint32_t>(rep_offset + j), d});
    }
}

}  // namespace

namespace serial {

void update_min_distances(const Matrix& points, std::size_t center, std::span<double> mind) {
    const auto c = points.row(center);
    for (std::size_t i = 0; i < points.rows; ++i) {
        update_row(points, c, i, mind);
    }
}

void merge_nearest(const Matrix& points, std::span<const std::size_t> rep_ids, std::uint32_t rep_offset,
                   std::size_t k, std::span<Neighbor> topk) {
    for (std::size_t i = 0; i < points.rows; ++i) {
        merge_row(points, rep_ids, rep_offset, k, i, topk);
    }
}

}  // namespace serial

namespace parallel {

void update_min_distances(const Matrix& points, std::size_t center, std::span<double> mind) {
    const auto c = points.row(center);
    const auto n = static_cast<std::ptrdiff_t>(points.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        update_row(points, c, static_cast<std::size_t>(i), mind);
    }
}

void merge_nearest(const Matrix& points, std::span<const std::size_t> rep_ids, std::uint32_t rep_offset,
                   std::size_t k, std::span<Neighbor> topk) {
    const auto n = static_cast<std::ptrdiff_t>(points.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        merge_row(points, rep_ids, rep_offset, k, static_cast<std::size_t>(i), topk);
    }
}

}  // namespace parallel

}  // namespace semidx

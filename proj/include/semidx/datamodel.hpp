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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semidx {

/// One detected object: a categorical type at a position in the unit square.
struct LatentObject {
    std::string type;
    double x = 0.0;
    double y = 0.0;

    bool operator==(const LatentObject&) const = default;
};

/// Structured oracle output for one record. Object order carries no meaning.
struct Annotation {
    std::vector<LatentObject> objects;

    bool operator==(const Annotation&) const = default;
};

struct Record {
    std::size_t id = 0;
    std::vector<float> features;
    std::optional<Annotation> latent;
};

/// Order-1 OSPA over typed positions. `radius` is the closeness radius M.
struct GroundTruthMetric {
    double cutoff = 1.0;
    double radius = 0.1;

    void validate() const;
};

/// Per-pair base cost: min(cutoff, euclid) for equal types, cutoff otherwise.
double object_cost(const LatentObject& a, const LatentObject& b, double cutoff);

/// OSPA distance (order 1) between two annotations. Symmetric and
/// permutation-invariant bit for bit; a true metric.
double match_cost(const Annotation& a, const Annotation& b, const GroundTruthMetric& metric);

/// Same object count and match_cost below the closeness radius.
bool is_close(const Annotation& a, const Annotation& b, const GroundTruthMetric& metric);

/// For each annotation, the sorted positions of the other annotations that are
/// close to it (self excluded). Pairs are only compared within equal counts.
std::vector<std::vector<std::size_t>> close_neighbors(std::span<const Annotation* const> annotations,
                                                      const GroundTruthMetric& metric);

/// Canonical object order (type, x, y).
Annotation canonical(const Annotation& a);

namespace assignment {

/// Minimum-cost perfect matching on a square n*n row-major cost matrix.
/// Returns assign[row] = column.
std::vector<std::size_t> hungarian(std::span<const double> cost, std::size_t n);

/// Same, by enumerating all n! permutations. Intended for n <= 8.
std::vector<std::size_t> exhaustive(std::span<const double> cost, std::size_t n);

/// Largest n solved by enumeration inside match_cost.
inline constexpr std::size_t kExhaustiveLimit = 6;

}  // namespace assignment

}  // namespace semidx

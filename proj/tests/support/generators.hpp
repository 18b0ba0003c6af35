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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/matrix.hpp"

namespace semidx::testgen {

using Gen = std::mt19937_64;

inline double uniform(Gen& g, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t uniform_index(Gen& g, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(g);
}

/// Positions on a coarse grid so that exact ties and duplicates show up.
inline LatentObject object(Gen& g, const std::vector<std::string>& types, bool coarse) {
    LatentObject o;
    o.type = types[uniform_index(g, types.size())];
    if (coarse) {
        o.x = static_cast<double>(uniform_index(g, 5)) / 4.0;
        o.y = static_cast<double>(uniform_index(g, 5)) / 4.0;
    } else {
        o.x = uniform(g);
        o.y = uniform(g);
    }
    return o;
}

inline Annotation annotation(Gen& g, std::size_t max_objects, const std::vector<std::string>& types = {"car", "bus"},
                             bool coarse = false) {
    Annotation a;
    const std::size_t n = uniform_index(g, max_objects + 1);
    for (std::size_t i = 0; i < n; ++i) {
        a.objects.push_back(object(g, types, coarse));
    }
    return a;
}

inline Annotation shuffled(Annotation a, Gen& g) {
    std::shuffle(a.objects.begin(), a.objects.end(), g);
    return a;
}

inline Matrix matrix(Gen& g, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data) {
        v = static_cast<float>(uniform(g, lo, hi));
    }
    return m;
}

/// Small integer coordinates, so distances tie often.
inline Matrix integer_matrix(Gen& g, std::size_t rows, std::size_t cols, int max_value) {
    Matrix m(rows, cols);
    for (auto& v : m.data) {
        v = static_cast<float>(uniform_index(g, static_cast<std::size_t>(max_value) + 1));
    }
    return m;
}

inline Matrix column(const std::vector<float>& values) {
    Matrix m(values.size(), 1);
    m.data = values;
    return m;
}

}  // namespace semidx::testgen

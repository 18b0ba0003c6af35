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
#include <random>
#include <string_view>
#include <vector>

namespace semidx {

using Rng = std::mt19937_64;

/// Derives an independent substream seed from (root seed, label). Adding a new
/// labelled stream never perturbs the values drawn from existing ones.
std::uint64_t stream_seed(std::uint64_t root, std::string_view label);

inline Rng make_rng(std::uint64_t root, std::string_view label) {
    return Rng(stream_seed(root, label));
}

/// Uniform sample of `count` distinct values from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

}  // namespace semidx

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

#include <benchmark/benchmark.h>

#include <limits>
#include <random>
#include <vector>

#include "semidx/kernels.hpp"

namespace {

using semidx::Matrix;
using semidx::Neighbor;

Matrix random_matrix(std::size_t rows, std::size_t cols) {
    std::mt19937_64 g(42);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Matrix m(rows, cols);
    for (float& v : m.data) {
        v = u(g);
    }
    return m;
}

std::vector<std::size_t> strided_reps(std::size_t n, std::size_t count) {
    std::vector<std::size_t> reps;
    for (std::size_t r = 0; r < count; ++r) {
        reps.push_back(r * (n / count));
    }
    return reps;
}

template <bool Parallel>
void BM_MergeNearest(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix pts = random_matrix(n, 128);
    const auto reps = strided_reps(n, 140);
    const std::size_t k = 7;
    for (auto _ : state) {
        std::vector<Neighbor> topk(n * k, semidx::empty_neighbor());
        if constexpr (Parallel) {
            semidx::parallel::merge_nearest(pts, reps, 0, k, topk);
        } else {
            semidx::serial::merge_nearest(pts, reps, 0, k, topk);
        }
        benchmark::DoNotOptimize(topk.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * reps.size()));
}

template <bool Parallel>
void BM_UpdateMinDistances(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix pts = random_matrix(n, 128);
    std::vector<double> mind(n, std::numeric_limits<double>::infinity());
    std::size_t center = 0;
    for (auto _ : state) {
        if constexpr (Parallel) {
            semidx::parallel::update_min_distances(pts, center, mind);
        } else {
            semidx::serial::update_min_distances(pts, center, mind);
        }
        center = (center + 7919) % n;
        benchmark::DoNotOptimize(mind.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

}  // namespace

BENCHMARK(BM_MergeNearest<false>)->Name("merge_nearest/serial")->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MergeNearest<true>)->Name("merge_nearest/parallel")->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UpdateMinDistances<false>)->Name("update_min_distances/serial")->Arg(20000)->Arg(100000);
BENCHMARK(BM_UpdateMinDistances<true>)->Name("update_min_distances/parallel")->Arg(20000)->Arg(100000);

BENCHMARK_MAIN();

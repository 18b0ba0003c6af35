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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "semidx/kernels.hpp"
#include "support/generators.hpp"

namespace semidx {
namespace {

std::vector<Neighbor> brute_topk(const Matrix& points, const std::vector<std::size_t>& reps, std::size_t k) {
    std::vector<Neighbor> out;
    for (std::size_t i = 0; i < points.rows; ++i) {
        std::vector<Neighbor> all;
        for (std::size_t r = 0; r < reps.size(); ++r) {
            // Same per-pair routine as the kernels; the selection logic is what is under test.
            all.push_back({static_cast<std::uint32_t>(r), static_cast<float>(distance(points.row(i), points.row(reps[r])))});
        }
        std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
            return a.distance != b.distance ? a.distance < b.distance : a.rep < b.rep;
        });
        out.insert(out.end(), all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

TEST(Distance, Basics) {
    const std::vector<float> a = {0.0f, 0.0f};
    const std::vector<float> b = {3.0f, 4.0f};
    EXPECT_EQ(squared_distance(a, b), 25.0);
    EXPECT_EQ(distance(a, b), 5.0);
    EXPECT_EQ(distance(b, b), 0.0);
}

TEST(NeighborOrder, DistanceThenPosition) {
    EXPECT_TRUE(neighbor_less({1, 1.0f}, {0, 2.0f}));
    EXPECT_TRUE(neighbor_less({0, 1.0f}, {1, 1.0f}));
    EXPECT_FALSE(neighbor_less({1, 1.0f}, {0, 1.0f}));
    EXPECT_TRUE(std::isinf(empty_neighbor().distance));
}

TEST(ArgmaxFirst, LowestIndexWinsTies) {
    const std::vector<double> v = {1.0, 3.0, 2.0, 3.0};
    EXPECT_EQ(argmax_first(v), 1u);
}

TEST(MergeNearest, MatchesBruteForce) {
    testgen::Gen g(21);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix pts = testgen::matrix(g, 200, 16);
        std::vector<std::size_t> reps;
        for (std::size_t r = 0; r < 20; ++r) {
            reps.push_back(r * 10 + static_cast<std::size_t>(trial));
        }
        const std::size_t k = 5;
        std::vector<Neighbor> topk(pts.rows * k, empty_neighbor());
        serial::merge_nearest(pts, reps, 0, k, topk);
        EXPECT_EQ(topk, brute_topk(pts, reps, k));
    }
}

TEST(MergeNearest, SerialAndParallelAgreeWithTies) {
    testgen::Gen g(22);
    const Matrix pts = testgen::integer_matrix(g, 300, 3, 2);
    std::vector<std::size_t> reps;
    for (std::size_t r = 0; r < 30; ++r) {
        reps.push_back(r * 7);
    }
    const std::size_t k = 6;
    std::vector<Neighbor> a(pts.rows * k, empty_neighbor());
    std::vector<Neighbor> b = a;
    serial::merge_nearest(pts, reps, 0, k, a);
    parallel::merge_nearest(pts, reps, 0, k, b);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, brute_topk(pts, reps, k));
}

TEST(MergeNearest, IncrementalMergeEqualsOneShot) {
    testgen::Gen g(23);
    const Matrix pts = testgen::integer_matrix(g, 150, 2, 3);
    std::vector<std::size_t> reps;
    for (std::size_t r = 0; r < 24; ++r) {
        reps.push_back(r * 6 + 1);
    }
    const std::size_t k = 4;
    std::vector<Neighbor> whole(pts.rows * k, empty_neighbor());
    serial::merge_nearest(pts, reps, 0, k, whole);

    std::vector<Neighbor> parts(pts.rows * k, empty_neighbor());
    const std::vector<std::size_t> first(reps.begin(), reps.begin() + 10);
    const std::vector<std::size_t> second(reps.begin() + 10, reps.end());
    parallel::merge_nearest(pts, first, 0, k, parts);
    parallel::merge_nearest(pts, second, 10, k, parts);
    EXPECT_EQ(parts, whole);
}

TEST(UpdateMinDistances, SerialAndParallelAgree) {
    testgen::Gen g(24);
    const Matrix pts = testgen::matrix(g, 500, 8);
    std::vector<double> a(pts.rows, std::numeric_limits<double>::infinity());
    std::vector<double> b = a;
    for (std::size_t c : {3u, 100u, 250u}) {
        serial::update_min_distances(pts, c, a);
        parallel::update_min_distances(pts, c, b);
    }
    EXPECT_EQ(a, b);
    EXPECT_EQ(a[3], 0.0);
    EXPECT_EQ(a[100], 0.0);
    for (std::size_t i = 0; i < pts.rows; ++i) {
        const double want = std::min({distance(pts.row(i), pts.row(3)), distance(pts.row(i), pts.row(100)),
                                      distance(pts.row(i), pts.row(250))});
        EXPECT_EQ(a[i], want);
    }
}

TEST(FurthestPointFirst, HandTraceOnALine) {
    const Matrix pts = testgen::column({0.0f, 1.0f, 9.0f, 10.0f});
    EXPECT_EQ(furthest_point_first(pts, {}, 2), (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(furthest_point_first(pts, {}, 3), (std::vector<std::size_t>{0, 3, 1}));
    EXPECT_EQ(furthest_point_first(pts, {}, 4).size(), 4u);
}

TEST(FurthestPointFirst, ContinuesFromSeeds) {
    const Matrix pts = testgen::column({0.0f, 1.0f, 9.0f, 10.0f, 5.0f});
    // From seed 4 (value 5): 0 and 3 are both 5 away, lowest id first.
    EXPECT_EQ(furthest_point_first(pts, {4}, 3), (std::vector<std::size_t>{4, 0, 3}));
}

TEST(FurthestPointFirstProperty, EachPickIsTheFarthestRemaining) {
    testgen::Gen g(25);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix pts = testgen::integer_matrix(g, 60, 2, 6);
        const auto chosen = furthest_point_first(pts, {}, 12);
        ASSERT_EQ(chosen.front(), 0u);
        for (std::size_t step = 1; step < chosen.size(); ++step) {
            double best = -1.0;
            std::size_t best_id = 0;
            for (std::size_t i = 0; i < pts.rows; ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t s = 0; s < step; ++s) {
                    m = std::min(m, distance(pts.row(i), pts.row(chosen[s])));
                }
                if (m > best) {
                    best = m;
                    best_id = i;
                }
            }
            if (best == 0.0) {
                break;  // every point is covered; the remaining order is not constrained here
            }
            EXPECT_EQ(chosen[step], best_id) << "trial " << trial << " step " << step;
        }
    }
}

}  // namespace
}  // namespace semidx

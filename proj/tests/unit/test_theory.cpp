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

#include <cmath>

#include "semidx/index.hpp"
#include "semidx/theory.hpp"
#include "support/error_kind.hpp"
#include "support/generators.hpp"

namespace semidx {
namespace {

using testgen::kind_of;

TEST(BruteForceKCenter, Examples) {
    const Matrix line = testgen::column({0.0f, 1.0f, 9.0f, 10.0f});
    EXPECT_EQ(brute_force_kcenter(line, 2), 1.0);
    EXPECT_EQ(brute_force_kcenter(line, 4), 0.0);
    EXPECT_EQ(brute_force_kcenter(testgen::column({0.0f, 10.0f}), 1), 10.0);
    EXPECT_EQ(brute_force_kcenter(line, 1), 9.0);
}

TEST(BruteForceKCenter, Errors) {
    testgen::Gen g(1);
    EXPECT_EQ(kind_of([&] { brute_force_kcenter(testgen::matrix(g, kBruteForceLimit + 1, 2), 2); }), ErrorKind::Size);
    EXPECT_EQ(kind_of([&] { brute_force_kcenter(testgen::matrix(g, 5, 2), 0); }), ErrorKind::Config);
    EXPECT_EQ(kind_of([&] { brute_force_kcenter(testgen::matrix(g, 5, 2), 6); }), ErrorKind::Config);
}

TEST(CoveringRadius, Examples) {
    const Matrix line = testgen::column({0.0f, 1.0f, 9.0f, 10.0f});
    EXPECT_EQ(covering_radius(line, std::vector<std::size_t>{0, 3}), 1.0);
    EXPECT_EQ(covering_radius(line, std::vector<std::size_t>{1}), 9.0);
    EXPECT_EQ(kind_of([&] { covering_radius(line, std::vector<std::size_t>{}); }), ErrorKind::Config);
}

TEST(FpfRatio, SweepStaysWithinTwo) {
    const double worst = fpf_ratio_sweep(300, 7);
    EXPECT_GE(worst, 1.0);
    EXPECT_LE(worst, 2.0);
}

TEST(CostEstimate, Examples) {
    EXPECT_EQ(cost_estimate(CostModel{}), 0.0);
    CostModel cm;
    cm.budget = 10;
    cm.train_steps = 0;
    cm.n_records = 100;
    cm.dim = 4;
    cm.cost_target = 1.0;
    cm.cost_embed = 0.01;
    cm.cost_distance = 1e-6;
    // 10 + 0 + 1 + 0.004
    EXPECT_NEAR(cost_estimate(cm), 11.004, 1e-12);
    CostModel doubled = cm;
    doubled.cost_target = 2.0;
    EXPECT_NEAR(cost_estimate(doubled) - cost_estimate(cm), 10.0, 1e-12);
    cm.n_records = -1;
    EXPECT_EQ(kind_of([&] { cost_estimate(cm); }), ErrorKind::Config);
}

TEST(CostEstimateProperty, PartialDerivativesMatchTheClosedForm) {
    testgen::Gen g(2);
    for (int trial = 0; trial < 200; ++trial) {
        CostModel cm;
        cm.n_records = testgen::uniform(g, 0, 1e5);
        cm.dim = testgen::uniform(g, 0, 256);
        cm.train_steps = testgen::uniform(g, 0, 1e4);
        cm.budget = testgen::uniform(g, 0, 1e3);
        cm.cost_target = testgen::uniform(g, 0, 10);
        cm.cost_embed = testgen::uniform(g, 0, 1e-2);
        cm.cost_distance = testgen::uniform(g, 0, 1e-8);
        const double base = cost_estimate(cm);
        const double h = 1.0;
        CostModel more_budget = cm;
        more_budget.budget += h;
        EXPECT_NEAR((cost_estimate(more_budget) - base) / h,
                    cm.cost_target + cm.n_records * cm.dim * cm.cost_distance, 1e-6 * std::max(1.0, base));
        CostModel more_steps = cm;
        more_steps.train_steps += h;
        EXPECT_NEAR((cost_estimate(more_steps) - base) / h, cm.cost_embed, 1e-6 * std::max(1.0, base));
        CostModel more_records = cm;
        more_records.n_records += h;
        EXPECT_NEAR((cost_estimate(more_records) - base) / h, cm.cost_embed + cm.budget * cm.dim * cm.cost_distance,
                    1e-6 * std::max(1.0, base));
    }
}

// Clusters of records whose embeddings sit within 0.1 of a center and whose
// single car sits within 0.04 of the cluster's x. Centers are 10 apart.
struct Clustered {
    Dataset ds;
    Matrix embeddings;
    std::vector<std::size_t> cluster_of;
    std::vector<std::size_t> reps;
};

Clustered clustered(std::size_t n_clusters, std::size_t per_cluster, std::uint64_t seed) {
    testgen::Gen g(seed);
    Clustered c;
    c.ds.feature_dim = 2;
    c.ds.labels = {"bus", "car"};
    const std::size_t n = n_clusters * per_cluster;
    c.embeddings = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cl = i % n_clusters;
        const bool is_rep = i < n_clusters;
        const double x = 0.1 + 0.2 * static_cast<double>(cl) + (is_rep ? 0.0 : testgen::uniform(g, -0.04, 0.04));
        Record r;
        r.id = i;
        r.features = {0.0f, 0.0f};
        r.latent = Annotation{{{"car", x, 0.5}}};
        c.ds.records.push_back(r);
        c.embeddings.row(i)[0] = static_cast<float>(10.0 * static_cast<double>(cl) +
                                                   (is_rep ? 0.0 : testgen::uniform(g, -0.05, 0.05)));
        c.embeddings.row(i)[1] = static_cast<float>(is_rep ? 0.0 : testgen::uniform(g, -0.05, 0.05));
        c.cluster_of.push_back(cl);
        if (is_rep) {
            c.reps.push_back(i);
        }
    }
    return c;
}

std::vector<const Annotation*> truth_pointers(const Dataset& ds, std::span<const std::size_t> ids) {
    std::vector<const Annotation*> out;
    for (std::size_t id : ids) {
        out.push_back(&*ds.records[id].latent);
    }
    return out;
}

std::vector<std::size_t> all_ids(std::size_t n) {
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = i;
    }
    return ids;
}

TEST(LemmaDist, ZeroLossInstanceHasNoViolations) {
    const auto c = clustered(3, 2, 3);
    const auto ids = all_ids(c.ds.size());
    const auto ann = truth_pointers(c.ds, ids);
    const auto check = verify_lemma_dist(c.embeddings, ids, ann, GroundTruthMetric{}, 1.0, 0.0);
    EXPECT_TRUE(check.precondition_met);
    EXPECT_EQ(check.pairs_checked, 15u);
    EXPECT_EQ(check.violations, 0u);
}

TEST(LemmaDist, CollapsedEmbeddingViolates) {
    const auto c = clustered(3, 2, 3);
    const auto ids = all_ids(c.ds.size());
    const auto ann = truth_pointers(c.ds, ids);
    const Matrix collapsed(c.ds.size(), 2);
    const auto check = verify_lemma_dist(collapsed, ids, ann, GroundTruthMetric{}, 1.0, 0.5);
    EXPECT_FALSE(check.precondition_met);
    // Every cross-cluster pair: 15 pairs minus the 3 within-cluster ones.
    EXPECT_EQ(check.violations, 12u);
    EXPECT_EQ(check.offending.size(), 12u);
    for (const auto& [a, b] : check.offending) {
        EXPECT_NE(c.cluster_of[a], c.cluster_of[b]);
    }
}

TEST(LemmaDist, ShapeError) {
    const auto c = clustered(2, 2, 3);
    const std::vector<std::size_t> ids = {0, 1};
    const auto ann = truth_pointers(c.ds, std::vector<std::size_t>{0});
    EXPECT_EQ(kind_of([&] { verify_lemma_dist(c.embeddings, ids, ann, GroundTruthMetric{}, 1.0, 0.0); }),
              ErrorKind::Shape);
}

TEST(TheoremBound, ZeroLossConstructionHolds) {
    const auto c = clustered(4, 25, 4);
    Oracle oracle(c.ds);
    const Index index = build_index(c.embeddings, c.reps, 1, oracle, IndexMeta{});
    auto cat = builtin_scorers(c.ds.labels);
    const auto& scorer = cat.get("mean_x");
    const auto proxy = propagate_numeric(index, rep_scores(index, scorer), 1);
    const auto ids = all_ids(c.ds.size());
    const auto ann = truth_pointers(c.ds, ids);
    TheoryConfig cfg;
    const auto checks = check_theorem_bound(proxy, scorer, cfg, ids, ann, GroundTruthMetric{}, 0.0);
    EXPECT_EQ(checks.zero_loss.baseline, 0.0);
    EXPECT_GT(checks.zero_loss.lhs, 0.0);
    EXPECT_LE(checks.zero_loss.lhs, 0.04 + 1e-9);
    EXPECT_DOUBLE_EQ(checks.zero_loss.rhs, 0.1);
    EXPECT_TRUE(checks.zero_loss.holds);
    EXPECT_TRUE(checks.lossy.holds);
    EXPECT_EQ(checks.sup_far_count, 75u);
}

TEST(TheoremBound, HandComputedLossyCase) {
    Dataset ds;
    ds.labels = {"bus", "car"};
    ds.feature_dim = 1;
    for (int cars : {1, 3}) {
        Record r;
        r.id = ds.records.size();
        r.features = {0.0f};
        Annotation a;
        for (int i = 0; i < cars; ++i) {
            a.objects.push_back({"car", 0.5, 0.5});
        }
        r.latent = a;
        ds.records.push_back(r);
    }
    ProxyScores proxy;
    proxy.values = {1.0, 2.0};
    proxy.k = 1;
    auto cat = builtin_scorers(ds.labels);
    const std::vector<std::size_t> ids = {0, 1};
    const auto ann = truth_pointers(ds, ids);
    TheoryConfig cfg;
    cfg.loss_bound = 5.0;
    const auto checks = check_theorem_bound(proxy, cat.get("count:car"), cfg, ids, ann, GroundTruthMetric{}, 0.2);
    EXPECT_DOUBLE_EQ(checks.zero_loss.lhs, 0.5);
    EXPECT_FALSE(checks.zero_loss.holds);
    EXPECT_EQ(checks.sup_far_count, 1u);
    // 0.1 + 5 * 1 / 1 * 0.2
    EXPECT_DOUBLE_EQ(checks.lossy.rhs, 1.1);
    EXPECT_TRUE(checks.lossy.holds);

    cfg.loss_bound = 0.5;
    EXPECT_EQ(kind_of([&] { check_theorem_bound(proxy, cat.get("count:car"), cfg, ids, ann, GroundTruthMetric{}, 0.2); }),
              ErrorKind::Contract);
}

TEST(TheoremBound, RequiresNearestRepPropagation) {
    ProxyScores proxy;
    proxy.values = {0.0};
    proxy.k = 3;
    Annotation a;
    const std::vector<std::size_t> ids = {0};
    const std::vector<const Annotation*> ann = {&a};
    auto cat = builtin_scorers({"car"});
    EXPECT_EQ(kind_of([&] {
                  check_theorem_bound(proxy, cat.get("count:car"), TheoryConfig{}, ids, ann, GroundTruthMetric{}, 0.0);
              }),
              ErrorKind::Contract);
}

TEST(TheoryConfig, Validation) {
    TheoryConfig cfg;
    cfg.radius = 0.0;
    EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::Config);
    cfg = TheoryConfig{};
    cfg.margin = -1.0;
    EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::Config);
    cfg = TheoryConfig{};
    cfg.query_loss = nullptr;
    EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::Config);
}

}  // namespace
}  // namespace semidx

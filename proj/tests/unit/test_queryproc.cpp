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
#include <numbers>
#include <numeric>
#include <set>

#include "semidx/queryproc.hpp"
#include "support/error_kind.hpp"
#include "support/generators.hpp"

namespace semidx {
namespace {

using testgen::kind_of;

// Record i holds cars[i] cars at the frame center.
Dataset car_dataset(const std::vector<int>& cars) {
    Dataset ds;
    ds.feature_dim = 4;
    ds.labels = {"bus", "car"};
    for (std::size_t i = 0; i < cars.size(); ++i) {
        Record r;
        r.id = i;
        r.features.assign(4, 0.0f);
        Annotation a;
        for (int c = 0; c < cars[i]; ++c) {
            a.objects.push_back({"car", 0.5, 0.5});
        }
        r.latent = a;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

std::vector<int> random_counts(std::size_t n, int max_count, std::uint64_t seed) {
    testgen::Gen g(seed);
    std::vector<int> out(n);
    for (auto& c : out) {
        c = static_cast<int>(testgen::uniform_index(g, static_cast<std::size_t>(max_count) + 1));
    }
    return out;
}

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

ProxyScores numeric_proxy(std::vector<double> values) {
    ProxyScores p;
    p.kind = ScoreKind::Numeric;
    p.values = std::move(values);
    return p;
}

// Smallest t >= from at which the range-only Bernstein half-width reaches epsilon.
std::size_t range_only_stop(double range, double epsilon, double delta, std::size_t from) {
    for (std::size_t t = from;; ++t) {
        const double td = static_cast<double>(t);
        const double l = std::log(3.0 * std::numbers::pi * std::numbers::pi * td * td / (6.0 * delta));
        if (3.0 * range * l / td <= epsilon) {
            return t;
        }
    }
}

TEST(ProxyQuality, Examples) {
    const std::vector<double> t = {1.0, 2.0, 4.0, 3.0};
    EXPECT_DOUBLE_EQ(proxy_quality(t, t), 1.0);
    EXPECT_EQ(proxy_quality(std::vector<double>(4, 2.0), t), 0.0);
    std::vector<double> affine;
    for (double v : t) {
        affine.push_back(2.0 * v + 3.0);
    }
    EXPECT_DOUBLE_EQ(proxy_quality(affine, t), 1.0);
    const std::vector<double> shorter = {1.0, 2.0};
    EXPECT_EQ(kind_of([&] { proxy_quality(shorter, t); }), ErrorKind::Shape);
}

TEST(ProxyQuality, MatchesHandComputation) {
    const std::vector<double> p = {0.0, 1.0, 2.0};
    const std::vector<double> t = {0.0, 2.0, 1.0};
    // Centered: p = (-1, 0, 1), t = (-1, 1, 0); covariance 1, variances 2 and 2.
    EXPECT_DOUBLE_EQ(proxy_quality(p, t), 0.25);
}

TEST(Aggregation, ConstantDataStopsOnTheRangeTerm) {
    const auto ds = car_dataset(std::vector<int>(500, 2));
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.epsilon = 0.1;
    spec.hi = 6.0;
    const std::size_t want = range_only_stop(6.0, 0.1, spec.delta, 1);
    Oracle a(ds);
    const auto proxied = agg_query(numeric_proxy(as_doubles(random_counts(500, 3, 1))), a, cat.get("count:car"), spec, 4);
    Oracle b(ds);
    const auto uniform = agg_uniform_baseline(b, cat.get("count:car"), spec, 4);
    EXPECT_EQ(uniform.estimate, 2.0);
    EXPECT_EQ(uniform.samples, want);
    EXPECT_EQ(proxied.estimate, 2.0);
    EXPECT_EQ(proxied.samples, want);
    EXPECT_EQ(uniform.outcome, Outcome::Ok);
}

TEST(Aggregation, PerfectProxyGivesTheExactMean) {
    const auto counts = random_counts(3000, 6, 2);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.epsilon = 0.05;
    spec.hi = 6.0;
    Oracle oracle(ds);
    const auto r = agg_query(numeric_proxy(as_doubles(counts)), oracle, cat.get("count:car"), spec, 3);
    const double truth = std::accumulate(counts.begin(), counts.end(), 0.0) / 3000.0;
    EXPECT_NEAR(r.estimate, truth, 1e-12);
    EXPECT_EQ(*r.truth, truth);
    EXPECT_DOUBLE_EQ(r.beta, 1.0);
    // Corrected samples have zero variance once the control variate is on.
    EXPECT_EQ(r.samples, range_only_stop(6.0, 0.05, spec.delta, spec.min_samples));
    EXPECT_DOUBLE_EQ(*r.rho2, 1.0);
}

TEST(Aggregation, ZeroBetaIsTheUniformSamplePath) {
    const auto counts = random_counts(2000, 6, 3);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.hi = 6.0;
    spec.epsilon = 0.1;
    spec.beta_clamp = 0.0;
    testgen::Gen g(5);
    std::vector<double> noisy;
    for (int c : counts) {
        noisy.push_back(c + testgen::uniform(g, -1.0, 1.0));
    }
    Oracle a(ds);
    Oracle b(ds);
    const auto proxied = agg_query(numeric_proxy(noisy), a, cat.get("count:car"), spec, 11);
    const auto uniform = agg_uniform_baseline(b, cat.get("count:car"), spec, 11);
    EXPECT_EQ(proxied.estimate, uniform.estimate);
    EXPECT_EQ(proxied.samples, uniform.samples);
    EXPECT_EQ(proxied.annotated, uniform.annotated);
    EXPECT_EQ(proxied.beta, 0.0);
}

TEST(Aggregation, GoodProxyNeedsFewerCallsThanUniform) {
    const auto counts = random_counts(20000, 6, 4);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.hi = 6.0;
    spec.epsilon = 0.05;
    testgen::Gen g(6);
    std::vector<double> proxy;
    for (int c : counts) {
        proxy.push_back(c + testgen::uniform(g, -0.5, 0.5));
    }
    Oracle a(ds);
    Oracle b(ds);
    const auto good = agg_query(numeric_proxy(proxy), a, cat.get("count:car"), spec, 1);
    const auto uniform = agg_uniform_baseline(b, cat.get("count:car"), spec, 1);
    EXPECT_GT(*good.rho2, 0.9);
    EXPECT_LT(good.oracle_calls, uniform.oracle_calls);
    EXPECT_LE(*good.error, spec.epsilon);
    EXPECT_LE(*uniform.error, spec.epsilon);
}

TEST(Aggregation, AccountingCountsOnlyNewAnnotations) {
    const auto counts = random_counts(400, 6, 7);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.hi = 6.0;
    spec.epsilon = 0.5;
    Oracle oracle(ds);
    for (std::size_t id = 0; id < 200; ++id) {
        oracle.annotate(id);
    }
    const std::size_t before = oracle.invocation_count();
    const auto r = agg_uniform_baseline(oracle, cat.get("count:car"), spec, 2);
    EXPECT_EQ(r.oracle_calls, oracle.invocation_count() - before);
    EXPECT_EQ(r.annotated.size(), r.oracle_calls);
    for (std::size_t id : r.annotated) {
        EXPECT_GE(id, 200u);
    }
    EXPECT_LE(r.oracle_calls, r.samples);
}

TEST(Aggregation, SampleCapFlagsInfeasible) {
    const auto ds = car_dataset(random_counts(1000, 6, 8));
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.hi = 6.0;
    spec.epsilon = 0.001;
    spec.max_samples = 150;
    Oracle oracle(ds);
    const auto r = agg_uniform_baseline(oracle, cat.get("count:car"), spec, 0);
    EXPECT_EQ(r.outcome, Outcome::GuaranteeInfeasible);
    EXPECT_EQ(r.samples, 150u);
    EXPECT_GT(r.half_width, spec.epsilon);
}

TEST(Aggregation, DeterministicPerSeed) {
    const auto counts = random_counts(2000, 6, 9);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    AggSpec spec;
    spec.hi = 6.0;
    spec.epsilon = 0.1;
    const auto proxy = numeric_proxy(as_doubles(random_counts(2000, 6, 10)));
    Oracle a(ds);
    Oracle b(ds);
    Oracle c(ds);
    const auto x = agg_query(proxy, a, cat.get("count:car"), spec, 5);
    const auto y = agg_query(proxy, b, cat.get("count:car"), spec, 5);
    const auto z = agg_query(proxy, c, cat.get("count:car"), spec, 6);
    EXPECT_EQ(x.estimate, y.estimate);
    EXPECT_EQ(x.annotated, y.annotated);
    EXPECT_NE(x.annotated, z.annotated);
}

TEST(Aggregation, SpecValidation) {
    AggSpec spec;
    spec.epsilon = 0.0;
    EXPECT_EQ(kind_of([&] { spec.validate(); }), ErrorKind::Config);
    spec = AggSpec{};
    spec.delta = 1.0;
    EXPECT_EQ(kind_of([&] { spec.validate(); }), ErrorKind::Config);
    spec = AggSpec{};
    spec.lo = 1.0;
    EXPECT_EQ(kind_of([&] { spec.validate(); }), ErrorKind::Config);
}

TEST(Selection, PerfectlySeparatingProxy) {
    const auto counts = random_counts(5000, 1, 11);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    const auto r = supg_recall_query(numeric_proxy(as_doubles(counts)), oracle, cat.get("presence:car"), SelectSpec{}, 1);
    EXPECT_EQ(r.outcome, Outcome::Ok);
    EXPECT_EQ(r.threshold, 1.0);
    EXPECT_EQ(*r.false_positive_rate, 0.0);
    EXPECT_EQ(*r.recall, 1.0);
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) {
            positives.push_back(i);
        }
    }
    EXPECT_EQ(r.selected, positives);
    EXPECT_EQ(r.oracle_calls, oracle.invocation_count());
}

TEST(Selection, AllPositiveRecordsWithConstantProxy) {
    const auto ds = car_dataset(std::vector<int>(2000, 1));
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    const auto r =
        supg_recall_query(numeric_proxy(std::vector<double>(2000, 1.0)), oracle, cat.get("presence:car"), SelectSpec{}, 2);
    EXPECT_EQ(r.threshold, 1.0);
    EXPECT_EQ(*r.recall, 1.0);
    EXPECT_EQ(r.selected.size(), 2000u);
}

TEST(SelectionProperty, SampledPositivesAreAlwaysReturned) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto counts = random_counts(3000, 2, 20 + seed);
        const auto ds = car_dataset(counts);
        auto cat = builtin_scorers(ds.labels);
        testgen::Gen g(seed);
        std::vector<double> proxy;
        for (int c : counts) {
            // A noisy proxy with positives that sit at low scores.
            proxy.push_back(std::clamp((c > 0 ? 0.4 : 0.2) + testgen::uniform(g, -0.3, 0.6), 0.0, 1.0));
        }
        Oracle oracle(ds);
        SelectSpec spec;
        spec.budget = 300;
        const auto r = supg_recall_query(numeric_proxy(proxy), oracle, cat.get("presence:car"), spec, seed);
        const std::set<std::size_t> selected(r.selected.begin(), r.selected.end());
        for (std::size_t id : r.annotated) {
            if (counts[id] > 0) {
                EXPECT_TRUE(selected.contains(id)) << "seed " << seed << " id " << id;
            }
        }
        EXPECT_EQ(r.oracle_calls, oracle.invocation_count());
        EXPECT_LE(r.oracle_calls, spec.budget);
        // Bookkeeping against ground truth.
        std::size_t pos = 0;
        std::size_t hit = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            pos += counts[i] > 0;
            hit += counts[i] > 0 && selected.contains(i);
        }
        EXPECT_DOUBLE_EQ(*r.recall, static_cast<double>(hit) / static_cast<double>(pos));
    }
}

TEST(Selection, TinyBudgetIsInfeasible) {
    const auto counts = random_counts(500, 1, 12);
    const auto ds = car_dataset(counts);
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    SelectSpec spec;
    spec.budget = 10;
    const auto r = supg_recall_query(numeric_proxy(as_doubles(counts)), oracle, cat.get("presence:car"), spec, 0);
    EXPECT_EQ(r.outcome, Outcome::GuaranteeInfeasible);
    EXPECT_EQ(r.selected.size(), 500u);
    EXPECT_EQ(r.oracle_calls, 0u);
}

TEST(Selection, NoPositivesFallsBackToEverything) {
    const auto ds = car_dataset(std::vector<int>(800, 0));
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    const auto r = supg_recall_query(numeric_proxy(std::vector<double>(800, 0.3)), oracle, cat.get("presence:car"),
                                     SelectSpec{}, 0);
    EXPECT_EQ(r.outcome, Outcome::GuaranteeDegenerate);
    EXPECT_EQ(r.selected.size(), 800u);
    EXPECT_EQ(*r.recall, 1.0);
}

TEST(Selection, Errors) {
    const auto ds = car_dataset({0, 1, 1});
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    EXPECT_EQ(kind_of([&] {
                  supg_recall_query(numeric_proxy({0.0, 1.5, 0.2}), oracle, cat.get("presence:car"), SelectSpec{}, 0);
              }),
              ErrorKind::Config);
    EXPECT_EQ(kind_of([&] {
                  supg_recall_query(numeric_proxy({0.0, 1.0}), oracle, cat.get("presence:car"), SelectSpec{}, 0);
              }),
              ErrorKind::Shape);
    SelectSpec bad;
    bad.recall_target = 0.0;
    EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::Config);
    bad = SelectSpec{};
    bad.uniform_mix = 0.0;
    EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::Config);
}

TEST(Limit, FirstRecordsAllMatch) {
    const auto ds = car_dataset({6, 6, 6, 0, 0, 6});
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    LimitSpec spec;
    spec.threshold = 6;
    spec.n_want = 3;
    const std::vector<std::size_t> order = {0, 1, 2, 3, 4, 5};
    const auto r = limit_query(order, oracle, cat.get("count:car"), spec);
    EXPECT_EQ(r.oracle_calls, 3u);
    EXPECT_EQ(r.found, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(r.outcome, Outcome::Ok);
}

TEST(Limit, NoMatchScansToTheCap) {
    const auto ds = car_dataset(std::vector<int>(50, 1));
    auto cat = builtin_scorers(ds.labels);
    std::vector<std::size_t> order(50);
    std::iota(order.begin(), order.end(), std::size_t{0});
    LimitSpec spec;
    spec.threshold = 6;
    {
        Oracle oracle(ds);
        const auto r = limit_query(order, oracle, cat.get("count:car"), spec);
        EXPECT_EQ(r.outcome, Outcome::Partial);
        EXPECT_TRUE(r.found.empty());
        EXPECT_EQ(r.oracle_calls, 50u);
    }
    {
        spec.scan_cap = 20;
        Oracle oracle(ds);
        const auto r = limit_query(order, oracle, cat.get("count:car"), spec);
        EXPECT_EQ(r.oracle_calls, 20u);
        EXPECT_EQ(r.outcome, Outcome::Partial);
    }
}

TEST(LimitProperty, FoundRecordsSatisfyThePredicate) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto counts = random_counts(400, 6, 40 + seed);
        const auto ds = car_dataset(counts);
        auto cat = builtin_scorers(ds.labels);
        testgen::Gen g(seed);
        std::vector<std::size_t> order(400);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), g);
        LimitSpec spec;
        spec.threshold = 5;
        spec.n_want = 1 + testgen::uniform_index(g, 30);
        spec.scan_cap = 1 + testgen::uniform_index(g, 400);
        Oracle oracle(ds);
        const auto r = limit_query(order, oracle, cat.get("count:car"), spec);
        EXPECT_LE(r.oracle_calls, *spec.scan_cap);
        EXPECT_LE(r.found.size(), spec.n_want);
        for (std::size_t id : r.found) {
            EXPECT_GE(counts[id], 5);
        }
        EXPECT_EQ(r.oracle_calls, oracle.invocation_count());
    }
}

TEST(Limit, OrderingMustCoverEveryRecord) {
    const auto ds = car_dataset({1, 2, 3});
    auto cat = builtin_scorers(ds.labels);
    Oracle oracle(ds);
    const std::vector<std::size_t> order = {0, 1};
    EXPECT_EQ(kind_of([&] { limit_query(order, oracle, cat.get("count:car"), LimitSpec{}); }), ErrorKind::Shape);
}

TEST(Outcome, Names) {
    EXPECT_STREQ(to_string(Outcome::Ok), "ok");
    EXPECT_STREQ(to_string(Outcome::GuaranteeInfeasible), "guarantee-infeasible");
    EXPECT_STREQ(to_string(Outcome::GuaranteeDegenerate), "guarantee-degenerate");
    EXPECT_STREQ(to_string(Outcome::Partial), "partial");
}

}  // namespace
}  // namespace semidx

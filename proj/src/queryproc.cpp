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

#include "semidx/queryproc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "semidx/errors.hpp"
#include "semidx/rng.hpp"

namespace semidx {

void AggSpec::validate() const {
    require(epsilon > 0.0, ErrorKind::Config, "aggregation epsilon must be > 0");
    require(delta > 0.0 && delta < 1.0, ErrorKind::Config, "aggregation delta must lie in (0, 1)");
    require(lo < hi, ErrorKind::Config, "aggregation range needs lo < hi");
    require(beta_clamp >= 0.0, ErrorKind::Config, "beta_clamp must be >= 0");
    require(!max_samples || *max_samples >= 1, ErrorKind::Config, "max_samples must be >= 1");
}

void SelectSpec::validate() const {
    require(recall_target > 0.0 && recall_target <= 1.0, ErrorKind::Config, "recall target must lie in (0, 1]");
    require(delta > 0.0 && delta < 1.0, ErrorKind::Config, "selection delta must lie in (0, 1)");
    require(budget >= 1, ErrorKind::Config, "selection budget must be >= 1");
    require(kappa > 0.0, ErrorKind::Config, "kappa must be > 0");
    require(uniform_mix > 0.0 && uniform_mix < 1.0, ErrorKind::Config, "uniform_mix must lie in (0, 1)");
}

void LimitSpec::validate() const {
    require(n_want >= 1, ErrorKind::Config, "limit query needs n_want >= 1");
    require(!scan_cap || *scan_cap >= 1, ErrorKind::Config, "scan cap must be >= 1");
}

const char* to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Ok:
            return "ok";
        case Outcome::GuaranteeInfeasible:
            return "guarantee-infeasible";
        case Outcome::GuaranteeDegenerate:
            return "guarantee-degenerate";
        case Outcome::Partial:
            return "partial";
    }
    return "unknown";
}

double proxy_quality(std::span<const double> proxy, std::span<const double> truth) {
    require(proxy.size() == truth.size(), ErrorKind::Shape, "proxy and truth lengths differ");
    require(proxy.size() >= 2, ErrorKind::Shape, "need at least two values");
    const auto n = static_cast<double>(proxy.size());
    const double mp = std::accumulate(proxy.begin(), proxy.end(), 0.0) / n;
    const double mt = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
    double spp = 0.0;
    double stt = 0.0;
    double spt = 0.0;
    for (std::size_t i = 0; i < proxy.size(); ++i) {
        const double dp = proxy[i] - mp;
        const double dt = truth[i] - mt;
        spp += dp * dp;
        stt += dt * dt;
        spt += dp * dt;
    }
    if (spp <= 0.0 || stt <= 0.0) {
        return 0.0;
    }
    return std::min(1.0, spt * spt / (spp * stt));
}

std::vector<double> true_scores(const Oracle& oracle, const ScoringFunction& scorer) {
    const auto& records = oracle.dataset().records;
    std::vector<double> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out[i] = scorer.score(oracle.peek_truth(i));
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> annotated_since(const Oracle& oracle, std::size_t before) {
    const auto ids = oracle.annotated_ids();
    return {ids.begin() + static_cast<std::ptrdiff_t>(before), ids.end()};
}

/// ln(3 / delta_t) with delta_t = 6 delta / (pi^2 t^2).
double bernstein_log(double delta, double t) {
    return std::log(3.0 * std::numbers::pi * std::numbers::pi * t * t / (6.0 * delta));
}

QueryReport run_aggregation(const std::vector<double>* proxy, Oracle& oracle, const ScoringFunction& scorer,
                            const AggSpec& spec, std::uint64_t seed, const char* type) {
    spec.validate();
    require(scorer.kind == ScoreKind::Numeric, ErrorKind::Config, "aggregation needs a numeric scorer");
    const auto start = Clock::now();
    const std::size_t n = oracle.dataset().size();
    require(n >= 1, ErrorKind::Config, "empty dataset");
    require(!proxy || proxy->size() == n, ErrorKind::Shape, "proxy length does not match the dataset");

    double p_bar = 0.0;
    if (proxy) {
        p_bar = std::accumulate(proxy->begin(), proxy->end(), 0.0) / static_cast<double>(n);
    }
    const double beta_clamp = proxy ? spec.beta_clamp : 0.0;
    const double range = spec.hi - spec.lo;
    const std::size_t calls_before = oracle.invocation_count();

    Rng rng = make_rng(seed, "query.agg");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    // Running co-moments of (f, p); the estimate re-applies the current beta
    // to every sample taken so far.
    double mean_f = 0.0;
    double mean_p = 0.0;
    double m2_f = 0.0;
    double m2_p = 0.0;
    double c_fp = 0.0;
    std::size_t t = 0;
    double estimate = 0.0;
    double half_width = std::numeric_limits<double>::infinity();
    double beta = 0.0;
    Outcome outcome = Outcome::Ok;
    while (true) {
        const std::size_t id = pick(rng);
        const double f = scorer.score(oracle.annotate(id));
        const double p = proxy ? (*proxy)[id] : 0.0;
        ++t;
        const auto tn = static_cast<double>(t);
        const double df = f - mean_f;
        const double dp = p - mean_p;
        mean_f += df / tn;
        mean_p += dp / tn;
        m2_f += df * (f - mean_f);
        m2_p += dp * (p - mean_p);
        c_fp += df * (p - mean_p);

        beta = 0.0;
        if (beta_clamp > 0.0 && t >= spec.min_samples && m2_p > 0.0) {
            beta = std::clamp(c_fp / m2_p, -beta_clamp, beta_clamp);
        }
        estimate = mean_f - beta * (mean_p - p_bar);
        const double var = std::max(0.0, (m2_f + beta * beta * m2_p - 2.0 * beta * c_fp) / tn);
        const double log_term = bernstein_log(spec.delta, tn);
        half_width = std::sqrt(var) * std::sqrt(2.0 * log_term / tn) + 3.0 * range * log_term / tn;
        if (half_width <= spec.epsilon) {
            break;
        }
        if (spec.max_samples && t >= *spec.max_samples) {
            outcome = Outcome::GuaranteeInfeasible;
            break;
        }
    }

    QueryReport report;
    report.type = type;
    report.scorer = scorer.name;
    report.seed = seed;
    report.outcome = outcome;
    report.estimate = estimate;
    report.samples = t;
    report.half_width = half_width;
    report.beta = beta;
    report.oracle_calls = oracle.invocation_count() - calls_before;
    report.annotated = annotated_since(oracle, calls_before);
    const auto truth = true_scores(oracle, scorer);
    report.truth = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(n);
    report.error = std::abs(estimate - *report.truth);
    if (proxy && n >= 2) {
        report.rho2 = proxy_quality(*proxy, truth);
    }
    report.wall_seconds = seconds_since(start);
    return report;
}

}  // namespace

QueryReport agg_query(const ProxyScores& proxy, Oracle& oracle, const ScoringFunction& scorer, const AggSpec& spec,
                      std::uint64_t seed) {
    require(proxy.kind == ScoreKind::Numeric, ErrorKind::Config, "aggregation needs a numeric proxy");
    return run_aggregation(&proxy.values, oracle, scorer, spec, seed, "agg");
}

QueryReport agg_uniform_baseline(Oracle& oracle, const ScoringFunction& scorer, const AggSpec& spec,
                                 std::uint64_t seed) {
    return run_aggregation(nullptr, oracle, scorer, spec, seed, "agg-uniform");
}

namespace {

struct WeightedPositive {
    double proxy;
    double weight;
};

/// Threshold search by fixed-sequence testing. Candidates are the positives'
/// proxy values in ascending order (recall only falls as tau rises); each is
/// tested with an empirical Bernstein lower bound on
/// E[y v (1[p >= tau] - gamma)] at level delta, and the search stops at the
/// first failure. Sampled negatives contribute zero terms.
std::optional<double> choose_threshold(std::vector<WeightedPositive> positives, std::size_t n_negative,
                                       std::size_t n_samples, double gamma, double delta) {
    if (positives.empty()) {
        return std::nullopt;
    }
    std::sort(positives.begin(), positives.end(), [](const WeightedPositive& a, const WeightedPositive& b) {
        return a.proxy < b.proxy || (a.proxy == b.proxy && a.weight < b.weight);
    });
    const std::size_t m = positives.size();
    // prefix_max[i]: largest weight in [0, i). suffix_max/min[i]: over [i, m).
    std::vector<double> prefix_max(m + 1, 0.0);
    std::vector<double> suffix_max(m + 1, 0.0);
    std::vector<double> suffix_min(m + 1, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < m; ++i) {
        prefix_max[i + 1] = std::max(prefix_max[i], positives[i].weight);
    }
    for (std::size_t i = m; i-- > 0;) {
        suffix_max[i] = std::max(suffix_max[i + 1], positives[i].weight);
        suffix_min[i] = std::min(suffix_min[i + 1], positives[i].weight);
    }
    double total_w = 0.0;
    double total_w2 = 0.0;
    for (const auto& p : positives) {
        total_w += p.weight;
        total_w2 += p.weight * p.weight;
    }
    const auto s = static_cast<double>(n_samples);
    const double log_term = std::log(3.0 / delta);

    double below_w = 0.0;
    double below_w2 = 0.0;
    std::optional<double> best;
    std::size_t i = 0;
    while (i < m) {
        const double tau = positives[i].proxy;
        const double above_w = total_w - below_w;
        const double above_w2 = std::max(0.0, total_w2 - below_w2);
        const double sum = (1.0 - gamma) * above_w - gamma * below_w;
        const double sum_sq = (1.0 - gamma) * (1.0 - gamma) * above_w2 + gamma * gamma * below_w2;
        const double mean = sum / s;
        const double var = std::max(0.0, sum_sq / s - mean * mean);
        double z_max = (1.0 - gamma) * suffix_max[i];
        double z_min = i > 0 ? -gamma * prefix_max[i] : (1.0 - gamma) * suffix_min[i];
        if (n_negative > 0) {
            z_min = std::min(z_min, 0.0);
            z_max = std::max(z_max, 0.0);
        }
        const double range = z_max - z_min;
        const double lcb = mean - std::sqrt(var) * std::sqrt(2.0 * log_term / s) - 3.0 * range * log_term / s;
        if (lcb < 0.0) {
            break;
        }
        best = tau;
        while (i < m && positives[i].proxy == tau) {
            below_w += positives[i].weight;
            below_w2 += positives[i].weight * positives[i].weight;
            ++i;
        }
    }
    return best;
}

}  // namespace

QueryReport supg_recall_query(const ProxyScores& proxy, Oracle& oracle, const ScoringFunction& scorer,
                              const SelectSpec& spec, std::uint64_t seed) {
    spec.validate();
    require(proxy.kind == ScoreKind::Numeric, ErrorKind::Config, "selection needs a numeric proxy");
    require(scorer.kind == ScoreKind::Numeric, ErrorKind::Config, "selection needs a numeric scorer");
    const auto start = Clock::now();
    const std::size_t n = oracle.dataset().size();
    require(proxy.values.size() == n, ErrorKind::Shape, "proxy length does not match the dataset");
    for (double p : proxy.values) {
        require(p >= 0.0 && p <= 1.0, ErrorKind::Config, "selection proxy must lie in [0, 1]");
    }
    const std::size_t calls_before = oracle.invocation_count();

    QueryReport report;
    report.type = "select";
    report.scorer = scorer.name;
    report.seed = seed;

    std::vector<bool> selected(n, false);
    if (spec.budget < SelectSpec::kMinBudget) {
        report.outcome = Outcome::GuaranteeInfeasible;
        std::fill(selected.begin(), selected.end(), true);
    } else {
        // Defensive mixture of sqrt-proportional and uniform sampling weights.
        std::vector<double> q(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = std::sqrt(proxy.values[i]) + spec.kappa;
            total += q[i];
        }
        std::vector<double> cumulative(n);
        double running = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = (1.0 - spec.uniform_mix) * q[i] / total + spec.uniform_mix / static_cast<double>(n);
            running += q[i];
            cumulative[i] = running;
        }

        Rng rng = make_rng(seed, "query.select");
        std::uniform_real_distribution<double> unit(0.0, running);
        std::vector<WeightedPositive> positives;
        std::size_t n_negative = 0;
        for (std::size_t j = 0; j < spec.budget; ++j) {
            const double u = unit(rng);
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            const std::size_t id = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
            const double label = scorer.score(oracle.annotate(id));
            if (label >= 0.5) {
                positives.push_back({proxy.values[id], 1.0 / (static_cast<double>(n) * q[id])});
                selected[id] = true;
            } else {
                ++n_negative;
            }
        }
        report.samples = spec.budget;
        const auto tau = choose_threshold(positives, n_negative, spec.budget, spec.recall_target, spec.delta);
        if (tau) {
            report.threshold = *tau;
            for (std::size_t i = 0; i < n; ++i) {
                if (proxy.values[i] >= *tau) {
                    selected[i] = true;
                }
            }
        } else {
            report.outcome = Outcome::GuaranteeDegenerate;
            std::fill(selected.begin(), selected.end(), true);
        }
    }

    const auto truth = true_scores(oracle, scorer);
    std::size_t true_pos = 0;
    std::size_t hit = 0;
    std::size_t false_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = truth[i] >= 0.5;
        true_pos += positive ? 1 : 0;
        if (selected[i]) {
            report.selected.push_back(i);
            hit += positive ? 1 : 0;
            false_pos += positive ? 0 : 1;
        }
    }
    report.estimate = static_cast<double>(report.selected.size());
    report.recall = true_pos == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(true_pos);
    report.truth = static_cast<double>(true_pos);
    report.error = 1.0 - *report.recall;
    const std::size_t negatives = n - true_pos;
    report.false_positive_rate =
        negatives == 0 ? 0.0 : static_cast<double>(false_pos) / static_cast<double>(negatives);
    if (n >= 2) {
        report.rho2 = proxy_quality(proxy.values, truth);
    }
    report.oracle_calls = oracle.invocation_count() - calls_before;
    report.annotated = annotated_since(oracle, calls_before);
    report.wall_seconds = seconds_since(start);
    return report;
}

QueryReport limit_query(std::span<const std::size_t> ordering, Oracle& oracle, const ScoringFunction& scorer,
                        const LimitSpec& spec) {
    spec.validate();
    require(scorer.kind == ScoreKind::Numeric, ErrorKind::Config, "limit query needs a numeric scorer");
    const auto start = Clock::now();
    const std::size_t n = oracle.dataset().size();
    require(ordering.size() == n, ErrorKind::Shape, "ordering must cover every record");
    const std::size_t cap = std::min(n, spec.scan_cap.value_or(n));
    const std::size_t calls_before = oracle.invocation_count();

    QueryReport report;
    report.type = "limit";
    report.scorer = scorer.name;
    std::size_t examined = 0;
    while (examined < cap && report.found.size() < spec.n_want) {
        const std::size_t id = ordering[examined++];
        if (scorer.score(oracle.annotate(id)) >= spec.threshold) {
            report.found.push_back(id);
        }
    }
    report.samples = examined;
    report.outcome = report.found.size() < spec.n_want ? Outcome::Partial : Outcome::Ok;
    report.estimate = static_cast<double>(report.found.size());
    std::size_t matches = 0;
    for (std::size_t i = 0; i < n; ++i) {
        matches += scorer.score(oracle.peek_truth(i)) >= spec.threshold ? 1 : 0;
    }
    report.truth = static_cast<double>(std::min(matches, spec.n_want));
    report.error = *report.truth - report.estimate;
    report.oracle_calls = oracle.invocation_count() - calls_before;
    report.annotated = annotated_since(oracle, calls_before);
    report.wall_seconds = seconds_since(start);
    return report;
}

}  // namespace semidx

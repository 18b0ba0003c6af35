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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semidx/propagate.hpp"
#include "semidx/synth.hpp"

namespace semidx {

/// Mean of a numeric scorer over all records, to absolute error `epsilon`
/// with probability 1 - delta.
struct AggSpec {
    std::string scorer = "count:car";
    double epsilon = 0.05;
    double delta = 0.05;
    std::size_t min_samples = 100;
    double lo = 0.0;
    double hi = 1.0;
    double beta_clamp = 10.0;  // 0 disables the control variate
    std::optional<std::size_t> max_samples;

    void validate() const;
};

/// Recall-target selection under an oracle budget.
struct SelectSpec {
    std::string scorer = "presence:car";
    double recall_target = 0.9;
    double delta = 0.05;
    std::size_t budget = 1000;
    double kappa = 1e-6;       // floor added to sqrt(proxy)
    double uniform_mix = 0.2;  // share of the sampling weight spread uniformly

    /// Smallest budget for which a guarantee is attempted.
    static constexpr std::size_t kMinBudget = 100;

    void validate() const;
};

/// First `n_want` records whose scorer value is >= threshold.
struct LimitSpec {
    std::string scorer = "count:car";
    double threshold = 5.0;
    std::size_t n_want = 10;
    std::optional<std::size_t> scan_cap;

    void validate() const;
};

enum class Outcome {
    Ok,
    GuaranteeInfeasible,  // aggregation hit its sample cap, or select budget below the minimum
    GuaranteeDegenerate,  // select fell back to returning everything
    Partial,              // limit query found fewer than n_want
};

const char* to_string(Outcome outcome);

struct QueryReport {
    std::string type;
    std::string scorer;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::Ok;

    double estimate = 0.0;
    std::optional<double> truth;
    std::optional<double> error;
    std::optional<double> rho2;
    std::size_t oracle_calls = 0;
    std::size_t samples = 0;

    // aggregation
    double half_width = 0.0;
    double beta = 0.0;

    // selection
    std::vector<std::size_t> selected;
    double threshold = 0.0;
    std::optional<double> recall;
    std::optional<double> false_positive_rate;

    // limit
    std::vector<std::size_t> found;

    /// Ids this query paid the oracle for, in first-annotation order.
    std::vector<std::size_t> annotated;

    double wall_seconds = 0.0;
};

/// Squared Pearson correlation; 0 when either side has zero variance.
double proxy_quality(std::span<const double> proxy, std::span<const double> truth);

/// Scorer applied to every record's ground truth. Evaluation only; never charged.
std::vector<double> true_scores(const Oracle& oracle, const ScoringFunction& scorer);

/// Uniform sampling with replacement, control-variate corrected by the proxy,
/// stopped by an empirical Bernstein bound with a union bound over t.
QueryReport agg_query(const ProxyScores& proxy, Oracle& oracle, const ScoringFunction& scorer, const AggSpec& spec,
                      std::uint64_t seed);

/// Same sample path with no proxy.
QueryReport agg_uniform_baseline(Oracle& oracle, const ScoringFunction& scorer, const AggSpec& spec,
                                 std::uint64_t seed);

/// Importance-sampled recall-target selection. The scorer must be 0/1 valued
/// and the proxy must lie in [0, 1].
QueryReport supg_recall_query(const ProxyScores& proxy, Oracle& oracle, const ScoringFunction& scorer,
                              const SelectSpec& spec, std::uint64_t seed);

/// Annotates records in `ordering` until `n_want` matches or the scan cap.
QueryReport limit_query(std::span<const std::size_t> ordering, Oracle& oracle, const ScoringFunction& scorer,
                        const LimitSpec& spec);

}  // namespace semidx

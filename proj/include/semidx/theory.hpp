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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/matrix.hpp"
#include "semidx/propagate.hpp"

namespace semidx {

/// Query loss l(f(x), y) of predicting y for a record whose true score is f(x).
using QueryLoss = std::function<double(double truth, double predicted)>;

inline double absolute_loss(double truth, double predicted) { return std::abs(predicted - truth); }

struct TheoryConfig {
    double radius = 0.1;      // M
    double margin = 1.0;      // m
    double lipschitz = 1.0;   // K_Q
    double loss_bound = 1.0;  // C_Q
    QueryLoss query_loss = absolute_loss;

    void validate() const;
};

struct LemmaCheck {
    std::size_t pairs_checked = 0;
    std::size_t violations = 0;
    std::vector<std::pair<std::size_t, std::size_t>> offending;  // sample ids
    double measured_loss = 0.0;
    bool precondition_met = false;  // measured loss within tolerance of zero
};

/// Counts sample pairs embedded closer than the margin whose ground-truth
/// distance is still >= M. The count is always reported; it only carries
/// weight when `precondition_met`.
LemmaCheck verify_lemma_dist(const Matrix& embeddings, std::span<const std::size_t> sample_ids,
                             std::span<const Annotation* const> annotations, const GroundTruthMetric& metric,
                             double margin, double measured_loss, double tolerance = 1e-9);

struct BoundCheck {
    double lhs = 0.0;       // mean l(f(x), fhat(x))
    double baseline = 0.0;  // mean l(f(x), f(x))
    double rhs = 0.0;
    bool holds = false;
};

struct TheoremChecks {
    BoundCheck zero_loss;  // rhs = baseline + M * K_Q
    BoundCheck lossy;      // rhs adds C_Q * sup|far set| / m * alpha
    std::size_t sup_far_count = 0;
};

/// Evaluates both loss-gap bounds on an annotated sample. `proxy` must come
/// from k = 1 propagation (ErrorKind::Contract otherwise). Far-set sizes are
/// counted within the sample.
TheoremChecks check_theorem_bound(const ProxyScores& proxy, const ScoringFunction& scorer, const TheoryConfig& cfg,
                                  std::span<const std::size_t> sample_ids,
                                  std::span<const Annotation* const> annotations, const GroundTruthMetric& metric,
                                  double alpha_hat);

inline constexpr std::size_t kBruteForceLimit = 14;

/// Optimal k-center radius by enumerating every k-subset of rows as centers.
/// ErrorKind::Size above kBruteForceLimit rows.
double brute_force_kcenter(const Matrix& points, std::size_t k);

/// Max over rows of the distance to the nearest of `centers`.
double covering_radius(const Matrix& points, std::span<const std::size_t> centers);

struct CostModel {
    double n_records = 0;        // N
    double dim = 0;              // D
    double train_steps = 0;      // L
    double budget = 0;           // C, target-oracle annotations
    double cost_target = 1.0;    // c_T
    double cost_embed = 0.0;     // c_E
    double cost_distance = 0.0;  // c_D

    void validate() const;
};

/// C*c_T + L*c_E + N*c_E + N*C*D*c_D.
double cost_estimate(const CostModel& cm);

/// Operation counts observed during one index build.
struct BuildCounts {
    std::size_t annotations = 0;
    std::size_t train_steps = 0;
    std::size_t embeddings = 0;
    std::size_t distance_evaluations = 0;
};

struct VerificationReport {
    LemmaCheck lemma;
    TheoremChecks theorems;
    double alpha_hat = 0.0;
    double fpf_ratio_max = 0.0;
    std::size_t fpf_instances = 0;
    CostModel cost_model;
    double cost = 0.0;
    BuildCounts counts;
};

/// Worst FPF / optimal radius ratio over random small instances.
double fpf_ratio_sweep(std::size_t instances, std::uint64_t seed);

void write_verification_report(const VerificationReport& report, const std::filesystem::path& path);

}  // namespace semidx

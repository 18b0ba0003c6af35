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

#include "semidx/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"
#include "semidx/errors.hpp"
#include "semidx/io.hpp"
#include "semidx/kernels.hpp"
#include "semidx/rng.hpp"

namespace semidx {

void TheoryConfig::validate() const {
    require(radius > 0.0, ErrorKind::Config, "M must be > 0");
    require(margin > 0.0, ErrorKind::Config, "margin must be > 0");
    require(lipschitz >= 0.0, ErrorKind::Config, "K_Q must be >= 0");
    require(loss_bound >= 0.0, ErrorKind::Config, "C_Q must be >= 0");
    require(static_cast<bool>(query_loss), ErrorKind::Config, "query loss is not set");
}

LemmaCheck verify_lemma_dist(const Matrix& embeddings, std::span<const std::size_t> sample_ids,
                             std::span<const Annotation* const> annotations, const GroundTruthMetric& metric,
                             double margin, double measured_loss, double tolerance) {
    require(sample_ids.size() == annotations.size(), ErrorKind::Shape, "one annotation per sample id");
    metric.validate();
    LemmaCheck out;
    out.measured_loss = measured_loss;
    out.precondition_met = measured_loss <= tolerance;
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        for (std::size_t j = i + 1; j < sample_ids.size(); ++j) {
            ++out.pairs_checked;
            if (distance(embeddings.row(sample_ids[i]), embeddings.row(sample_ids[j])) >= margin) {
                continue;
            }
            if (match_cost(*annotations[i], *annotations[j], metric) >= metric.radius) {
                ++out.violations;
                out.offending.emplace_back(sample_ids[i], sample_ids[j]);
            }
        }
    }
    return out;
}

TheoremChecks check_theorem_bound(const ProxyScores& proxy, const ScoringFunction& scorer, const TheoryConfig& cfg,
                                  std::span<const std::size_t> sample_ids,
                                  std::span<const Annotation* const> annotations, const GroundTruthMetric& metric,
                                  double alpha_hat) {
    cfg.validate();
    require(proxy.kind == ScoreKind::Numeric, ErrorKind::Contract, "bounds need a numeric proxy");
    require(proxy.k == 1, ErrorKind::Contract,
            "bounds are only stated for k = 1 propagation, got k = " + std::to_string(proxy.k));
    require(sample_ids.size() == annotations.size(), ErrorKind::Shape, "one annotation per sample id");
    require(!sample_ids.empty(), ErrorKind::Shape, "empty evaluation sample");
    require(alpha_hat >= 0.0, ErrorKind::Config, "alpha must be >= 0");

    double lhs = 0.0;
    double baseline = 0.0;
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        require(sample_ids[i] < proxy.values.size(), ErrorKind::Lookup, "sample id outside the proxy");
        const double f = scorer.score(*annotations[i]);
        const double predicted = cfg.query_loss(f, proxy.values[sample_ids[i]]);
        const double exact = cfg.query_loss(f, f);
        require(predicted <= cfg.loss_bound && exact <= cfg.loss_bound, ErrorKind::Contract,
                "observed query loss exceeds C_Q");
        lhs += predicted;
        baseline += exact;
    }
    const auto n = static_cast<double>(sample_ids.size());
    lhs /= n;
    baseline /= n;

    const auto close = close_neighbors(annotations, metric);
    std::size_t sup_far = 0;
    for (const auto& c : close) {
        sup_far = std::max(sup_far, sample_ids.size() - c.size() - 1);
    }

    TheoremChecks out;
    out.sup_far_count = sup_far;
    out.zero_loss.lhs = lhs;
    out.zero_loss.baseline = baseline;
    out.zero_loss.rhs = baseline + cfg.radius * cfg.lipschitz;
    out.zero_loss.holds = lhs <= out.zero_loss.rhs;
    out.lossy.lhs = lhs;
    out.lossy.baseline = baseline;
    out.lossy.rhs = out.zero_loss.rhs + cfg.loss_bound * static_cast<double>(sup_far) / cfg.margin * alpha_hat;
    out.lossy.holds = lhs <= out.lossy.rhs;
    return out;
}

double covering_radius(const Matrix& points, std::span<const std::size_t> centers) {
    require(!centers.empty(), ErrorKind::Config, "need at least one center");
    double radius = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t c : centers) {
            nearest = std::min(nearest, distance(points.row(i), points.row(c)));
        }
        radius = std::max(radius, nearest);
    }
    return radius;
}

double brute_force_kcenter(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows;
    require(n <= kBruteForceLimit, ErrorKind::Size,
            "brute-force k-center supports at most " + std::to_string(kBruteForceLimit) + " points, got " +
                std::to_string(n));
    require(k >= 1 && k <= n, ErrorKind::Config, "k must lie in [1, number of points]");
    std::vector<double> dist(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dist[i * n + j] = distance(points.row(i), points.row(j));
        }
    }
    double best = std::numeric_limits<double>::infinity();
    // Walk every k-subset as a selection mask.
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        double radius = 0.0;
        for (std::size_t i = 0; i < n && radius < best; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < n; ++c) {
                if (mask[c]) {
                    nearest = std::min(nearest, dist[i * n + c]);
                }
            }
            radius = std::max(radius, nearest);
        }
        best = std::min(best, radius);
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

double fpf_ratio_sweep(std::size_t instances, std::uint64_t seed) {
    Rng rng = make_rng(seed, "theory.fpf_sweep");
    std::uniform_int_distribution<std::size_t> pick_k(1, 4);
    std::uniform_int_distribution<std::size_t> pick_dim(1, 3);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t k = pick_k(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(k + 1, 12)(rng);
        Matrix points(n, pick_dim(rng));
        for (float& v : points.data) {
            v = static_cast<float>(coord(rng));
        }
        const double optimal = brute_force_kcenter(points, k);
        if (optimal <= 0.0) {
            continue;
        }
        const auto centers = furthest_point_first(points, {}, k);
        worst = std::max(worst, covering_radius(points, centers) / optimal);
    }
    return worst;
}

void CostModel::validate() const {
    for (double v : {n_records, dim, train_steps, budget, cost_target, cost_embed, cost_distance}) {
        require(v >= 0.0, ErrorKind::Config, "cost model entries must be non-negative");
    }
}

double cost_estimate(const CostModel& cm) {
    cm.validate();
    return cm.budget * cm.cost_target + cm.train_steps * cm.cost_embed + cm.n_records * cm.cost_embed +
           cm.n_records * cm.budget * cm.dim * cm.cost_distance;
}

void write_verification_report(const VerificationReport& r, const std::filesystem::path& path) {
    using nlohmann::ordered_json;
    auto bound = [](const BoundCheck& b) {
        return ordered_json{{"lhs", b.lhs}, {"baseline", b.baseline}, {"rhs", b.rhs}, {"holds", b.holds}};
    };
    ordered_json j;
    j["lemma1_violations"] = r.lemma.violations;
    j["lemma1_pairs"] = r.lemma.pairs_checked;
    j["lemma1_precondition_met"] = r.lemma.precondition_met;
    j["thm1"] = bound(r.theorems.zero_loss);
    j["thm2"] = bound(r.theorems.lossy);
    j["sup_far_count"] = r.theorems.sup_far_count;
    j["alpha_hat"] = r.alpha_hat;
    j["fpf_ratio_max"] = r.fpf_ratio_max;
    j["fpf_instances"] = r.fpf_instances;
    j["cost"] = ordered_json{
        {"estimate", r.cost},
        {"model",
         {{"N", r.cost_model.n_records},
          {"D", r.cost_model.dim},
          {"L", r.cost_model.train_steps},
          {"C", r.cost_model.budget},
          {"c_T", r.cost_model.cost_target},
          {"c_E", r.cost_model.cost_embed},
          {"c_D", r.cost_model.cost_distance}}},
        {"measured",
         {{"annotations", r.counts.annotations},
          {"train_steps", r.counts.train_steps},
          {"embeddings", r.counts.embeddings},
          {"distance_evaluations", r.counts.distance_evaluations}}},
    };
    io::write_file(path, j.dump(2) + "\n");
}

}  // namespace semidx

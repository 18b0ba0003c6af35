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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/index.hpp"

namespace semidx {

enum class ScoreKind { Numeric, Categorical };

/// A query-specific function of one annotation. Numeric scorers fill
/// `numeric`; categorical ones fill `categorical`.
struct ScoringFunction {
    std::string name;
    ScoreKind kind = ScoreKind::Numeric;
    std::function<double(const Annotation&)> numeric;
    std::function<std::string(const Annotation&)> categorical;

    double score(const Annotation& a) const { return numeric(a); }
    std::string label(const Annotation& a) const { return categorical(a); }
};

// Scorer primitives. `label` selects the object type.
double count_of(const Annotation& a, const std::string& label);
double presence_of(const Annotation& a, const std::string& label);
double mean_x(const Annotation& a, double empty_value = 0.5);
double left_half(const Annotation& a, const std::string& label);

/// Named scorers resolvable by string: "count:<label>", "presence:<label>",
/// "left_half:<label>", "mean_x", "dominant" (categorical), plus anything
/// registered with add().
class ScorerCatalog {
public:
    explicit ScorerCatalog(std::vector<std::string> labels = {});

    void add(ScoringFunction scorer);

    /// Throws ErrorKind::Config for an unknown scorer or label.
    const ScoringFunction& get(const std::string& name);

    std::vector<std::string> names() const;
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
    std::map<std::string, ScoringFunction> scorers_;
};

ScorerCatalog builtin_scorers(std::vector<std::string> labels);

/// Custom scorer over a primitive: value = primitive(label), or, when
/// `threshold` is set, 1 if the primitive is >= threshold else 0.
ScoringFunction make_scorer(const std::string& name, const std::string& primitive, const std::string& label,
                            std::optional<double> threshold);

struct ProxyScores {
    ScoreKind kind = ScoreKind::Numeric;
    std::vector<double> values;
    std::vector<std::string> labels;
    std::string scorer;
    std::size_t k = 1;
    std::string index_hash;

    std::size_t size() const { return kind == ScoreKind::Numeric ? values.size() : labels.size(); }
};

inline constexpr double kDefaultEpsilon = 1e-8;

/// Scorer applied to every representative annotation, in rep-position order.
std::vector<double> rep_scores(const Index& index, const ScoringFunction& scorer);
std::vector<std::string> rep_labels(const Index& index, const ScoringFunction& scorer);

/// Inverse-distance weighted mean over each record's k nearest
/// representatives, w = 1/(d + eps). With eps = 0, zero-distance
/// representatives take over: the value is their plain mean.
ProxyScores propagate_numeric(const Index& index, std::span<const double> scores, std::size_t k,
                              double eps = kDefaultEpsilon);

/// Inverse-distance weighted vote; ties go to the lexicographically smallest label.
ProxyScores propagate_categorical(const Index& index, std::span<const std::string> labels, std::size_t k,
                                  double eps = kDefaultEpsilon);

/// Record ids by (nearest-rep score desc, distance to it asc, id asc).
std::vector<std::size_t> limit_ordering(const Index& index, std::span<const double> scores);

void write_scores_csv(const ProxyScores& scores, const std::filesystem::path& path);
ProxyScores read_scores_csv(const std::filesystem::path& path);

}  // namespace semidx

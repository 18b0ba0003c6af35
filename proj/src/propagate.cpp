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

#include "semidx/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "semidx/errors.hpp"
#include "semidx/io.hpp"

namespace semidx {

double count_of(const Annotation& a, const std::string& label) {
    return static_cast<double>(
        std::count_if(a.objects.begin(), a.objects.end(), [&](const LatentObject& o) { return o.type == label; }));
}

double presence_of(const Annotation& a, const std::string& label) { return count_of(a, label) > 0.0 ? 1.0 : 0.0; }

double mean_x(const Annotation& a, double empty_value) {
    if (a.objects.empty()) {
        return empty_value;
    }
    double sum = 0.0;
    for (const auto& o : a.objects) {
        sum += o.x;
    }
    return sum / static_cast<double>(a.objects.size());
}

double left_half(const Annotation& a, const std::string& label) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& o : a.objects) {
        if (o.type == label) {
            sum += o.x;
            ++n;
        }
    }
    if (n == 0) {
        return 0.0;
    }
    return sum / static_cast<double>(n) < 0.5 ? 1.0 : 0.0;
}

namespace {

std::string dominant_type(const Annotation& a) {
    std::map<std::string, std::size_t> counts;
    for (const auto& o : a.objects) {
        ++counts[o.type];
    }
    std::string best = "none";
    std::size_t best_count = 0;
    for (const auto& [type, c] : counts) {
        if (c > best_count) {
            best = type;
            best_count = c;
        }
    }
    return best;
}

ScoringFunction numeric_scorer(std::string name, std::function<double(const Annotation&)> fn) {
    ScoringFunction s;
    s.name = std::move(name);
    s.kind = ScoreKind::Numeric;
    s.numeric = std::move(fn);
    return s;
}

}  // namespace

ScoringFunction make_scorer(const std::string& name, const std::string& primitive, const std::string& label,
                            std::optional<double> threshold) {
    std::function<double(const Annotation&)> base;
    if (primitive == "count") {
        base = [label](const Annotation& a) { return count_of(a, label); };
    } else if (primitive == "presence") {
        base = [label](const Annotation& a) { return presence_of(a, label); };
    } else if (primitive == "left_half") {
        base = [label](const Annotation& a) { return left_half(a, label); };
    } else if (primitive == "mean_x") {
        base = [](const Annotation& a) { return mean_x(a); };
    } else {
        fail(ErrorKind::Config, "unknown scorer primitive '" + primitive + "'");
    }
    if (threshold) {
        const double t = *threshold;
        return numeric_scorer(name, [base, t](const Annotation& a) { return base(a) >= t ? 1.0 : 0.0; });
    }
    return numeric_scorer(name, std::move(base));
}

ScorerCatalog::ScorerCatalog(std::vector<std::string> labels) : labels_(std::move(labels)) {
    std::sort(labels_.begin(), labels_.end());
}

void ScorerCatalog::add(ScoringFunction scorer) {
    require(!scorer.name.empty(), ErrorKind::Config, "scorer needs a name");
    scorers_[scorer.name] = std::move(scorer);
}

const ScoringFunction& ScorerCatalog::get(const std::string& name) {
    if (auto it = scorers_.find(name); it != scorers_.end()) {
        return it->second;
    }
    const auto colon = name.find(':');
    require(colon != std::string::npos, ErrorKind::Config, "unknown scorer '" + name + "'");
    const std::string primitive = name.substr(0, colon);
    const std::string label = name.substr(colon + 1);
    require(primitive == "count" || primitive == "presence" || primitive == "left_half", ErrorKind::Config,
            "unknown scorer '" + name + "'");
    require(std::binary_search(labels_.begin(), labels_.end(), label), ErrorKind::Config,
            "unknown label '" + label + "' in scorer '" + name + "'");
    add(make_scorer(name, primitive, label, std::nullopt));
    return scorers_.at(name);
}

std::vector<std::string> ScorerCatalog::names() const {
    std::vector<std::string> out;
    for (const auto& [name, s] : scorers_) {
        out.push_back(name);
    }
    return out;
}

ScorerCatalog builtin_scorers(std::vector<std::string> labels) {
    ScorerCatalog catalog(std::move(labels));
    catalog.add(numeric_scorer("mean_x", [](const Annotation& a) { return mean_x(a); }));
    ScoringFunction dominant;
    dominant.name = "dominant";
    dominant.kind = ScoreKind::Categorical;
    dominant.categorical = dominant_type;
    catalog.add(std::move(dominant));
    const auto names = catalog.labels();
    for (const auto& label : names) {
        catalog.get("count:" + label);
        catalog.get("presence:" + label);
        catalog.get("left_half:" + label);
    }
    return catalog;
}

std::vector<double> rep_scores(const Index& index, const ScoringFunction& scorer) {
    require(scorer.kind == ScoreKind::Numeric, ErrorKind::Config, "scorer '" + scorer.name + "' is not numeric");
    std::vector<double> out(index.rep_ids.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = scorer.score(index.rep_annotation(i));
        require(std::isfinite(out[i]), ErrorKind::Config, "scorer '" + scorer.name + "' returned a non-finite value");
    }
    return out;
}

std::vector<std::string> rep_labels(const Index& index, const ScoringFunction& scorer) {
    require(scorer.kind == ScoreKind::Categorical, ErrorKind::Config,
            "scorer '" + scorer.name + "' is not categorical");
    std::vector<std::string> out(index.rep_ids.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = scorer.label(index.rep_annotation(i));
    }
    return out;
}

namespace {

void check_propagation(const Index& index, std::size_t n_scores, std::size_t k, double eps) {
    require(k >= 1 && k <= index.k, ErrorKind::Config,
            "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(index.k) + "]");
    require(eps >= 0.0 && std::isfinite(eps), ErrorKind::Config, "eps must be finite and >= 0");
    require(n_scores == index.rep_ids.size(), ErrorKind::Shape, "need one score per representative");
}

}  // namespace

ProxyScores propagate_numeric(const Index& index, std::span<const double> scores, std::size_t k, double eps) {
    check_propagation(index, scores.size(), k, eps);
    ProxyScores out;
    out.kind = ScoreKind::Numeric;
    out.k = k;
    out.index_hash = index.hash();
    out.values.resize(index.n_records);
    const auto n = static_cast<std::ptrdiff_t>(index.n_records);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const auto row = index.neighbors(static_cast<std::size_t>(r));
        if (eps == 0.0 && row[0].distance == 0.0f) {
            double sum = 0.0;
            std::size_t zeros = 0;
            for (std::size_t j = 0; j < k && row[j].distance == 0.0f; ++j) {
                sum += scores[row[j].rep];
                ++zeros;
            }
            out.values[static_cast<std::size_t>(r)] = sum / static_cast<double>(zeros);
            continue;
        }
        // Weighted mean of offsets from the nearest score, so equal scores come back unrounded.
        const double base = scores[row[0].rep];
        double num = 0.0;
        double den = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double w = 1.0 / (static_cast<double>(row[j].distance) + eps);
            num += w * (scores[row[j].rep] - base);
            den += w;
        }
        out.values[static_cast<std::size_t>(r)] = base + num / den;
    }
    return out;
}

ProxyScores propagate_categorical(const Index& index, std::span<const std::string> labels, std::size_t k,
                                  double eps) {
    check_propagation(index, labels.size(), k, eps);
    ProxyScores out;
    out.kind = ScoreKind::Categorical;
    out.k = k;
    out.index_hash = index.hash();
    out.labels.resize(index.n_records);
    const auto n = static_cast<std::ptrdiff_t>(index.n_records);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const auto row = index.neighbors(static_cast<std::size_t>(r));
        const bool exact = eps == 0.0 && row[0].distance == 0.0f;
        std::map<std::string, double> votes;
        for (std::size_t j = 0; j < k; ++j) {
            if (exact && row[j].distance != 0.0f) {
                break;
            }
            votes[labels[row[j].rep]] += exact ? 1.0 : 1.0 / (static_cast<double>(row[j].distance) + eps);
        }
        // std::map iterates labels ascending, so strict > keeps the smallest on ties.
        const std::string* best = nullptr;
        double best_weight = -1.0;
        for (const auto& [label, w] : votes) {
            if (w > best_weight) {
                best = &label;
                best_weight = w;
            }
        }
        out.labels[static_cast<std::size_t>(r)] = *best;
    }
    return out;
}

std::vector<std::size_t> limit_ordering(const Index& index, std::span<const double> scores) {
    require(scores.size() == index.rep_ids.size(), ErrorKind::Shape, "need one score per representative");
    std::vector<std::size_t> order(index.n_records);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Neighbor& na = index.neighbors(a)[0];
        const Neighbor& nb = index.neighbors(b)[0];
        const double sa = scores[na.rep];
        const double sb = scores[nb.rep];
        if (sa != sb) {
            return sa > sb;
        }
        if (na.distance != nb.distance) {
            return na.distance < nb.distance;
        }
        return a < b;
    });
    return order;
}

void write_scores_csv(const ProxyScores& scores, const std::filesystem::path& path) {
    std::string out = scores.kind == ScoreKind::Numeric ? "id,score\n" : "id,label\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += scores.kind == ScoreKind::Numeric ? io::format_double(scores.values[i]) : scores.labels[i];
        out += '\n';
    }
    io::write_file(path, out);
}

ProxyScores read_scores_csv(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path));
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Integrity, "empty scores file");
    ProxyScores out;
    if (line == "id,score") {
        out.kind = ScoreKind::Numeric;
    } else if (line == "id,label") {
        out.kind = ScoreKind::Categorical;
    } else {
        fail(ErrorKind::Integrity, "unexpected scores header '" + line + "'");
    }
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        require(comma != std::string::npos, ErrorKind::Integrity, "malformed scores row '" + line + "'");
        require(line.substr(0, comma) == std::to_string(expected), ErrorKind::Integrity,
                "scores ids must be dense and ascending");
        ++expected;
        const std::string value = line.substr(comma + 1);
        if (out.kind == ScoreKind::Numeric) {
            out.values.push_back(io::parse_double(value));
        } else {
            out.labels.push_back(value);
        }
    }
    return out;
}

}  // namespace semidx

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

#include "semidx/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "semidx/errors.hpp"

namespace semidx {

namespace {

bool object_less(const LatentObject& a, const LatentObject& b) {
    return std::tie(a.type, a.x, a.y) < std::tie(b.type, b.x, b.y);
}

}  // namespace

void GroundTruthMetric::validate() const {
    require(cutoff > 0.0, ErrorKind::Config, "metric cutoff must be positive");
    require(radius > 0.0, ErrorKind::Config, "closeness radius must be positive");
    require(radius < cutoff, ErrorKind::Config, "closeness radius must be below the cutoff");
}

double object_cost(const LatentObject& a, const LatentObject& b, double cutoff) {
    if (a.type != b.type) {
        return cutoff;
    }
    return std::min(cutoff, std::hypot(a.x - b.x, a.y - b.y));
}

Annotation canonical(const Annotation& a) {
    Annotation out = a;
    std::sort(out.objects.begin(), out.objects.end(), object_less);
    return out;
}

double match_cost(const Annotation& a, const Annotation& b, const GroundTruthMetric& metric) {
    Annotation first = canonical(a);
    Annotation second = canonical(b);
    // Evaluate the unordered pair in one fixed orientation so that
    // match_cost(a, b) and match_cost(b, a) share every rounding step.
    if (std::lexicographical_compare(second.objects.begin(), second.objects.end(), first.objects.begin(),
                                     first.objects.end(), object_less)) {
        std::swap(first, second);
    }
    const std::size_t na = first.objects.size();
    const std::size_t nb = second.objects.size();
    const std::size_t n = std::max(na, nb);
    if (n == 0) {
        return 0.0;
    }
    const double c = metric.cutoff;
    std::vector<double> cost(n * n, c);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            cost[i * n + j] = object_cost(first.objects[i], second.objects[j], c);
        }
    }
    const auto assign =
        n <= assignment::kExhaustiveLimit ? assignment::exhaustive(cost, n) : assignment::hungarian(cost, n);
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        terms[i] = cost[i * n + assign[i]];
    }
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) {
        total += t;
    }
    return total / static_cast<double>(n);
}

bool is_close(const Annotation& a, const Annotation& b, const GroundTruthMetric& metric) {
    if (a.objects.size() != b.objects.size()) {
        return false;
    }
    return match_cost(a, b, metric) < metric.radius;
}

std::vector<std::vector<std::size_t>> close_neighbors(std::span<const Annotation* const> annotations,
                                                      const GroundTruthMetric& metric) {
    const std::size_t n = annotations.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return annotations[a]->objects.size() < annotations[b]->objects.size();
    });
    std::vector<Annotation> canon(n);
    for (std::size_t i = 0; i < n; ++i) {
        canon[i] = canonical(*annotations[i]);
    }
    // upper[i] holds close partners j that come after i in `order`.
    std::vector<std::vector<std::size_t>> upper(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t oi = 0; oi < count; ++oi) {
        const std::size_t i = order[static_cast<std::size_t>(oi)];
        const std::size_t size_i = canon[i].objects.size();
        for (std::size_t oj = static_cast<std::size_t>(oi) + 1; oj < n; ++oj) {
            const std::size_t j = order[oj];
            if (canon[j].objects.size() != size_i) {
                break;
            }
            if (match_cost(canon[i], canon[j], metric) < metric.radius) {
                upper[i].push_back(j);
            }
        }
    }
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : upper[i]) {
            out[i].push_back(j);
            out[j].push_back(i);
        }
    }
    for (auto& v : out) {
        std::sort(v.begin(), v.end());
    }
    return out;
}

namespace assignment {

std::vector<std::size_t> hungarian(std::span<const double> cost, std::size_t n) {
    require(cost.size() == n * n, ErrorKind::Shape, "cost matrix must be n*n");
    if (n == 0) {
        return {};
    }
    // Potentials formulation, 1-based with a virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assign(n);
    for (std::size_t j = 1; j <= n; ++j) {
        assign[p[j] - 1] = j - 1;
    }
    return assign;
}

std::vector<std::size_t> exhaustive(std::span<const double> cost, std::size_t n) {
    require(cost.size() == n * n, ErrorKind::Shape, "cost matrix must be n*n");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += cost[i * n + perm[i]];
        }
        if (total < best_cost) {
            best_cost = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace assignment

}  // namespace semidx

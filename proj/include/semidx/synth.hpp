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
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/matrix.hpp"

namespace semidx {

/// Per-label object count: Poisson(mean) truncated at max_count.
struct LabelSpec {
    std::string name;
    double mean_count = 1.0;
    int max_count = 6;
};

struct SynthConfig {
    std::size_t n_records = 10000;
    std::size_t feature_dim = 64;
    std::vector<LabelSpec> labels = {{"car", 1.0, 6}, {"bus", 0.3, 4}};
    // Rare-event spike: with probability p_rare a record gets exactly c_rare
    // objects of the first label.
    double p_rare = 0.005;
    int c_rare = 6;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
    std::vector<std::string> label_names() const;
};

struct Dataset {
    std::size_t feature_dim = 0;
    std::vector<std::string> labels;
    std::vector<Record> records;

    std::size_t size() const { return records.size(); }
    Matrix feature_matrix() const;
};

inline constexpr std::size_t kGridSide = 4;

/// Per-label object counts followed by per-label 4x4 occupancy counts.
std::vector<double> canonical_encoding(const Annotation& a, std::span<const std::string> labels);

Dataset generate_dataset(const SynthConfig& cfg);

/// Simulated expensive target oracle. Each distinct record costs one
/// invocation; repeated requests are served from the cache for free.
class Oracle {
public:
    explicit Oracle(const Dataset& dataset);

    const Annotation& annotate(std::size_t id);

    std::size_t invocation_count() const { return order_.size(); }
    bool is_cached(std::size_t id) const { return cache_.contains(id); }

    /// Ids in first-annotation order.
    std::span<const std::size_t> annotated_ids() const { return order_; }

    const Dataset& dataset() const { return *dataset_; }

    /// Ground truth for evaluation only; never charged.
    const Annotation& peek_truth(std::size_t id) const;

private:
    const Dataset* dataset_;
    std::unordered_map<std::size_t, Annotation> cache_;
    std::vector<std::size_t> order_;
};

void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset_jsonl(const std::filesystem::path& path);

}  // namespace semidx

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
#include <string>
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/embedding.hpp"
#include "semidx/index.hpp"
#include "semidx/synth.hpp"
#include "semidx/theory.hpp"

namespace semidx {

/// Everything needed to go from a dataset to an index.
struct BuildConfig {
    std::size_t hidden_dim = 256;
    std::size_t output_dim = 128;
    TrainParams train;
    std::size_t train_budget = 3000;  // records annotated for training
    std::size_t n_triplets = 6000;
    GroundTruthMetric metric;

    std::optional<std::size_t> rep_count;  // default ceil(0.007 N)
    std::size_t k = 7;
    double random_fraction = 0.1;

    // Lesion toggles.
    bool triplet_training = true;  // off: embeddings come from the untrained stub
    bool fpf_mining = true;        // off: training records drawn uniformly
    bool fpf_clustering = true;    // off: representatives drawn uniformly

    std::uint64_t seed = 0;

    void validate() const;
    Architecture architecture(std::size_t input_dim) const;
    std::size_t representatives(std::size_t n_records) const;
    /// "TMC" style tag: one letter per enabled toggle, '-' when lesioned.
    std::string toggle_tag() const;
};

struct EmbeddingStage {
    EmbeddingModel model;
    Matrix embeddings;
    std::vector<std::size_t> training_ids;
    std::vector<Triplet> triplets;
};

/// Stub embeddings, training-record mining, triplet sampling and training,
/// then embeddings for every record. Training annotations go through `oracle`.
EmbeddingStage embed_stage(const Dataset& dataset, const BuildConfig& cfg, Oracle& oracle, BuildCounts& counts);

/// Representative selection and the distance cache over `embeddings`.
Index index_stage(Matrix embeddings, const BuildConfig& cfg, Oracle& oracle, const std::string& model_hash,
                  BuildCounts& counts);

struct BuildResult {
    EmbeddingStage stage;
    Index index;
    BuildCounts counts;
};

BuildResult build_all(const Dataset& dataset, const BuildConfig& cfg, Oracle& oracle);

}  // namespace semidx

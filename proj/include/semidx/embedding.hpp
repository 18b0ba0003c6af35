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
#include <vector>

#include "semidx/datamodel.hpp"
#include "semidx/matrix.hpp"
#include "semidx/synth.hpp"

namespace semidx {

enum class EmbeddingMode { Trained, PretrainedStub };

const char* to_string(EmbeddingMode mode);
EmbeddingMode embedding_mode_from_string(const std::string& s);

struct Architecture {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 256;
    std::size_t output_dim = 128;

    std::size_t parameter_count() const {
        return hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
    }
    bool operator==(const Architecture&) const = default;
};

/// e = A2 * relu(A1 * x + b1) + b2.
struct EmbeddingModel {
    Architecture arch;
    double margin = 1.0;
    EmbeddingMode mode = EmbeddingMode::PretrainedStub;
    std::uint64_t seed = 0;
    std::vector<float> a1;  // hidden x input, row-major
    std::vector<float> b1;
    std::vector<float> a2;  // output x hidden, row-major
    std::vector<float> b2;
    std::vector<double> epoch_loss;  // mean training loss seen during each epoch
    double final_loss = 0.0;         // mean loss over all triplets with the final weights

    std::vector<float> embed(std::span<const float> x) const;

    /// Weights in blob order: A1, b1, A2, b2.
    std::vector<float> flat_weights() const;
    void set_flat_weights(std::span<const float> w);

    /// crc32 of the little-endian weight blob, as 8 hex digits.
    std::string hash() const;
};

/// Weights uniform in +-1/sqrt(fan_in), drawn from the seed.
EmbeddingModel init_model(const Architecture& arch, double margin, EmbeddingMode mode, std::uint64_t seed);

/// A fixed, never-trained random instance standing in for a generic pre-trained network.
inline EmbeddingModel pretrained_stub(const Architecture& arch, std::uint64_t seed, double margin = 1.0) {
    return init_model(arch, margin, EmbeddingMode::PretrainedStub, seed);
}

/// Row i = model(features row i). Data-parallel over rows.
Matrix embed_all(const EmbeddingModel& model, const Matrix& features);

double triplet_loss(std::span<const float> anchor, std::span<const float> positive, std::span<const float> negative,
                    double margin);

struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;

    bool operator==(const Triplet&) const = default;
};

enum class MiningStrategy { Fpf, Random };

/// Chooses which records to annotate for training, from base (pre-trained) embeddings.
std::vector<std::size_t> mine_training_ids(const Matrix& base_embeddings, std::size_t budget,
                                           MiningStrategy strategy, std::uint64_t seed);

/// Annotates `training_ids` through the oracle and samples triplets: anchor
/// uniform over anchors that have both a close and a far partner, positive
/// uniform among its close partners, negative uniform among its far ones.
std::vector<Triplet> build_triplets(std::span<const std::size_t> training_ids, Oracle& oracle,
                                    const GroundTruthMetric& metric, std::size_t n_triplets, std::uint64_t seed);

struct TrainParams {
    double lr = 0.01;
    std::size_t epochs = 20;
    std::size_t batch = 32;
    double margin = 1.0;

    void validate() const;
};

/// Mini-batch SGD on the mean triplet hinge.
EmbeddingModel train_embedding(const Matrix& features, std::span<const Triplet> triplets, const Architecture& arch,
                               const TrainParams& params, std::uint64_t seed);

/// Mean triplet loss of `batch` under the flattened parameters `params`
/// (blob order), with its gradient written to `grad` when non-null.
/// Double precision; the trainer runs the same code in float.
double triplet_batch_loss(const Architecture& arch, std::span<const double> params, const Matrix& features,
                          std::span<const Triplet> batch, double margin, std::vector<double>* grad);

/// Mean triplet loss of the model over `triplets`.
double mean_triplet_loss(const EmbeddingModel& model, const Matrix& features, std::span<const Triplet> triplets);

/// Monte Carlo estimate of the population triplet loss over an annotated
/// sample: anchor uniform, positive uniform in the anchor's M-ball (itself
/// included), negative uniform outside it. Anchors with nothing outside their
/// ball are skipped.
double population_triplet_loss(const Matrix& embeddings, std::span<const std::size_t> sample_ids,
                               std::span<const Annotation* const> annotations, const GroundTruthMetric& metric,
                               double margin, std::size_t n_probe, std::uint64_t seed);

void save_model(const EmbeddingModel& model, const std::filesystem::path& dir);
EmbeddingModel load_model(const std::filesystem::path& dir);

}  // namespace semidx

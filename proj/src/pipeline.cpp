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

#include "semidx/pipeline.hpp"

#include "semidx/errors.hpp"

namespace semidx {

void BuildConfig::validate() const {
    require(hidden_dim >= 1 && output_dim >= 1, ErrorKind::Config, "embedding dimensions must be >= 1");
    train.validate();
    require(train_budget >= 2, ErrorKind::Config, "train_budget must be >= 2");
    require(n_triplets >= 1, ErrorKind::Config, "n_triplets must be >= 1");
    metric.validate();
    require(!rep_count || *rep_count >= 1, ErrorKind::Config, "rep_count must be >= 1");
    require(k >= 1, ErrorKind::Config, "k must be >= 1");
    require(random_fraction >= 0.0 && random_fraction < 1.0, ErrorKind::Config, "random_fraction must lie in [0, 1)");
}

Architecture BuildConfig::architecture(std::size_t input_dim) const {
    return Architecture{input_dim, hidden_dim, output_dim};
}

std::size_t BuildConfig::representatives(std::size_t n_records) const {
    return rep_count.value_or(default_rep_count(n_records));
}

std::string BuildConfig::toggle_tag() const {
    std::string tag;
    tag += triplet_training ? 'T' : '-';
    tag += fpf_mining ? 'M' : '-';
    tag += fpf_clustering ? 'C' : '-';
    return tag;
}

EmbeddingStage embed_stage(const Dataset& dataset, const BuildConfig& cfg, Oracle& oracle, BuildCounts& counts) {
    cfg.validate();
    const Matrix features = dataset.feature_matrix();
    const Architecture arch = cfg.architecture(dataset.feature_dim);
    EmbeddingStage out;
    out.model = pretrained_stub(arch, cfg.seed, cfg.train.margin);
    out.embeddings = embed_all(out.model, features);
    counts.embeddings += dataset.size();
    if (!cfg.triplet_training) {
        return out;
    }
    require(cfg.train_budget <= dataset.size(), ErrorKind::Config,
            "train_budget " + std::to_string(cfg.train_budget) + " exceeds dataset size " +
                std::to_string(dataset.size()));
    const std::size_t before = oracle.invocation_count();
    out.training_ids = mine_training_ids(out.embeddings, cfg.train_budget,
                                         cfg.fpf_mining ? MiningStrategy::Fpf : MiningStrategy::Random, cfg.seed);
    counts.distance_evaluations += dataset.size() * cfg.train_budget;
    out.triplets = build_triplets(out.training_ids, oracle, cfg.metric, cfg.n_triplets, cfg.seed);
    counts.annotations += oracle.invocation_count() - before;
    out.model = train_embedding(features, out.triplets, arch, cfg.train, cfg.seed);
    counts.train_steps += cfg.train.epochs * ((out.triplets.size() + cfg.train.batch - 1) / cfg.train.batch);
    out.embeddings = embed_all(out.model, features);
    counts.embeddings += dataset.size();
    return out;
}

Index index_stage(Matrix embeddings, const BuildConfig& cfg, Oracle& oracle, const std::string& model_hash,
                  BuildCounts& counts) {
    cfg.validate();
    const std::size_t n = embeddings.rows;
    const std::size_t count = cfg.representatives(n);
    require(count <= n, ErrorKind::Config,
            "rep_count " + std::to_string(count) + " exceeds dataset size " + std::to_string(n));
    require(cfg.k <= count, ErrorKind::Config,
            "k=" + std::to_string(cfg.k) + " exceeds the representative count " + std::to_string(count));
    auto reps = cfg.fpf_clustering ? select_representatives(embeddings, count, cfg.random_fraction, cfg.seed)
                                   : select_random_representatives(n, count, cfg.seed);
    if (cfg.fpf_clustering) {
        counts.distance_evaluations += n * count;
    }
    counts.distance_evaluations += n * count;
    IndexMeta meta;
    meta.seed = cfg.seed;
    meta.random_fraction = cfg.fpf_clustering ? cfg.random_fraction : 1.0;
    meta.model_hash = model_hash;
    const std::size_t before = oracle.invocation_count();
    Index index = build_index(std::move(embeddings), std::move(reps), cfg.k, oracle, meta);
    counts.annotations += oracle.invocation_count() - before;
    return index;
}

BuildResult build_all(const Dataset& dataset, const BuildConfig& cfg, Oracle& oracle) {
    BuildResult out;
    out.stage = embed_stage(dataset, cfg, oracle, out.counts);
    out.index = index_stage(out.stage.embeddings, cfg, oracle, out.stage.model.hash(), out.counts);
    return out;
}

}  // namespace semidx

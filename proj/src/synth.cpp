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

#include "semidx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"

#include "semidx/errors.hpp"
#include "semidx/rng.hpp"

namespace semidx {

using nlohmann::json;

void SynthConfig::validate() const {
    require(n_records >= 1, ErrorKind::Config, "n_records must be >= 1");
    require(feature_dim >= 4, ErrorKind::Config, "feature_dim must be >= 4");
    require(!labels.empty(), ErrorKind::Config, "label set must not be empty");
    std::set<std::string> names;
    for (const auto& l : labels) {
        require(!l.name.empty(), ErrorKind::Config, "label names must be non-empty");
        require(names.insert(l.name).second, ErrorKind::Config, "duplicate label '" + l.name + "'");
        require(l.mean_count >= 0.0, ErrorKind::Config, "mean count must be non-negative");
        require(l.max_count >= 0, ErrorKind::Config, "max count must be non-negative");
    }
    require(p_rare >= 0.0 && p_rare <= 0.1, ErrorKind::Config, "p_rare must lie in [0, 0.1]");
    require(c_rare >= 1, ErrorKind::Config, "c_rare must be >= 1");
    require(noise_sigma >= 0.0, ErrorKind::Config, "noise_sigma must be >= 0");
}

std::vector<std::string> SynthConfig::label_names() const {
    std::vector<std::string> out;
    for (const auto& l : labels) {
        out.push_back(l.name);
    }
    return out;
}

Matrix Dataset::feature_matrix() const {
    Matrix m(records.size(), feature_dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::copy(records[i].features.begin(), records[i].features.end(), m.row(i).begin());
    }
    return m;
}

std::vector<double> canonical_encoding(const Annotation& a, std::span<const std::string> labels) {
    const std::size_t cells = kGridSide * kGridSide;
    const std::size_t n_labels = labels.size();
    std::vector<double> enc(n_labels * (1 + cells), 0.0);
    for (const auto& obj : a.objects) {
        const auto it = std::find(labels.begin(), labels.end(), obj.type);
        if (it == labels.end()) {
            continue;
        }
        const auto l = static_cast<std::size_t>(it - labels.begin());
        const auto cx = std::min(kGridSide - 1, static_cast<std::size_t>(obj.x * kGridSide));
        const auto cy = std::min(kGridSide - 1, static_cast<std::size_t>(obj.y * kGridSide));
        enc[l] += 1.0;
        enc[n_labels + l * cells + cy * kGridSide + cx] += 1.0;
    }
    return enc;
}

Dataset generate_dataset(const SynthConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.feature_dim = cfg.feature_dim;
    ds.labels = cfg.label_names();

    const std::size_t enc_dim = ds.labels.size() * (1 + kGridSide * kGridSide);
    const std::size_t dim = cfg.feature_dim;

    // Fixed affine lift from the canonical encoding to feature space.
    Rng lift_rng = make_rng(cfg.seed, "synth.lift");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> lift(dim * enc_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(enc_dim));
    for (auto& w : lift) {
        w = gauss(lift_rng) * scale;
    }
    std::vector<double> bias(dim);
    for (auto& b : bias) {
        b = 0.1 * gauss(lift_rng);
    }

    Rng latent_rng = make_rng(cfg.seed, "synth.latent");
    Rng noise_rng = make_rng(cfg.seed, "synth.noise");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::poisson_distribution<int>> counts;
    for (const auto& l : cfg.labels) {
        counts.emplace_back(l.mean_count > 0.0 ? l.mean_count : 1.0);
    }

    ds.records.resize(cfg.n_records);
    for (std::size_t i = 0; i < cfg.n_records; ++i) {
        Annotation latent;
        const bool rare = unit(latent_rng) < cfg.p_rare;
        for (std::size_t l = 0; l < cfg.labels.size(); ++l) {
            const auto& spec = cfg.labels[l];
            int c = spec.mean_count > 0.0 ? std::min(counts[l](latent_rng), spec.max_count) : 0;
            if (rare && l == 0) {
                c = cfg.c_rare;
            }
            for (int j = 0; j < c; ++j) {
                const double x = unit(latent_rng);
                const double y = unit(latent_rng);
                latent.objects.push_back(LatentObject{spec.name, x, y});
            }
        }
        const auto enc = canonical_encoding(latent, ds.labels);
        Record& rec = ds.records[i];
        rec.id = i;
        rec.features.resize(dim);
        for (std::size_t r = 0; r < dim; ++r) {
            double v = bias[r];
            for (std::size_t c = 0; c < enc_dim; ++c) {
                v += lift[r * enc_dim + c] * enc[c];
            }
            if (cfg.noise_sigma > 0.0) {
                v += cfg.noise_sigma * gauss(noise_rng);
            }
            rec.features[r] = static_cast<float>(v);
        }
        rec.latent = std::move(latent);
    }
    return ds;
}

Oracle::Oracle(const Dataset& dataset) : dataset_(&dataset) {}

const Annotation& Oracle::peek_truth(std::size_t id) const {
    require(id < dataset_->size(), ErrorKind::Lookup, "unknown record id " + std::to_string(id));
    const auto& latent = dataset_->records[id].latent;
    require(latent.has_value(), ErrorKind::Integrity, "record " + std::to_string(id) + " has no ground truth");
    return *latent;
}

const Annotation& Oracle::annotate(std::size_t id) {
    if (auto it = cache_.find(id); it != cache_.end()) {
        return it->second;
    }
    const Annotation& truth = peek_truth(id);
    order_.push_back(id);
    return cache_.emplace(id, truth).first->second;
}

namespace {

json annotation_to_json(const Annotation& a) {
    json objs = json::array();
    for (const auto& o : a.objects) {
        objs.push_back({{"t", o.type}, {"x", o.x}, {"y", o.y}});
    }
    return json{{"objects", std::move(objs)}};
}

}  // namespace

void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    for (const auto& rec : dataset.records) {
        json line{{"id", rec.id}, {"features", rec.features}};
        if (rec.latent) {
            line["latent"] = annotation_to_json(*rec.latent);
        }
        out << line.dump() << '\n';
    }
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

Dataset read_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
    Dataset ds;
    std::set<std::string> types;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        Record rec;
        try {
            const json j = json::parse(line);
            rec.id = j.at("id").get<std::size_t>();
            rec.features = j.at("features").get<std::vector<float>>();
            if (j.contains("latent")) {
                Annotation a;
                for (const auto& o : j["latent"].at("objects")) {
                    a.objects.push_back(
                        LatentObject{o.at("t").get<std::string>(), o.at("x").get<double>(), o.at("y").get<double>()});
                    types.insert(a.objects.back().type);
                }
                rec.latent = std::move(a);
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::Integrity, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        require(rec.id == ds.records.size(), ErrorKind::Integrity, "record ids must be dense and ordered");
        if (ds.records.empty()) {
            ds.feature_dim = rec.features.size();
        }
        require(rec.features.size() == ds.feature_dim, ErrorKind::Shape, "inconsistent feature dimension");
        ds.records.push_back(std::move(rec));
    }
    ds.labels.assign(types.begin(), types.end());
    return ds;
}

}  // namespace semidx

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

#include "semidx/index.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "semidx/errors.hpp"
#include "semidx/io.hpp"
#include "semidx/rng.hpp"

namespace semidx {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string encode_topk(const std::vector<Neighbor>& topk) {
    std::string blob;
    blob.reserve(topk.size() * 8);
    for (const auto& nb : topk) {
        io::put_u32(blob, nb.rep);
        io::put_f32(blob, nb.distance);
    }
    return blob;
}

json annotations_to_json(const std::map<std::size_t, Annotation>& annotations) {
    json out = json::object();
    for (const auto& [id, ann] : annotations) {
        json objs = json::array();
        for (const auto& o : ann.objects) {
            objs.push_back({{"t", o.type}, {"x", o.x}, {"y", o.y}});
        }
        out[std::to_string(id)] = json{{"objects", std::move(objs)}};
    }
    return out;
}

std::map<std::size_t, Annotation> annotations_from_json(const json& j) {
    std::map<std::size_t, Annotation> out;
    for (const auto& [key, value] : j.items()) {
        Annotation a;
        for (const auto& o : value.at("objects")) {
            a.objects.push_back(LatentObject{o.at("t").get<std::string>(), o.at("x").get<double>(),
                                             o.at("y").get<double>()});
        }
        out.emplace(std::stoull(key), std::move(a));
    }
    return out;
}

void check_reps(const std::vector<std::size_t>& rep_ids, std::size_t n, std::size_t k) {
    require(k >= 1, ErrorKind::Integrity, "k must be >= 1");
    require(k <= rep_ids.size(), ErrorKind::Integrity,
            "k=" + std::to_string(k) + " exceeds representative count " + std::to_string(rep_ids.size()));
    std::set<std::size_t> seen;
    for (std::size_t id : rep_ids) {
        require(id < n, ErrorKind::Integrity, "representative id " + std::to_string(id) + " out of range");
        require(seen.insert(id).second, ErrorKind::Integrity, "duplicate representative id " + std::to_string(id));
    }
}

}  // namespace

void Index::validate() const {
    check_reps(rep_ids, n_records, k);
    require(embeddings.rows == n_records && embeddings.cols == dim, ErrorKind::Integrity,
            "embedding matrix shape does not match the index");
    require(topk.size() == n_records * k, ErrorKind::Integrity, "top-k table has the wrong size");
    for (std::size_t r = 0; r < n_records; ++r) {
        const auto row = neighbors(r);
        for (std::size_t j = 0; j < k; ++j) {
            require(row[j].rep < rep_ids.size(), ErrorKind::Integrity,
                    "record " + std::to_string(r) + " references an invalid representative");
            require(!(row[j].distance < 0.0f) && std::isfinite(row[j].distance), ErrorKind::Integrity,
                    "record " + std::to_string(r) + " has an invalid distance");
            require(j == 0 || row[j - 1].distance <= row[j].distance, ErrorKind::Integrity,
                    "record " + std::to_string(r) + " has unsorted distances");
        }
    }
    for (std::size_t id : rep_ids) {
        require(annotations.contains(id), ErrorKind::Integrity,
                "representative " + std::to_string(id) + " has no annotation");
    }
}

std::string Index::hash() const {
    std::string blob;
    for (std::size_t id : rep_ids) {
        io::put_u32(blob, static_cast<std::uint32_t>(id));
    }
    blob += encode_topk(topk);
    return io::hex32(io::crc32(blob));
}

std::size_t default_rep_count(std::size_t n_records) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.007 * static_cast<double>(n_records))));
}

std::vector<std::size_t> select_representatives(const Matrix& embeddings, std::size_t count, double random_fraction,
                                                std::uint64_t seed) {
    const std::size_t n = embeddings.rows;
    require(count >= 1, ErrorKind::Config, "representative count must be >= 1");
    require(count <= n, ErrorKind::Config,
            "representative count " + std::to_string(count) + " exceeds dataset size " + std::to_string(n));
    require(random_fraction >= 0.0 && random_fraction < 1.0, ErrorKind::Config,
            "random_fraction must lie in [0, 1)");
    const auto n_random =
        std::min(count, static_cast<std::size_t>(std::ceil(random_fraction * static_cast<double>(count))));
    Rng rng = make_rng(seed, "index.random_reps");
    auto seeds = sample_without_replacement(n, n_random, rng);
    return furthest_point_first(embeddings, std::move(seeds), count);
}

std::vector<std::size_t> select_random_representatives(std::size_t n_records, std::size_t count, std::uint64_t seed) {
    require(count >= 1 && count <= n_records, ErrorKind::Config, "representative count out of range");
    Rng rng = make_rng(seed, "index.random_reps");
    return sample_without_replacement(n_records, count, rng);
}

std::vector<Neighbor> build_distance_cache(const Matrix& embeddings, std::span<const std::size_t> rep_ids,
                                           std::size_t k) {
    require(k >= 1 && k <= rep_ids.size(), ErrorKind::Config, "k must lie in [1, representative count]");
    for (std::size_t id : rep_ids) {
        require(id < embeddings.rows, ErrorKind::Lookup, "representative id " + std::to_string(id) + " out of range");
    }
    std::vector<Neighbor> topk(embeddings.rows * k, empty_neighbor());
    parallel::merge_nearest(embeddings, rep_ids, 0, k, topk);
    return topk;
}

Index build_index(Matrix embeddings, std::vector<std::size_t> rep_ids, std::size_t k, Oracle& oracle,
                  IndexMeta meta) {
    Index index;
    index.n_records = embeddings.rows;
    index.dim = embeddings.cols;
    index.k = k;
    check_reps(rep_ids, index.n_records, k);
    for (std::size_t id : rep_ids) {
        index.annotations.emplace(id, oracle.annotate(id));
    }
    index.topk = build_distance_cache(embeddings, rep_ids, k);
    index.rep_ids = std::move(rep_ids);
    index.embeddings = std::move(embeddings);
    index.meta = std::move(meta);
    return index;
}

Index crack(const Index& index, std::span<const std::size_t> new_ids,
            const std::map<std::size_t, Annotation>& annotations) {
    std::set<std::size_t> present(index.rep_ids.begin(), index.rep_ids.end());
    std::vector<std::size_t> fresh;
    for (std::size_t id : new_ids) {
        if (present.contains(id)) {
            continue;
        }
        require(id < index.n_records, ErrorKind::Lookup, "unknown record id " + std::to_string(id));
        require(annotations.contains(id), ErrorKind::Integrity,
                "no annotation supplied for new representative " + std::to_string(id));
        present.insert(id);
        fresh.push_back(id);
    }
    Index out = index;
    if (fresh.empty()) {
        return out;
    }
    const auto offset = static_cast<std::uint32_t>(out.rep_ids.size());
    for (std::size_t id : fresh) {
        out.rep_ids.push_back(id);
        out.annotations.emplace(id, annotations.at(id));
    }
    parallel::merge_nearest(out.embeddings, fresh, offset, out.k, out.topk);
    return out;
}

Index crack(const Index& index, const std::map<std::size_t, Annotation>& annotations) {
    std::vector<std::size_t> ids;
    for (const auto& [id, ann] : annotations) {
        ids.push_back(id);
    }
    return crack(index, ids, annotations);
}

std::string encode_embeddings(const Matrix& m) {
    std::string blob;
    blob.reserve(m.data.size() * 4);
    for (float v : m.data) {
        io::put_f32(blob, v);
    }
    return blob;
}

Matrix decode_embeddings(std::string_view blob, std::size_t rows, std::size_t cols) {
    require(blob.size() == rows * cols * 4, ErrorKind::Truncated, "embedding blob has the wrong size");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        m.data[i] = io::get_f32(blob, i * 4);
    }
    return m;
}

void save_index(const Index& index, const std::filesystem::path& dir) {
    index.validate();
    std::filesystem::create_directories(dir);
    const std::string emb = encode_embeddings(index.embeddings);
    const std::string topk = encode_topk(index.topk);
    const std::string ann = annotations_to_json(index.annotations).dump() + "\n";
    ordered_json manifest{
        {"version", index.meta.version},
        {"n", index.n_records},
        {"d", index.dim},
        {"k", index.k},
        {"rep_ids", index.rep_ids},
        {"seed", index.meta.seed},
        {"random_fraction", index.meta.random_fraction},
        {"model_hash", index.meta.model_hash},
        {"checksums",
         {{"embeddings.bin", io::hex32(io::crc32(emb))},
          {"topk.bin", io::hex32(io::crc32(topk))},
          {"annotations.json", io::hex32(io::crc32(ann))}}},
    };
    manifest["checksums"]["manifest"] = "00000000";
    io::write_file(dir / "embeddings.bin", emb);
    io::write_file(dir / "topk.bin", topk);
    io::write_file(dir / "annotations.json", ann);
    io::write_file(dir / "manifest.json", io::seal(manifest.dump(2) + "\n", "manifest"));
}

Index load_index(const std::filesystem::path& dir) {
    const std::string text = io::read_file(dir / "manifest.json");
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, "bad index manifest: " + std::string(e.what()));
    }
    Index index;
    std::string stored_checksum;
    try {
        index.meta.version = manifest.at("version").get<std::uint32_t>();
        require(index.meta.version == kIndexVersion, ErrorKind::Version,
                "index version " + std::to_string(index.meta.version) + ", expected " +
                    std::to_string(kIndexVersion));
        index.n_records = manifest.at("n").get<std::size_t>();
        index.dim = manifest.at("d").get<std::size_t>();
        index.k = manifest.at("k").get<std::size_t>();
        index.rep_ids = manifest.at("rep_ids").get<std::vector<std::size_t>>();
        index.meta.seed = manifest.at("seed").get<std::uint64_t>();
        index.meta.random_fraction = manifest.at("random_fraction").get<double>();
        index.meta.model_hash = manifest.at("model_hash").get<std::string>();
        stored_checksum = manifest.at("checksums").at("manifest").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, "bad index manifest: " + std::string(e.what()));
    }
    check_reps(index.rep_ids, index.n_records, index.k);
    require(io::seal_matches(text, "manifest"), ErrorKind::Checksum, "manifest checksum mismatch");

    const auto& sums = manifest.at("checksums");
    const std::string emb = io::read_file(dir / "embeddings.bin");
    const std::string topk = io::read_file(dir / "topk.bin");
    const std::string ann = io::read_file(dir / "annotations.json");
    require(emb.size() == index.n_records * index.dim * 4, ErrorKind::Truncated, "embeddings.bin has the wrong size");
    require(topk.size() == index.n_records * index.k * 8, ErrorKind::Truncated, "topk.bin has the wrong size");
    require(io::hex32(io::crc32(emb)) == sums.at("embeddings.bin").get<std::string>(), ErrorKind::Checksum,
            "embeddings.bin checksum mismatch");
    require(io::hex32(io::crc32(topk)) == sums.at("topk.bin").get<std::string>(), ErrorKind::Checksum,
            "topk.bin checksum mismatch");
    require(io::hex32(io::crc32(ann)) == sums.at("annotations.json").get<std::string>(), ErrorKind::Checksum,
            "annotations.json checksum mismatch");

    index.embeddings = decode_embeddings(emb, index.n_records, index.dim);
    index.topk.resize(index.n_records * index.k);
    for (std::size_t i = 0; i < index.topk.size(); ++i) {
        index.topk[i] = Neighbor{io::get_u32(topk, i * 8), io::get_f32(topk, i * 8 + 4)};
    }
    try {
        index.annotations = annotations_from_json(json::parse(ann));
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, "bad annotations.json: " + std::string(e.what()));
    }
    index.validate();
    return index;
}

}  // namespace semidx

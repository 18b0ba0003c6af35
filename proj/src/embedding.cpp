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

#include "semidx/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "json.hpp"
#include "semidx/errors.hpp"
#include "semidx/io.hpp"
#include "semidx/kernels.hpp"
#include "semidx/rng.hpp"

namespace semidx {

using nlohmann::json;

const char* to_string(EmbeddingMode mode) {
    return mode == EmbeddingMode::Trained ? "trained" : "pretrained-stub";
}

EmbeddingMode embedding_mode_from_string(const std::string& s) {
    if (s == "trained") {
        return EmbeddingMode::Trained;
    }
    if (s == "pretrained-stub") {
        return EmbeddingMode::PretrainedStub;
    }
    fail(ErrorKind::Config, "unknown embedding mode '" + s + "'");
}

namespace {

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using ColMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
struct Weights {
    RowMat<S> a1;
    Vec<S> b1;
    RowMat<S> a2;
    Vec<S> b2;

    static Weights zeros(const Architecture& arch) {
        Weights w;
        w.a1 = RowMat<S>::Zero(static_cast<Eigen::Index>(arch.hidden_dim), static_cast<Eigen::Index>(arch.input_dim));
        w.b1 = Vec<S>::Zero(static_cast<Eigen::Index>(arch.hidden_dim));
        w.a2 = RowMat<S>::Zero(static_cast<Eigen::Index>(arch.output_dim), static_cast<Eigen::Index>(arch.hidden_dim));
        w.b2 = Vec<S>::Zero(static_cast<Eigen::Index>(arch.output_dim));
        return w;
    }

    template <class T>
    static Weights from_flat(const Architecture& arch, std::span<const T> flat) {
        Weights w = zeros(arch);
        std::size_t off = 0;
        auto take = [&](S* dst, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                dst[i] = static_cast<S>(flat[off + i]);
            }
            off += n;
        };
        take(w.a1.data(), static_cast<std::size_t>(w.a1.size()));
        take(w.b1.data(), static_cast<std::size_t>(w.b1.size()));
        take(w.a2.data(), static_cast<std::size_t>(w.a2.size()));
        take(w.b2.data(), static_cast<std::size_t>(w.b2.size()));
        return w;
    }

    template <class T>
    void to_flat(std::vector<T>& flat) const {
        flat.clear();
        flat.reserve(static_cast<std::size_t>(a1.size() + b1.size() + a2.size() + b2.size()));
        auto put = [&](const S* src, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) {
                flat.push_back(static_cast<T>(src[i]));
            }
        };
        put(a1.data(), a1.size());
        put(b1.data(), b1.size());
        put(a2.data(), a2.size());
        put(b2.data(), b2.size());
    }
};

// Columns [0,B) anchors, [B,2B) positives, [2B,3B) negatives.
template <class S>
ColMat<S> gather_batch(const Matrix& features, std::span<const Triplet> batch) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    ColMat<S> x(static_cast<Eigen::Index>(features.cols), 3 * b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const Triplet& t = batch[static_cast<std::size_t>(j)];
        const std::size_t ids[3] = {t.anchor, t.positive, t.negative};
        for (int s = 0; s < 3; ++s) {
            const auto row = features.row(ids[s]);
            for (std::size_t c = 0; c < row.size(); ++c) {
                x(static_cast<Eigen::Index>(c), s * b + j) = static_cast<S>(row[c]);
            }
        }
    }
    return x;
}

template <class S>
S batch_loss(const Weights<S>& w, const ColMat<S>& x, S margin, Weights<S>* grad) {
    const Eigen::Index b = x.cols() / 3;
    const ColMat<S> z = (w.a1 * x).colwise() + w.b1;
    const ColMat<S> h = z.cwiseMax(S(0));
    const ColMat<S> e = (w.a2 * h).colwise() + w.b2;
    ColMat<S> g;
    if (grad != nullptr) {
        g = ColMat<S>::Zero(e.rows(), e.cols());
    }
    const S inv_b = S(1) / static_cast<S>(b);
    S total = 0;
    for (Eigen::Index j = 0; j < b; ++j) {
        const Vec<S> dap = e.col(j) - e.col(b + j);
        const Vec<S> dan = e.col(j) - e.col(2 * b + j);
        const S nap = dap.norm();
        const S nan = dan.norm();
        const S hinge = margin + nap - nan;
        if (hinge <= S(0)) {
            continue;
        }
        total += hinge;
        if (grad != nullptr) {
            const Vec<S> uap = nap > S(0) ? Vec<S>(dap / nap) : Vec<S>::Zero(dap.size());
            const Vec<S> uan = nan > S(0) ? Vec<S>(dan / nan) : Vec<S>::Zero(dan.size());
            g.col(j) += (uap - uan) * inv_b;
            g.col(b + j) -= uap * inv_b;
            g.col(2 * b + j) += uan * inv_b;
        }
    }
    if (grad != nullptr) {
        grad->a2 = g * h.transpose();
        grad->b2 = g.rowwise().sum();
        const ColMat<S> gh = (w.a2.transpose() * g).cwiseProduct((z.array() > S(0)).template cast<S>().matrix());
        grad->a1 = gh * x.transpose();
        grad->b1 = gh.rowwise().sum();
    }
    return total * inv_b;
}

Weights<float> weights_of(const EmbeddingModel& model) {
    const auto flat = model.flat_weights();
    return Weights<float>::from_flat(model.arch, std::span<const float>(flat));
}

void check_arch(const Architecture& arch) {
    require(arch.input_dim > 0 && arch.hidden_dim > 0 && arch.output_dim > 0, ErrorKind::Config,
            "architecture dimensions must be positive");
}

}  // namespace

std::vector<float> EmbeddingModel::embed(std::span<const float> x) const {
    require(x.size() == arch.input_dim, ErrorKind::Shape, "feature dimension does not match the model input");
    const auto d_in = static_cast<Eigen::Index>(arch.input_dim);
    const auto d_h = static_cast<Eigen::Index>(arch.hidden_dim);
    const auto d_out = static_cast<Eigen::Index>(arch.output_dim);
    Eigen::Map<const RowMat<float>> w1(a1.data(), d_h, d_in);
    Eigen::Map<const RowMat<float>> w2(a2.data(), d_out, d_h);
    Eigen::Map<const Vec<float>> v1(b1.data(), d_h);
    Eigen::Map<const Vec<float>> v2(b2.data(), d_out);
    Eigen::Map<const Vec<float>> xin(x.data(), d_in);
    const Vec<float> hidden = (w1 * xin + v1).cwiseMax(0.0f);
    std::vector<float> out(arch.output_dim);
    Eigen::Map<Vec<float>>(out.data(), d_out) = w2 * hidden + v2;
    return out;
}

std::vector<float> EmbeddingModel::flat_weights() const {
    std::vector<float> w;
    w.reserve(arch.parameter_count());
    w.insert(w.end(), a1.begin(), a1.end());
    w.insert(w.end(), b1.begin(), b1.end());
    w.insert(w.end(), a2.begin(), a2.end());
    w.insert(w.end(), b2.begin(), b2.end());
    return w;
}

void EmbeddingModel::set_flat_weights(std::span<const float> w) {
    require(w.size() == arch.parameter_count(), ErrorKind::Shape, "weight blob size does not match architecture");
    auto it = w.begin();
    auto take = [&](std::vector<float>& dst, std::size_t n) {
        dst.assign(it, it + static_cast<std::ptrdiff_t>(n));
        it += static_cast<std::ptrdiff_t>(n);
    };
    take(a1, arch.hidden_dim * arch.input_dim);
    take(b1, arch.hidden_dim);
    take(a2, arch.output_dim * arch.hidden_dim);
    take(b2, arch.output_dim);
}

namespace {

std::string weight_blob(const EmbeddingModel& model) {
    std::string blob;
    const auto w = model.flat_weights();
    blob.reserve(w.size() * 4);
    for (float v : w) {
        io::put_f32(blob, v);
    }
    return blob;
}

}  // namespace

std::string EmbeddingModel::hash() const { return io::hex32(io::crc32(weight_blob(*this))); }

EmbeddingModel init_model(const Architecture& arch, double margin, EmbeddingMode mode, std::uint64_t seed) {
    check_arch(arch);
    require(margin > 0.0, ErrorKind::Config, "margin must be positive");
    EmbeddingModel m;
    m.arch = arch;
    m.margin = margin;
    m.mode = mode;
    m.seed = seed;
    Rng rng = make_rng(seed, "embedding.init");
    auto fill = [&](std::vector<float>& v, std::size_t n, std::size_t fan_in) {
        const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
        std::uniform_real_distribution<float> u(-bound, bound);
        v.resize(n);
        for (auto& x : v) {
            x = u(rng);
        }
    };
    fill(m.a1, arch.hidden_dim * arch.input_dim, arch.input_dim);
    fill(m.b1, arch.hidden_dim, arch.input_dim);
    fill(m.a2, arch.output_dim * arch.hidden_dim, arch.hidden_dim);
    fill(m.b2, arch.output_dim, arch.hidden_dim);
    return m;
}

Matrix embed_all(const EmbeddingModel& model, const Matrix& features) {
    require(features.cols == model.arch.input_dim, ErrorKind::Shape,
            "feature dimension " + std::to_string(features.cols) + " does not match model input " +
                std::to_string(model.arch.input_dim));
    Matrix out(features.rows, model.arch.output_dim);
    const auto n = static_cast<std::ptrdiff_t>(features.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto e = model.embed(features.row(static_cast<std::size_t>(i)));
        std::copy(e.begin(), e.end(), out.row(static_cast<std::size_t>(i)).begin());
    }
    return out;
}

double triplet_loss(std::span<const float> anchor, std::span<const float> positive, std::span<const float> negative,
                    double margin) {
    require(anchor.size() == positive.size() && anchor.size() == negative.size(), ErrorKind::Shape,
            "triplet embeddings must share a dimension");
    double ap = 0.0;
    double an = 0.0;
    for (std::size_t i = 0; i < anchor.size(); ++i) {
        const double dp = static_cast<double>(anchor[i]) - positive[i];
        const double dn = static_cast<double>(anchor[i]) - negative[i];
        ap += dp * dp;
        an += dn * dn;
    }
    return std::max(0.0, margin + std::sqrt(ap) - std::sqrt(an));
}

std::vector<std::size_t> mine_training_ids(const Matrix& base_embeddings, std::size_t budget,
                                           MiningStrategy strategy, std::uint64_t seed) {
    const std::size_t n = base_embeddings.rows;
    require(budget >= 1, ErrorKind::Config, "mining budget must be >= 1");
    require(budget <= n, ErrorKind::Config,
            "mining budget " + std::to_string(budget) + " exceeds dataset size " + std::to_string(n));
    if (strategy == MiningStrategy::Random) {
        Rng rng = make_rng(seed, "embedding.mine");
        return sample_without_replacement(n, budget, rng);
    }
    return furthest_point_first(base_embeddings, {}, budget);
}

std::vector<Triplet> build_triplets(std::span<const std::size_t> training_ids, Oracle& oracle,
                                    const GroundTruthMetric& metric, std::size_t n_triplets, std::uint64_t seed) {
    metric.validate();
    const std::size_t n = training_ids.size();
    std::vector<const Annotation*> ann(n);
    for (std::size_t i = 0; i < n; ++i) {
        ann[i] = &oracle.annotate(training_ids[i]);
    }
    const auto close = close_neighbors(ann, metric);

    std::vector<std::size_t> anchors;
    bool any_close = false;
    bool any_far = false;
    for (std::size_t i = 0; i < n; ++i) {
        const bool has_close = !close[i].empty();
        const bool has_far = close[i].size() + 1 < n;
        any_close = any_close || has_close;
        any_far = any_far || has_far;
        if (has_close && has_far) {
            anchors.push_back(i);
        }
    }
    require(any_close, ErrorKind::DegeneratePool, "no close pairs in the training pool");
    require(any_far, ErrorKind::DegeneratePool, "no far pairs in the training pool");
    require(!anchors.empty(), ErrorKind::DegeneratePool, "no anchor has both a close and a far partner");

    Rng rng = make_rng(seed, "embedding.triplets");
    std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_any(0, n - 1);
    std::vector<Triplet> out;
    out.reserve(n_triplets);
    for (std::size_t t = 0; t < n_triplets; ++t) {
        const std::size_t a = anchors[pick_anchor(rng)];
        const auto& pos = close[a];
        std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
        const std::size_t p = pos[pick_pos(rng)];
        const std::size_t far_count = n - 1 - pos.size();
        std::size_t neg = 0;
        if (far_count * 10 >= n) {
            do {
                neg = pick_any(rng);
            } while (neg == a || std::binary_search(pos.begin(), pos.end(), neg));
        } else {
            std::vector<std::size_t> far;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != a && !std::binary_search(pos.begin(), pos.end(), j)) {
                    far.push_back(j);
                }
            }
            std::uniform_int_distribution<std::size_t> pick_far(0, far.size() - 1);
            neg = far[pick_far(rng)];
        }
        out.push_back(Triplet{training_ids[a], training_ids[p], training_ids[neg]});
    }
    return out;
}

void TrainParams::validate() const {
    require(lr > 0.0 && std::isfinite(lr), ErrorKind::Config, "learning rate must be positive");
    require(batch >= 1, ErrorKind::Config, "batch size must be >= 1");
    require(margin > 0.0, ErrorKind::Config, "margin must be positive");
}

double triplet_batch_loss(const Architecture& arch, std::span<const double> params, const Matrix& features,
                          std::span<const Triplet> batch, double margin, std::vector<double>* grad) {
    require(params.size() == arch.parameter_count(), ErrorKind::Shape, "parameter vector size mismatch");
    require(features.cols == arch.input_dim, ErrorKind::Shape, "feature dimension mismatch");
    require(!batch.empty(), ErrorKind::Shape, "empty batch");
    const auto w = Weights<double>::from_flat(arch, params);
    const auto x = gather_batch<double>(features, batch);
    if (grad == nullptr) {
        return batch_loss<double>(w, x, margin, nullptr);
    }
    Weights<double> g = Weights<double>::zeros(arch);
    const double loss = batch_loss<double>(w, x, margin, &g);
    g.to_flat(*grad);
    return loss;
}

double mean_triplet_loss(const EmbeddingModel& model, const Matrix& features, std::span<const Triplet> triplets) {
    if (triplets.empty()) {
        return 0.0;
    }
    const auto w = weights_of(model);
    const auto margin = static_cast<float>(model.margin);
    constexpr std::size_t chunk = 256;
    double total = 0.0;
    for (std::size_t start = 0; start < triplets.size(); start += chunk) {
        const auto part = triplets.subspan(start, std::min(chunk, triplets.size() - start));
        const auto x = gather_batch<float>(features, part);
        total += static_cast<double>(batch_loss<float>(w, x, margin, nullptr)) * static_cast<double>(part.size());
    }
    return total / static_cast<double>(triplets.size());
}

EmbeddingModel train_embedding(const Matrix& features, std::span<const Triplet> triplets, const Architecture& arch,
                               const TrainParams& params, std::uint64_t seed) {
    params.validate();
    require(!triplets.empty(), ErrorKind::Config, "training needs at least one triplet");
    require(features.cols == arch.input_dim, ErrorKind::Shape, "feature dimension does not match the architecture");
    EmbeddingModel model = init_model(arch, params.margin, EmbeddingMode::Trained, seed);
    auto w = weights_of(model);
    auto g = Weights<float>::zeros(arch);
    const auto lr = static_cast<float>(params.lr);
    const auto margin = static_cast<float>(params.margin);

    std::vector<Triplet> order(triplets.begin(), triplets.end());
    Rng rng = make_rng(seed, "embedding.shuffle");
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double seen = 0.0;
        for (std::size_t start = 0; start < order.size(); start += params.batch) {
            const auto part =
                std::span<const Triplet>(order).subspan(start, std::min(params.batch, order.size() - start));
            const auto x = gather_batch<float>(features, part);
            const float loss = batch_loss<float>(w, x, margin, &g);
            if (!std::isfinite(loss)) {
                fail(ErrorKind::TrainingDiverged, "non-finite loss at epoch " + std::to_string(epoch));
            }
            seen += static_cast<double>(loss) * static_cast<double>(part.size());
            w.a1 -= lr * g.a1;
            w.b1 -= lr * g.b1;
            w.a2 -= lr * g.a2;
            w.b2 -= lr * g.b2;
        }
        model.epoch_loss.push_back(seen / static_cast<double>(order.size()));
    }
    std::vector<float> flat;
    w.to_flat(flat);
    for (float v : flat) {
        if (!std::isfinite(v)) {
            fail(ErrorKind::TrainingDiverged, "non-finite weights after training");
        }
    }
    model.set_flat_weights(flat);
    model.final_loss = mean_triplet_loss(model, features, triplets);
    return model;
}

double population_triplet_loss(const Matrix& embeddings, std::span<const std::size_t> sample_ids,
                               std::span<const Annotation* const> annotations, const GroundTruthMetric& metric,
                               double margin, std::size_t n_probe, std::uint64_t seed) {
    require(sample_ids.size() == annotations.size(), ErrorKind::Shape, "sample ids and annotations differ in length");
    require(n_probe >= 1, ErrorKind::Config, "n_probe must be >= 1");
    const std::size_t n = sample_ids.size();
    const auto close = close_neighbors(annotations, metric);
    // ball[i] = close partners plus i itself, sorted.
    std::vector<std::vector<std::size_t>> ball(n);
    std::vector<std::size_t> anchors;
    for (std::size_t i = 0; i < n; ++i) {
        ball[i] = close[i];
        ball[i].insert(std::upper_bound(ball[i].begin(), ball[i].end(), i), i);
        if (ball[i].size() < n) {
            anchors.push_back(i);
        }
    }
    require(!anchors.empty(), ErrorKind::DegeneratePool, "no far pairs in the sample");

    Rng rng = make_rng(seed, "embedding.population");
    std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_any(0, n - 1);
    double total = 0.0;
    for (std::size_t t = 0; t < n_probe; ++t) {
        const std::size_t a = anchors[pick_anchor(rng)];
        const auto& in_ball = ball[a];
        std::uniform_int_distribution<std::size_t> pick_pos(0, in_ball.size() - 1);
        const std::size_t p = in_ball[pick_pos(rng)];
        std::size_t neg = 0;
        if ((n - in_ball.size()) * 10 >= n) {
            do {
                neg = pick_any(rng);
            } while (std::binary_search(in_ball.begin(), in_ball.end(), neg));
        } else {
            std::vector<std::size_t> far;
            for (std::size_t j = 0; j < n; ++j) {
                if (!std::binary_search(in_ball.begin(), in_ball.end(), j)) {
                    far.push_back(j);
                }
            }
            std::uniform_int_distribution<std::size_t> pick_far(0, far.size() - 1);
            neg = far[pick_far(rng)];
        }
        total += triplet_loss(embeddings.row(sample_ids[a]), embeddings.row(sample_ids[p]),
                              embeddings.row(sample_ids[neg]), margin);
    }
    return total / static_cast<double>(n_probe);
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string blob = weight_blob(model);
    json manifest{
        {"dims", {model.arch.input_dim, model.arch.hidden_dim, model.arch.output_dim}},
        {"margin", model.margin},
        {"mode", to_string(model.mode)},
        {"seed", model.seed},
        {"hash", io::hex32(io::crc32(blob))},
        {"epoch_loss", model.epoch_loss},
        {"final_loss", model.final_loss},
        {"manifest_checksum", "00000000"},
    };
    io::write_file(dir / "weights.bin", blob);
    io::write_file(dir / "manifest.json", io::seal(manifest.dump(2) + "\n", "manifest_checksum"));
}

EmbeddingModel load_model(const std::filesystem::path& dir) {
    const std::string text = io::read_file(dir / "manifest.json");
    EmbeddingModel m;
    std::string hash;
    try {
        const json manifest = json::parse(text);
        const auto dims = manifest.at("dims").get<std::vector<std::size_t>>();
        require(dims.size() == 3, ErrorKind::Integrity, "model dims must have three entries");
        m.arch = Architecture{dims[0], dims[1], dims[2]};
        m.margin = manifest.at("margin").get<double>();
        const auto mode = manifest.at("mode").get<std::string>();
        require(mode == to_string(EmbeddingMode::Trained) || mode == to_string(EmbeddingMode::PretrainedStub),
                ErrorKind::Integrity, "unknown model mode '" + mode + "'");
        m.mode = embedding_mode_from_string(mode);
        m.seed = manifest.at("seed").get<std::uint64_t>();
        m.epoch_loss = manifest.value("epoch_loss", std::vector<double>{});
        m.final_loss = manifest.value("final_loss", 0.0);
        hash = manifest.at("hash").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, "bad model manifest: " + std::string(e.what()));
    }
    check_arch(m.arch);
    require(io::seal_matches(text, "manifest_checksum"), ErrorKind::Checksum, "model manifest checksum mismatch");
    const std::string blob = io::read_file(dir / "weights.bin");
    require(blob.size() == m.arch.parameter_count() * 4, ErrorKind::Truncated, "weight blob has the wrong size");
    require(io::hex32(io::crc32(blob)) == hash, ErrorKind::Checksum,
            "weight blob checksum mismatch");
    std::vector<float> w(m.arch.parameter_count());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = io::get_f32(blob, i * 4);
    }
    m.set_flat_weights(w);
    return m;
}

}  // namespace semidx

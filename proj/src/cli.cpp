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

#include "semidx/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "semidx/errors.hpp"
#include "semidx/io.hpp"
#include "semidx/report.hpp"
#include "semidx/rng.hpp"
#include "semidx/theory.hpp"

namespace semidx {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    require(j.is_object(), ErrorKind::Config, where + " must be a JSON object");
    std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : j.items()) {
        require(allowed.contains(key), ErrorKind::Config, "unknown config key '" + where + "." + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key)) {
        if (j.at(key).is_null()) {
            out.reset();
        } else {
            out = j.at(key).get<T>();
        }
    }
}

void read_synth(const json& j, SynthConfig& s) {
    reject_unknown(j, {"n_records", "feature_dim", "labels", "p_rare", "c_rare", "noise_sigma"}, "synth");
    read(j, "n_records", s.n_records);
    read(j, "feature_dim", s.feature_dim);
    read(j, "p_rare", s.p_rare);
    read(j, "c_rare", s.c_rare);
    read(j, "noise_sigma", s.noise_sigma);
    if (j.contains("labels")) {
        s.labels.clear();
        for (const auto& l : j.at("labels")) {
            reject_unknown(l, {"name", "mean_count", "max_count"}, "synth.labels[]");
            LabelSpec spec;
            read(l, "name", spec.name);
            read(l, "mean_count", spec.mean_count);
            read(l, "max_count", spec.max_count);
            s.labels.push_back(spec);
        }
    }
}

void read_embedding(const json& j, BuildConfig& b) {
    reject_unknown(j,
                   {"hidden_dim", "output_dim", "lr", "epochs", "batch", "margin", "train_budget", "n_triplets",
                    "triplet_training", "fpf_mining"},
                   "embedding");
    read(j, "hidden_dim", b.hidden_dim);
    read(j, "output_dim", b.output_dim);
    read(j, "lr", b.train.lr);
    read(j, "epochs", b.train.epochs);
    read(j, "batch", b.train.batch);
    read(j, "margin", b.train.margin);
    read(j, "train_budget", b.train_budget);
    read(j, "n_triplets", b.n_triplets);
    read(j, "triplet_training", b.triplet_training);
    read(j, "fpf_mining", b.fpf_mining);
}

void read_index(const json& j, BuildConfig& b) {
    reject_unknown(j, {"rep_count", "k", "random_fraction", "fpf_clustering"}, "index");
    read(j, "rep_count", b.rep_count);
    read(j, "k", b.k);
    read(j, "random_fraction", b.random_fraction);
    read(j, "fpf_clustering", b.fpf_clustering);
}

void read_queries(const json& j, ExperimentConfig& cfg) {
    reject_unknown(j, {"agg", "select", "limit"}, "queries");
    if (j.contains("agg")) {
        const auto& a = j.at("agg");
        reject_unknown(a, {"scorer", "epsilon", "delta", "min_samples", "lo", "hi", "beta_clamp", "max_samples"},
                       "queries.agg");
        read(a, "scorer", cfg.agg.scorer);
        read(a, "epsilon", cfg.agg.epsilon);
        read(a, "delta", cfg.agg.delta);
        read(a, "min_samples", cfg.agg.min_samples);
        read(a, "beta_clamp", cfg.agg.beta_clamp);
        read(a, "max_samples", cfg.agg.max_samples);
        if (a.contains("lo") || a.contains("hi")) {
            require(a.contains("lo") && a.contains("hi"), ErrorKind::Config, "queries.agg needs both lo and hi");
            cfg.agg_range = std::make_pair(a.at("lo").get<double>(), a.at("hi").get<double>());
        }
    }
    if (j.contains("select")) {
        const auto& s = j.at("select");
        reject_unknown(s, {"scorer", "recall_target", "delta", "budget", "kappa", "uniform_mix"}, "queries.select");
        read(s, "scorer", cfg.select.scorer);
        read(s, "recall_target", cfg.select.recall_target);
        read(s, "delta", cfg.select.delta);
        read(s, "budget", cfg.select.budget);
        read(s, "kappa", cfg.select.kappa);
        read(s, "uniform_mix", cfg.select.uniform_mix);
    }
    if (j.contains("limit")) {
        const auto& l = j.at("limit");
        reject_unknown(l, {"scorer", "threshold", "n_want", "scan_cap"}, "queries.limit");
        read(l, "scorer", cfg.limit.scorer);
        read(l, "threshold", cfg.limit.threshold);
        read(l, "n_want", cfg.limit.n_want);
        read(l, "scan_cap", cfg.limit.scan_cap);
    }
}

}  // namespace

void apply_config_json(ExperimentConfig& cfg, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
        reject_unknown(j,
                       {"seed", "out_dir", "synth", "embedding", "metric", "index", "propagate", "queries", "scorers",
                        "sweep", "verify"},
                       "config");
        if (j.contains("seed")) {
            cfg.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("out_dir")) {
            cfg.out_dir = j.at("out_dir").get<std::string>();
        }
        if (j.contains("synth")) {
            read_synth(j.at("synth"), cfg.synth);
        }
        if (j.contains("embedding")) {
            read_embedding(j.at("embedding"), cfg.build);
        }
        if (j.contains("metric")) {
            reject_unknown(j.at("metric"), {"cutoff", "radius"}, "metric");
            read(j.at("metric"), "cutoff", cfg.build.metric.cutoff);
            read(j.at("metric"), "radius", cfg.build.metric.radius);
        }
        if (j.contains("index")) {
            read_index(j.at("index"), cfg.build);
        }
        if (j.contains("propagate")) {
            reject_unknown(j.at("propagate"), {"epsilon"}, "propagate");
            read(j.at("propagate"), "epsilon", cfg.propagate_epsilon);
        }
        if (j.contains("queries")) {
            read_queries(j.at("queries"), cfg);
        }
        if (j.contains("scorers")) {
            for (const auto& s : j.at("scorers")) {
                reject_unknown(s, {"name", "primitive", "label", "threshold"}, "scorers[]");
                ScorerDecl d;
                read(s, "name", d.name);
                read(s, "primitive", d.primitive);
                read(s, "label", d.label);
                read(s, "threshold", d.threshold);
                cfg.scorers.push_back(d);
            }
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            reject_unknown(s, {"k", "rep_count", "train_budget", "output_dim"}, "sweep");
            read(s, "k", cfg.sweep.k);
            read(s, "rep_count", cfg.sweep.rep_count);
            read(s, "train_budget", cfg.sweep.train_budget);
            read(s, "output_dim", cfg.sweep.output_dim);
        }
        if (j.contains("verify")) {
            const auto& v = j.at("verify");
            reject_unknown(v, {"sample_size", "n_probe", "fpf_instances", "scorer", "lipschitz", "loss_bound"},
                           "verify");
            read(v, "sample_size", cfg.verify.sample_size);
            read(v, "n_probe", cfg.verify.n_probe);
            read(v, "fpf_instances", cfg.verify.fpf_instances);
            read(v, "scorer", cfg.verify.scorer);
            read(v, "lipschitz", cfg.verify.lipschitz);
            read(v, "loss_bound", cfg.verify.loss_bound);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("bad config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    ExperimentConfig cfg;
    apply_config_json(cfg, io::read_file(path));
    return cfg;
}

ScorerCatalog ExperimentConfig::catalog() const {
    ScorerCatalog cat = builtin_scorers(synth.label_names());
    for (const auto& d : scorers) {
        if (d.primitive != "mean_x") {
            const auto& labels = cat.labels();
            require(std::binary_search(labels.begin(), labels.end(), d.label), ErrorKind::Config,
                    "scorer '" + d.name + "' uses unknown label '" + d.label + "'");
        }
        cat.add(make_scorer(d.name, d.primitive, d.label, d.threshold));
    }
    return cat;
}

void ExperimentConfig::validate() const {
    synth.validate();
    build.validate();
    agg.validate();
    select.validate();
    limit.validate();
    require(propagate_epsilon >= 0.0, ErrorKind::Config, "propagate.epsilon must be >= 0");
    require(verify.sample_size >= 2 && verify.n_probe >= 1, ErrorKind::Config, "verify sizes must be positive");
    if (agg_range) {
        require(agg_range->first < agg_range->second, ErrorKind::Config, "queries.agg needs lo < hi");
    }
    auto cat = catalog();
    for (const auto& name : {agg.scorer, select.scorer, limit.scorer, verify.scorer}) {
        cat.get(name);
    }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Paths {
    std::filesystem::path root;

    std::filesystem::path dataset() const { return root / "dataset.jsonl"; }
    std::filesystem::path model() const { return root / "model"; }
    std::filesystem::path embeddings() const { return root / "embeddings"; }
    std::filesystem::path index() const { return root / "index"; }
    std::filesystem::path build_stats() const { return root / "build_stats.json"; }
    std::filesystem::path reports() const { return root / "reports"; }
    std::filesystem::path last_query() const { return root / "last_query.json"; }
    std::filesystem::path verification() const { return root / "verification.json"; }
};

/// Largest value a scorer can take on this generator.
double max_count(const SynthConfig& s, const std::string& label) {
    double hi = 0.0;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (s.labels[i].name == label) {
            hi = static_cast<double>(s.labels[i].max_count);
            if (i == 0) {
                hi = std::max(hi, static_cast<double>(s.c_rare));
            }
        }
    }
    return hi;
}

std::pair<double, double> scorer_range(const ExperimentConfig& cfg, const std::string& scorer) {
    if (cfg.agg_range) {
        return *cfg.agg_range;
    }
    for (const auto& d : cfg.scorers) {
        if (d.name == scorer) {
            if (d.threshold || d.primitive != "count") {
                return {0.0, 1.0};
            }
            return {0.0, std::max(1.0, max_count(cfg.synth, d.label))};
        }
    }
    if (scorer.rfind("count:", 0) == 0) {
        return {0.0, std::max(1.0, max_count(cfg.synth, scorer.substr(6)))};
    }
    return {0.0, 1.0};
}

Dataset load_dataset(const Paths& p) {
    require(std::filesystem::exists(p.dataset()), ErrorKind::Io,
            "no dataset at " + p.dataset().string() + " (run `gen` first)");
    return read_dataset_jsonl(p.dataset());
}

void write_embeddings(const Matrix& emb, const std::string& model_hash, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string blob = encode_embeddings(emb);
    ordered_json m{{"rows", emb.rows},
                   {"cols", emb.cols},
                   {"model_hash", model_hash},
                   {"checksum", io::hex32(io::crc32(blob))},
                   {"manifest_checksum", "00000000"}};
    io::write_file(dir / "embeddings.bin", blob);
    io::write_file(dir / "manifest.json", io::seal(m.dump(2) + "\n", "manifest_checksum"));
}

std::pair<Matrix, std::string> read_embeddings(const std::filesystem::path& dir) {
    const std::string text = io::read_file(dir / "manifest.json");
    json m;
    try {
        m = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, std::string("bad embeddings manifest: ") + e.what());
    }
    require(io::seal_matches(text, "manifest_checksum"), ErrorKind::Checksum, "embeddings manifest checksum mismatch");
    const std::string blob = io::read_file(dir / "embeddings.bin");
    const auto rows = m.at("rows").get<std::size_t>();
    const auto cols = m.at("cols").get<std::size_t>();
    require(blob.size() == rows * cols * 4, ErrorKind::Truncated, "embeddings.bin has the wrong size");
    require(io::hex32(io::crc32(blob)) == m.at("checksum").get<std::string>(), ErrorKind::Checksum,
            "embeddings.bin checksum mismatch");
    return {decode_embeddings(blob, rows, cols), m.at("model_hash").get<std::string>()};
}

void write_counts(const BuildCounts& c, const BuildConfig& b, std::size_t n, const std::filesystem::path& path) {
    ordered_json j{{"n_records", n},
                   {"output_dim", b.output_dim},
                   {"annotations", c.annotations},
                   {"train_steps", c.train_steps},
                   {"embeddings", c.embeddings},
                   {"distance_evaluations", c.distance_evaluations}};
    io::write_file(path, j.dump(2) + "\n");
}

std::string query_id(const std::string& type, const std::string& scorer, std::uint64_t seed,
                     const std::string& index_hash, const std::string& params) {
    const std::string key = type + "|" + scorer + "|" + std::to_string(seed) + "|" + index_hash + "|" + params;
    return type + "-" + io::hex32(io::crc32(key));
}

struct Ctx {
    ExperimentConfig cfg;
    Paths paths;
    bool timing = false;
};

int cmd_gen(Ctx& ctx) {
    ctx.cfg.synth.seed = ctx.cfg.seed;
    ctx.cfg.synth.validate();
    const Dataset d = generate_dataset(ctx.cfg.synth);
    std::filesystem::create_directories(ctx.paths.root);
    write_dataset_jsonl(d, ctx.paths.dataset());
    std::cout << "wrote " << d.size() << " records to " << ctx.paths.dataset().string() << "\n";
    return kExitOk;
}

int cmd_train(Ctx& ctx, bool stub) {
    const Dataset d = load_dataset(ctx.paths);
    BuildConfig b = ctx.cfg.build;
    b.seed = ctx.cfg.seed;
    b.triplet_training = !stub;
    Oracle oracle(d);
    BuildCounts counts;
    const EmbeddingStage stage = embed_stage(d, b, oracle, counts);
    save_model(stage.model, ctx.paths.model());
    std::cout << "model " << stage.model.hash() << " (" << to_string(stage.model.mode) << ")";
    if (!stub) {
        std::cout << ": " << stage.triplets.size() << " triplets, " << counts.annotations
                  << " annotations, final loss " << stage.model.final_loss;
    }
    std::cout << "\n";
    return kExitOk;
}

int cmd_embed(Ctx& ctx) {
    const Dataset d = load_dataset(ctx.paths);
    require(std::filesystem::exists(ctx.paths.model()), ErrorKind::Io,
            "no model at " + ctx.paths.model().string() + " (run `train-embed` first)");
    const EmbeddingModel model = load_model(ctx.paths.model());
    const Matrix emb = embed_all(model, d.feature_matrix());
    write_embeddings(emb, model.hash(), ctx.paths.embeddings());
    std::cout << "embedded " << emb.rows << " records into " << emb.cols << " dims\n";
    return kExitOk;
}

int cmd_build(Ctx& ctx) {
    const Dataset d = load_dataset(ctx.paths);
    BuildConfig b = ctx.cfg.build;
    b.seed = ctx.cfg.seed;
    Oracle oracle(d);
    BuildCounts counts;
    Matrix emb;
    std::string model_hash;
    if (std::filesystem::exists(ctx.paths.embeddings() / "manifest.json")) {
        std::tie(emb, model_hash) = read_embeddings(ctx.paths.embeddings());
        require(emb.rows == d.size(), ErrorKind::Integrity, "embeddings do not match the dataset");
    } else if (std::filesystem::exists(ctx.paths.model() / "manifest.json")) {
        const EmbeddingModel model = load_model(ctx.paths.model());
        emb = embed_all(model, d.feature_matrix());
        counts.embeddings += d.size();
        model_hash = model.hash();
    } else {
        EmbeddingStage stage = embed_stage(d, b, oracle, counts);
        save_model(stage.model, ctx.paths.model());
        emb = std::move(stage.embeddings);
        model_hash = stage.model.hash();
    }
    const Index index = index_stage(std::move(emb), b, oracle, model_hash, counts);
    save_index(index, ctx.paths.index());
    write_counts(counts, b, d.size(), ctx.paths.build_stats());
    std::cout << "index " << index.hash() << ": " << index.rep_ids.size() << " representatives, k=" << index.k
              << ", " << counts.annotations << " annotations\n";
    return kExitOk;
}

int finish_query(Ctx& ctx, const QueryReport& report, const std::string& id, const std::string& toggles) {
    std::filesystem::create_directories(ctx.paths.reports());
    const ReportRow row = to_row(report, id, toggles);
    append_report(std::span(&row, 1), ctx.paths.reports() / "report.csv");
    io::write_file(ctx.paths.reports() / (id + ".json"), report_detail_json(report, id, toggles, ctx.timing));
    ordered_json last{{"query_id", id}, {"annotated", report.annotated}};
    io::write_file(ctx.paths.last_query(), last.dump() + "\n");
    std::cout << id << " " << to_string(report.outcome) << ": estimate " << report.estimate << ", oracle_calls "
              << report.oracle_calls << "\n";
    if (report.outcome == Outcome::GuaranteeInfeasible || report.outcome == Outcome::GuaranteeDegenerate) {
        std::cerr << "guarantee not met: " << to_string(report.outcome) << "\n";
        return kExitGuarantee;
    }
    return kExitOk;
}

struct QueryFlags {
    std::optional<std::string> scorer;
    std::optional<std::size_t> k;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<std::size_t> budget;
    std::optional<double> recall;
    std::optional<double> threshold;
    std::optional<std::size_t> n_want;
    std::optional<std::size_t> scan_cap;
    std::optional<std::size_t> max_samples;
    std::string scores_out;
    bool uniform = false;
};

int cmd_query(Ctx& ctx, const std::string& type, const QueryFlags& f) {
    const Dataset d = load_dataset(ctx.paths);
    const Index index = load_index(ctx.paths.index());
    require(index.n_records == d.size(), ErrorKind::Integrity, "index does not match the dataset");
    auto& cfg = ctx.cfg;
    auto cat = cfg.catalog();
    const std::uint64_t seed = cfg.seed;
    Oracle oracle(d);
    std::ostringstream params;

    if (type == "agg") {
        AggSpec spec = cfg.agg;
        spec.scorer = f.scorer.value_or(spec.scorer);
        spec.epsilon = f.epsilon.value_or(spec.epsilon);
        spec.delta = f.delta.value_or(spec.delta);
        if (f.max_samples) {
            spec.max_samples = f.max_samples;
        }
        std::tie(spec.lo, spec.hi) = scorer_range(cfg, spec.scorer);
        spec.validate();
        const auto& scorer = cat.get(spec.scorer);
        const std::size_t k = f.k.value_or(index.k);
        const ProxyScores proxy = propagate_numeric(index, rep_scores(index, scorer), k, cfg.propagate_epsilon);
        if (!f.scores_out.empty()) {
            write_scores_csv(proxy, f.scores_out);
        }
        params << "k=" << k << ";eps=" << io::format_double(spec.epsilon) << ";delta="
               << io::format_double(spec.delta) << ";uniform=" << f.uniform;
        const QueryReport r = f.uniform ? agg_uniform_baseline(oracle, scorer, spec, seed)
                                        : agg_query(proxy, oracle, scorer, spec, seed);
        return finish_query(ctx, r, query_id(r.type, spec.scorer, seed, index.hash(), params.str()), "");
    }
    if (type == "select") {
        SelectSpec spec = cfg.select;
        spec.scorer = f.scorer.value_or(spec.scorer);
        spec.delta = f.delta.value_or(spec.delta);
        spec.budget = f.budget.value_or(spec.budget);
        spec.recall_target = f.recall.value_or(spec.recall_target);
        spec.validate();
        const auto& scorer = cat.get(spec.scorer);
        const std::size_t k = f.k.value_or(index.k);
        const ProxyScores proxy = propagate_numeric(index, rep_scores(index, scorer), k, cfg.propagate_epsilon);
        if (!f.scores_out.empty()) {
            write_scores_csv(proxy, f.scores_out);
        }
        params << "k=" << k << ";budget=" << spec.budget << ";recall=" << io::format_double(spec.recall_target)
               << ";delta=" << io::format_double(spec.delta);
        const QueryReport r = supg_recall_query(proxy, oracle, scorer, spec, seed);
        return finish_query(ctx, r, query_id(r.type, spec.scorer, seed, index.hash(), params.str()), "");
    }
    LimitSpec spec = cfg.limit;
    spec.scorer = f.scorer.value_or(spec.scorer);
    spec.threshold = f.threshold.value_or(spec.threshold);
    spec.n_want = f.n_want.value_or(spec.n_want);
    if (f.scan_cap) {
        spec.scan_cap = f.scan_cap;
    }
    spec.validate();
    const auto& scorer = cat.get(spec.scorer);
    const auto scores = rep_scores(index, scorer);
    const auto ordering = limit_ordering(index, scores);
    if (!f.scores_out.empty()) {
        write_scores_csv(propagate_numeric(index, scores, 1, cfg.propagate_epsilon), f.scores_out);
    }
    params << "threshold=" << io::format_double(spec.threshold) << ";n_want=" << spec.n_want
           << ";cap=" << spec.scan_cap.value_or(0);
    QueryReport r = limit_query(ordering, oracle, scorer, spec);
    r.seed = seed;
    return finish_query(ctx, r, query_id(r.type, spec.scorer, seed, index.hash(), params.str()), "");
}

int cmd_crack(Ctx& ctx) {
    const Dataset d = load_dataset(ctx.paths);
    const Index index = load_index(ctx.paths.index());
    require(std::filesystem::exists(ctx.paths.last_query()), ErrorKind::Io,
            "no last query at " + ctx.paths.last_query().string());
    json last;
    try {
        last = json::parse(io::read_file(ctx.paths.last_query()));
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, std::string("bad last_query.json: ") + e.what());
    }
    const auto ids = last.at("annotated").get<std::vector<std::size_t>>();
    // These annotations were paid for by the query that produced them.
    Oracle oracle(d);
    std::map<std::size_t, Annotation> annotations;
    for (std::size_t id : ids) {
        annotations.emplace(id, oracle.annotate(id));
    }
    const Index cracked = crack(index, ids, annotations);
    cracked.validate();
    const auto tmp = ctx.paths.root / "index.tmp";
    std::filesystem::remove_all(tmp);
    save_index(cracked, tmp);
    std::filesystem::remove_all(ctx.paths.index());
    std::filesystem::rename(tmp, ctx.paths.index());
    std::cout << "cracked " << last.at("query_id").get<std::string>() << ": " << index.rep_ids.size() << " -> "
              << cracked.rep_ids.size() << " representatives\n";
    return kExitOk;
}

int cmd_verify(Ctx& ctx) {
    const Dataset d = load_dataset(ctx.paths);
    const Index index = load_index(ctx.paths.index());
    const EmbeddingModel model = load_model(ctx.paths.model());
    auto& cfg = ctx.cfg;
    const auto& metric = cfg.build.metric;
    Oracle oracle(d);

    Rng rng = make_rng(cfg.seed, "verify.sample");
    const auto sample = sample_without_replacement(d.size(), std::min(cfg.verify.sample_size, d.size()), rng);
    std::vector<const Annotation*> annotations;
    for (std::size_t id : sample) {
        annotations.push_back(&oracle.peek_truth(id));
    }

    VerificationReport report;
    report.alpha_hat = population_triplet_loss(index.embeddings, sample, annotations, metric, model.margin,
                                               cfg.verify.n_probe, cfg.seed);
    report.lemma = verify_lemma_dist(index.embeddings, sample, annotations, metric, model.margin, report.alpha_hat);

    auto cat = cfg.catalog();
    const auto& scorer = cat.get(cfg.verify.scorer);
    const ProxyScores proxy = propagate_numeric(index, rep_scores(index, scorer), 1, cfg.propagate_epsilon);
    TheoryConfig tc;
    tc.radius = metric.radius;
    tc.margin = model.margin;
    tc.lipschitz = cfg.verify.lipschitz;
    double bound = 1.0;
    for (const auto& l : cfg.synth.labels) {
        bound = std::max(bound, max_count(cfg.synth, l.name));
    }
    tc.loss_bound = cfg.verify.loss_bound.value_or(bound);
    report.theorems = check_theorem_bound(proxy, scorer, tc, sample, annotations, metric, report.alpha_hat);

    report.fpf_instances = cfg.verify.fpf_instances;
    report.fpf_ratio_max = fpf_ratio_sweep(cfg.verify.fpf_instances, cfg.seed);

    report.cost_model.n_records = static_cast<double>(d.size());
    report.cost_model.dim = static_cast<double>(index.dim);
    report.cost_model.cost_target = 1.0;
    report.cost_model.cost_embed = 0.01;
    report.cost_model.cost_distance = 1e-6;
    if (std::filesystem::exists(ctx.paths.build_stats())) {
        const json s = json::parse(io::read_file(ctx.paths.build_stats()));
        report.counts.annotations = s.at("annotations").get<std::size_t>();
        report.counts.train_steps = s.at("train_steps").get<std::size_t>();
        report.counts.embeddings = s.at("embeddings").get<std::size_t>();
        report.counts.distance_evaluations = s.at("distance_evaluations").get<std::size_t>();
    }
    report.cost_model.budget = static_cast<double>(report.counts.annotations);
    report.cost_model.train_steps = static_cast<double>(report.counts.train_steps);
    report.cost = cost_estimate(report.cost_model);

    write_verification_report(report, ctx.paths.verification());
    std::cout << "lemma violations " << report.lemma.violations << ", alpha " << report.alpha_hat << ", thm1 "
              << (report.theorems.zero_loss.holds ? "holds" : "fails") << ", thm2 "
              << (report.theorems.lossy.holds ? "holds" : "fails") << ", fpf ratio " << report.fpf_ratio_max << "\n";
    return kExitOk;
}

ReportRow agg_row(const ExperimentConfig& cfg, const Dataset& d, const Index& index, const std::string& tag) {
    auto cat = cfg.catalog();
    AggSpec spec = cfg.agg;
    std::tie(spec.lo, spec.hi) = scorer_range(cfg, spec.scorer);
    const auto& scorer = cat.get(spec.scorer);
    const ProxyScores proxy =
        propagate_numeric(index, rep_scores(index, scorer), std::min(index.k, cfg.build.k), cfg.propagate_epsilon);
    Oracle oracle(d);
    const QueryReport r = agg_query(proxy, oracle, scorer, spec, cfg.seed);
    return to_row(r, query_id(r.type, spec.scorer, cfg.seed, index.hash(), tag), tag);
}

int cmd_sweep(Ctx& ctx) {
    const Dataset d = load_dataset(ctx.paths);
    ExperimentConfig cfg = ctx.cfg;
    cfg.build.seed = cfg.seed;
    std::vector<ReportRow> rows;
    BuildCounts counts;

    Oracle base_oracle(d);
    const EmbeddingStage base = embed_stage(d, cfg.build, base_oracle, counts);
    const std::string base_hash = base.model.hash();
    for (std::size_t k : cfg.sweep.k) {
        ExperimentConfig c = cfg;
        c.build.k = k;
        Oracle oracle(d);
        const Index index = index_stage(base.embeddings, c.build, oracle, base_hash, counts);
        rows.push_back(agg_row(c, d, index, "k=" + std::to_string(k)));
    }
    std::vector<std::size_t> rep_counts = cfg.sweep.rep_count;
    if (rep_counts.empty()) {
        const std::size_t r = cfg.build.representatives(d.size());
        rep_counts = {std::max<std::size_t>(cfg.build.k, r / 2), r, std::min(d.size(), 2 * r)};
    }
    for (std::size_t r : rep_counts) {
        ExperimentConfig c = cfg;
        c.build.rep_count = r;
        Oracle oracle(d);
        const Index index = index_stage(base.embeddings, c.build, oracle, base_hash, counts);
        rows.push_back(agg_row(c, d, index, "reps=" + std::to_string(r)));
    }
    for (std::size_t b : cfg.sweep.train_budget) {
        ExperimentConfig c = cfg;
        c.build.train_budget = std::min(b, d.size());
        Oracle oracle(d);
        const BuildResult built = build_all(d, c.build, oracle);
        rows.push_back(agg_row(c, d, built.index, "train_budget=" + std::to_string(c.build.train_budget)));
    }
    for (std::size_t dim : cfg.sweep.output_dim) {
        ExperimentConfig c = cfg;
        c.build.output_dim = dim;
        Oracle oracle(d);
        const BuildResult built = build_all(d, c.build, oracle);
        rows.push_back(agg_row(c, d, built.index, "output_dim=" + std::to_string(dim)));
    }
    const auto dir = ctx.paths.root / "sweep";
    std::filesystem::create_directories(dir);
    write_report(rows, dir / "report.csv");
    std::cout << "sweep: " << rows.size() << " rows in " << (dir / "report.csv").string() << "\n";
    return kExitOk;
}

int cmd_ablate(Ctx& ctx) {
    const Dataset d = load_dataset(ctx.paths);
    std::vector<ReportRow> rows;
    for (int mask = 7; mask >= 0; --mask) {
        ExperimentConfig c = ctx.cfg;
        c.build.seed = c.seed;
        c.build.triplet_training = (mask & 4) != 0;
        c.build.fpf_mining = (mask & 2) != 0;
        c.build.fpf_clustering = (mask & 1) != 0;
        Oracle oracle(d);
        const BuildResult built = build_all(d, c.build, oracle);
        rows.push_back(agg_row(c, d, built.index, c.build.toggle_tag()));
        std::cout << c.build.toggle_tag() << ": " << rows.back().oracle_calls << " oracle calls\n";
    }
    const auto dir = ctx.paths.root / "ablate";
    std::filesystem::create_directories(dir);
    write_report(rows, dir / "report.csv");
    return kExitOk;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Integrity:
        case ErrorKind::Version:
        case ErrorKind::Checksum:
        case ErrorKind::Truncated:
        case ErrorKind::Io:
            return kExitIo;
        default:
            return kExitConfig;
    }
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"semidx: semantic indexes for approximate queries over an expensive oracle"};
    app.name("semidx");
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool timing = false;
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--out", out_dir, "output directory (default $SEMIDX_OUT or ./semidx-out)");
    app.add_flag("--timing", timing, "include wall time in query detail files");

    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "root random seed"); };

    std::optional<std::size_t> n_records;
    std::optional<std::size_t> feature_dim;
    std::optional<double> p_rare;
    std::optional<double> noise;
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_seed(gen);
    gen->add_option("--n", n_records, "number of records");
    gen->add_option("--dim", feature_dim, "feature dimension");
    gen->add_option("--p-rare", p_rare, "rare-event probability");
    gen->add_option("--noise", noise, "feature noise sigma");

    std::optional<std::size_t> epochs;
    std::optional<std::size_t> train_budget;
    std::optional<std::string> mining;
    bool stub = false;
    auto* train = app.add_subcommand("train-embed", "train the embedding model");
    add_seed(train);
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--budget", train_budget, "records annotated for training");
    train->add_option("--mining", mining, "fpf or random")->check(CLI::IsMember({"fpf", "random"}));
    train->add_flag("--stub", stub, "write the untrained stub instead");

    auto* embed = app.add_subcommand("embed", "embed every record with the saved model");

    std::optional<std::size_t> reps;
    std::optional<std::size_t> k;
    std::optional<double> random_fraction;
    bool random_reps = false;
    auto* build = app.add_subcommand("build", "build the index");
    add_seed(build);
    build->add_option("--reps", reps, "representative count");
    build->add_option("--k", k, "neighbors stored per record");
    build->add_option("--random-fraction", random_fraction, "share of representatives drawn at random");
    build->add_flag("--random-reps", random_reps, "draw every representative at random");

    QueryFlags qf;
    auto* query = app.add_subcommand("query", "run a query against the index");
    query->require_subcommand(1);
    auto add_common = [&](CLI::App* sub) {
        add_seed(sub);
        sub->add_option("--scorer", qf.scorer, "scorer name");
        sub->add_option("--scores-out", qf.scores_out, "write proxy scores CSV");
    };
    auto* qagg = query->add_subcommand("agg", "approximate mean");
    add_common(qagg);
    qagg->add_option("--k", qf.k, "neighbors used for propagation");
    qagg->add_option("--epsilon", qf.epsilon, "absolute error target");
    qagg->add_option("--delta", qf.delta, "failure probability");
    qagg->add_option("--max-samples", qf.max_samples, "sample cap");
    qagg->add_flag("--uniform", qf.uniform, "plain uniform sampling baseline");
    auto* qsel = query->add_subcommand("select", "recall-target selection");
    add_common(qsel);
    qsel->add_option("--k", qf.k, "neighbors used for propagation");
    qsel->add_option("--budget", qf.budget, "oracle budget");
    qsel->add_option("--recall", qf.recall, "recall target");
    qsel->add_option("--delta", qf.delta, "failure probability");
    auto* qlim = query->add_subcommand("limit", "first matches in proxy order");
    add_common(qlim);
    qlim->add_option("--threshold", qf.threshold, "predicate: scorer >= threshold");
    qlim->add_option("--n-want", qf.n_want, "matches requested");
    qlim->add_option("--scan-cap", qf.scan_cap, "maximum records examined");

    bool from_last = false;
    auto* crack_cmd = app.add_subcommand("crack", "add annotated records to the index");
    crack_cmd->add_flag("--from-last-query", from_last, "use the records annotated by the last query")->required();

    std::optional<std::size_t> sample_size;
    auto* verify = app.add_subcommand("verify", "empirical checks of the loss-gap bounds");
    add_seed(verify);
    verify->add_option("--sample", sample_size, "evaluation sample size");

    auto* sweep = app.add_subcommand("sweep", "sensitivity grid");
    add_seed(sweep);
    auto* ablate = app.add_subcommand("ablate", "all 8 lesion combinations");
    add_seed(ablate);

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        Ctx ctx;
        ctx.timing = timing;
        if (!config_path.empty()) {
            ctx.cfg = load_config(config_path);
        }
        auto& cfg = ctx.cfg;
        if (seed) {
            cfg.seed = *seed;
        }
        if (!out_dir.empty()) {
            cfg.out_dir = out_dir;
        }
        if (cfg.out_dir.empty()) {
            const char* env = std::getenv("SEMIDX_OUT");
            cfg.out_dir = env && *env ? env : "semidx-out";
        }
        ctx.paths.root = cfg.out_dir;
        if (n_records) {
            cfg.synth.n_records = *n_records;
        }
        if (feature_dim) {
            cfg.synth.feature_dim = *feature_dim;
        }
        if (p_rare) {
            cfg.synth.p_rare = *p_rare;
        }
        if (noise) {
            cfg.synth.noise_sigma = *noise;
        }
        if (epochs) {
            cfg.build.train.epochs = *epochs;
        }
        if (train_budget) {
            cfg.build.train_budget = *train_budget;
        }
        if (mining) {
            cfg.build.fpf_mining = *mining == "fpf";
        }
        if (reps) {
            cfg.build.rep_count = *reps;
        }
        if (k) {
            cfg.build.k = *k;
        }
        if (random_fraction) {
            cfg.build.random_fraction = *random_fraction;
        }
        if (random_reps) {
            cfg.build.fpf_clustering = false;
        }
        if (sample_size) {
            cfg.verify.sample_size = *sample_size;
        }
        cfg.synth.seed = cfg.seed;
        cfg.build.seed = cfg.seed;
        cfg.validate();

        if (gen->parsed()) {
            return cmd_gen(ctx);
        }
        if (train->parsed()) {
            return cmd_train(ctx, stub);
        }
        if (embed->parsed()) {
            return cmd_embed(ctx);
        }
        if (build->parsed()) {
            return cmd_build(ctx);
        }
        if (query->parsed()) {
            const std::string type = qagg->parsed() ? "agg" : qsel->parsed() ? "select" : "limit";
            return cmd_query(ctx, type, qf);
        }
        if (crack_cmd->parsed()) {
            return cmd_crack(ctx);
        }
        if (verify->parsed()) {
            return cmd_verify(ctx);
        }
        if (sweep->parsed()) {
            return cmd_sweep(ctx);
        }
        if (ablate->parsed()) {
            return cmd_ablate(ctx);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "error: integrity error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: I/O error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_command(args);
}

}  // namespace semidx

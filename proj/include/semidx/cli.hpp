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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semidx/pipeline.hpp"
#include "semidx/propagate.hpp"
#include "semidx/queryproc.hpp"
#include "semidx/synth.hpp"

namespace semidx {

/// Custom scorer declared in a config file.
struct ScorerDecl {
    std::string name;
    std::string primitive;
    std::string label;
    std::optional<double> threshold;
};

struct SweepGrid {
    std::vector<std::size_t> k = {1, 3, 7, 15};
    std::vector<std::size_t> rep_count;  // empty: 0.5x, 1x, 2x the default
    std::vector<std::size_t> train_budget = {500, 1500, 3000};
    std::vector<std::size_t> output_dim = {32, 64, 128};
};

struct VerifyParams {
    std::size_t sample_size = 2000;
    std::size_t n_probe = 20000;
    std::size_t fpf_instances = 500;
    std::string scorer = "count:car";
    double lipschitz = 20.0;
    std::optional<double> loss_bound;  // default: largest possible count
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    SynthConfig synth;
    BuildConfig build;
    double propagate_epsilon = kDefaultEpsilon;
    AggSpec agg;
    std::optional<std::pair<double, double>> agg_range;  // default: derived from the scorer
    SelectSpec select;
    LimitSpec limit;
    std::vector<ScorerDecl> scorers;
    SweepGrid sweep;
    VerifyParams verify;

    /// Checks ranges and that every referenced scorer resolves.
    void validate() const;
    ScorerCatalog catalog() const;
};

/// Reads a JSON config over the defaults. Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_json(ExperimentConfig& cfg, const std::string& json_text);

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitGuarantee = 3,
    kExitIo = 4,
};

/// Entry point shared by the executable and the tests. Output directory
/// defaults to $SEMIDX_OUT, then ./semidx-out.
int run_command(const std::vector<std::string>& args);
int run_command(int argc, char** argv);

}  // namespace semidx

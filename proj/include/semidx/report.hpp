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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semidx/queryproc.hpp"

namespace semidx {

/// One line of a query report CSV.
struct ReportRow {
    std::string query_id;
    std::string type;
    std::string scorer;
    double estimate = 0.0;
    std::optional<double> truth;
    std::optional<double> error;
    std::size_t oracle_calls = 0;
    std::optional<double> rho2;
    std::uint64_t seed = 0;
    std::string toggles;

    bool operator==(const ReportRow&) const = default;
};

inline constexpr const char* kReportHeader = "query_id,type,scorer,estimate,truth,error,oracle_calls,rho2,seed,toggles";

ReportRow to_row(const QueryReport& report, std::string query_id, std::string toggles);

/// Writes a fresh file: header plus rows.
void write_report(std::span<const ReportRow> rows, const std::filesystem::path& path);

/// Appends rows, writing the header first if the file is missing or empty.
void append_report(std::span<const ReportRow> rows, const std::filesystem::path& path);

std::vector<ReportRow> read_report(const std::filesystem::path& path);

/// Full per-query detail. Wall time is included only when `timing` is set so
/// that reports stay byte-reproducible by default.
std::string report_detail_json(const QueryReport& report, const std::string& query_id, const std::string& toggles,
                               bool timing);

}  // namespace semidx

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

#include "semidx/report.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "semidx/errors.hpp"
#include "semidx/io.hpp"

namespace semidx {

namespace {

std::string optional_field(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return io::parse_double(s);
}

void check_field(const std::string& s) {
    require(s.find_first_of(",\n\r\"") == std::string::npos, ErrorKind::Config,
            "report field '" + s + "' contains a separator");
}

std::string format_rows(std::span<const ReportRow> rows) {
    std::string out;
    for (const auto& r : rows) {
        check_field(r.query_id);
        check_field(r.type);
        check_field(r.scorer);
        check_field(r.toggles);
        out += r.query_id + ',' + r.type + ',' + r.scorer + ',' + io::format_double(r.estimate) + ',' +
               optional_field(r.truth) + ',' + optional_field(r.error) + ',' + std::to_string(r.oracle_calls) + ',' +
               optional_field(r.rho2) + ',' + std::to_string(r.seed) + ',' + r.toggles + '\n';
    }
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

ReportRow to_row(const QueryReport& report, std::string query_id, std::string toggles) {
    ReportRow row;
    row.query_id = std::move(query_id);
    row.type = report.type;
    row.scorer = report.scorer;
    row.estimate = report.estimate;
    row.truth = report.truth;
    row.error = report.error;
    row.oracle_calls = report.oracle_calls;
    row.rho2 = report.rho2;
    row.seed = report.seed;
    row.toggles = std::move(toggles);
    return row;
}

void write_report(std::span<const ReportRow> rows, const std::filesystem::path& path) {
    io::write_file(path, std::string(kReportHeader) + "\n" + format_rows(rows));
}

void append_report(std::span<const ReportRow> rows, const std::filesystem::path& path) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    const std::string body = (fresh ? std::string(kReportHeader) + "\n" : std::string()) + format_rows(rows);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

std::vector<ReportRow> read_report(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path));
    std::string line;
    require(std::getline(in, line) && line == kReportHeader, ErrorKind::Integrity,
            "unexpected report header in " + path.string());
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        const auto f = split(line);
        require(f.size() == 10, ErrorKind::Integrity, "report row has " + std::to_string(f.size()) + " fields");
        ReportRow r;
        r.query_id = f[0];
        r.type = f[1];
        r.scorer = f[2];
        r.estimate = io::parse_double(f[3]);
        r.truth = parse_optional(f[4]);
        r.error = parse_optional(f[5]);
        r.oracle_calls = std::stoull(f[6]);
        r.rho2 = parse_optional(f[7]);
        r.seed = std::stoull(f[8]);
        r.toggles = f[9];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string report_detail_json(const QueryReport& r, const std::string& query_id, const std::string& toggles,
                               bool timing) {
    using nlohmann::ordered_json;
    auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json j;
    j["query_id"] = query_id;
    j["type"] = r.type;
    j["scorer"] = r.scorer;
    j["seed"] = r.seed;
    j["outcome"] = to_string(r.outcome);
    j["toggles"] = toggles;
    j["estimate"] = r.estimate;
    j["truth"] = opt(r.truth);
    j["error"] = opt(r.error);
    j["rho2"] = opt(r.rho2);
    j["oracle_calls"] = r.oracle_calls;
    j["samples"] = r.samples;
    if (r.type == "agg" || r.type == "agg-uniform") {
        j["half_width"] = r.half_width;
        j["beta"] = r.beta;
    }
    if (r.type == "select") {
        j["threshold"] = r.threshold;
        j["recall"] = opt(r.recall);
        j["false_positive_rate"] = opt(r.false_positive_rate);
        j["selected_count"] = r.selected.size();
    }
    if (r.type == "limit") {
        j["found"] = r.found;
    }
    j["annotated"] = r.annotated;
    if (timing) {
        j["wall_seconds"] = r.wall_seconds;
    }
    return j.dump(2) + "\n";
}

}  // namespace semidx

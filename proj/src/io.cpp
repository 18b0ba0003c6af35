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

#include "semidx/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

#include "semidx/errors.hpp"

namespace semidx::io {

std::uint32_t crc32(std::string_view bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
    std::size_t left = bytes.size();
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = ::crc32(crc, data, chunk);
        data += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

namespace {

constexpr std::string_view kZeroChecksum = "00000000";

/// Offset of the 8 hex digits after `"<key>": "`, or npos unless there is exactly one such entry.
std::size_t seal_offset(std::string_view text, std::string_view key) {
    const std::string marker = "\"" + std::string(key) + "\": \"";
    const auto first = text.find(marker);
    if (first == std::string_view::npos || text.find(marker, first + 1) != std::string_view::npos) {
        return std::string_view::npos;
    }
    const auto at = first + marker.size();
    if (at + kZeroChecksum.size() + 1 > text.size() || text[at + kZeroChecksum.size()] != '"') {
        return std::string_view::npos;
    }
    return at;
}

}  // namespace

std::string seal(std::string text, std::string_view key) {
    const auto at = seal_offset(text, key);
    require(at != std::string::npos, ErrorKind::Contract, "no unique checksum entry '" + std::string(key) + "'");
    text.replace(at, kZeroChecksum.size(), kZeroChecksum);
    text.replace(at, kZeroChecksum.size(), hex32(crc32(text)));
    return text;
}

bool seal_matches(std::string_view text, std::string_view key) {
    const auto at = seal_offset(text, key);
    if (at == std::string_view::npos) {
        return false;
    }
    std::string zeroed(text);
    zeroed.replace(at, kZeroChecksum.size(), kZeroChecksum);
    return hex32(crc32(zeroed)) == text.substr(at, kZeroChecksum.size());
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    require(res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorKind::Integrity,
            "not a number: '" + std::string(text) + "'");
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace semidx::io

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

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace semidx::io {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
}

inline void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t get_u32(std::string_view buf, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset + i])) << (8 * i);
    }
    return v;
}

inline float get_f32(std::string_view buf, std::size_t offset) { return std::bit_cast<float>(get_u32(buf, offset)); }

std::uint32_t crc32(std::string_view bytes);
std::string hex32(std::uint32_t v);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Self-checksummed text files. The text holds exactly one `"<key>": "<hex>"`
/// entry; the stored value is crc32 of the whole text with that value zeroed,
/// so any byte change outside it is detected.
std::string seal(std::string text, std::string_view key);
bool seal_matches(std::string_view text, std::string_view key);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace semidx::io

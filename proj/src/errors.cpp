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

#include "semidx/errors.hpp"

namespace semidx {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "configuration error";
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::Lookup: return "lookup error";
        case ErrorKind::DegeneratePool: return "degenerate pool";
        case ErrorKind::TrainingDiverged: return "training diverged";
        case ErrorKind::Integrity: return "integrity error";
        case ErrorKind::Version: return "version mismatch";
        case ErrorKind::Checksum: return "checksum failure";
        case ErrorKind::Truncated: return "truncated file";
        case ErrorKind::Io: return "I/O error";
        case ErrorKind::Contract: return "contract error";
        case ErrorKind::Size: return "size error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace semidx

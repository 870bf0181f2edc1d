// Copyright 2026 The Phasegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Model container.
//
//   "PHGM" | u32 version | u64 header length | JSON header |
//   f64 tensors in header order | u32 CRC32 of everything before it
//
// All integers and floats little-endian. The header never carries training
// rows; kModelFields lists everything a file may contain.

#ifndef PHASEGEN_MODEL_IO_H_
#define PHASEGEN_MODEL_IO_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "phasegen/pipeline.h"

namespace phasegen {

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline constexpr std::array<std::string_view, 10> kModelFields = {
    "format", "schema", "config", "privacy", "noise",
    "budget", "training_rows", "seed", "architecture", "tensors"};

std::string serialize_model(const GenerativeModel& model);
GenerativeModel deserialize_model(std::string_view bytes);

// Writes to path + ".tmp" and renames, so a failed save leaves no partial
// model behind.
void save_model(const GenerativeModel& model, const std::string& path);
GenerativeModel load_model(const std::string& path);

// Header only, for inspection without decoding tensors.
nlohmann::json read_model_header(std::string_view bytes);

}  // namespace phasegen

#endif  // PHASEGEN_MODEL_IO_H_

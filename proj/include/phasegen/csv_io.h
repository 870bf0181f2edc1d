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

// CSV tables under an explicit schema sidecar. Types are never inferred.

#ifndef PHASEGEN_CSV_IO_H_
#define PHASEGEN_CSV_IO_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "phasegen/schema.h"

namespace phasegen {

struct IngestLog {
  std::int64_t rows = 0;
  // Continuous cells outside the schema range, clamped into it.
  std::int64_t clamped_cells = 0;
  // Rows whose encoder-domain norm exceeded 1 and were clipped.
  std::int64_t clipped_rows = 0;
  std::vector<std::int64_t> clipped_row_indices;  // 1-based data rows

  nlohmann::json to_json() const;
};

struct IngestResult {
  DatasetTable table;
  IngestLog log;
};

// Splits one CSV record; double quotes group and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line);

// Header must name every schema column (any order; extra columns are
// ignored). Errors are FormatError naming row and column.
IngestResult read_csv(std::istream& in, const ColumnSchema& schema);
IngestResult load_csv(const std::string& path, const ColumnSchema& schema);

// Writes raw-domain values: continuous columns unscaled, one-hot groups as
// their category (argmax).
void write_csv(const DatasetTable& table, std::ostream& out);
void save_csv(const DatasetTable& table, const std::string& path);

ColumnSchema load_schema(const std::string& path);
nlohmann::json load_json(const std::string& path);
// Temp-then-rename text write.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace phasegen

#endif  // PHASEGEN_CSV_IO_H_

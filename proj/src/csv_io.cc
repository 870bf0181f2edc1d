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

#include "phasegen/csv_io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "phasegen/errors.h"

namespace phasegen {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_location(std::int64_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

nlohmann::json IngestLog::to_json() const {
  return {{"rows", rows},
          {"clamped_cells", clamped_cells},
          {"clipped_rows", clipped_rows},
          {"clipped_row_indices", clipped_row_indices}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quote");
  out.push_back(trim(cur));
  return out;
}

IngestResult read_csv(std::istream& in, const ColumnSchema& schema) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw FormatError("csv: empty file");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position[header[i]] = i;
  std::vector<std::size_t> source(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto it = position.find(schema.columns()[c].name);
    if (it == position.end()) {
      throw FormatError("csv: missing column '" + schema.columns()[c].name + "'");
    }
    source[c] = it->second;
  }

  IngestResult result{{schema, {}}, {}};
  std::vector<Eigen::RowVectorXd> rows;
  std::int64_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw FormatError("csv: row " + std::to_string(row_no) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(schema.width());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const ColumnSpec& col = schema.columns()[c];
      const std::string& cell = cells[source[c]];
      if (col.one_hot()) {
        try {
          row[schema.offset(c) + static_cast<Eigen::Index>(schema.category_index(c, cell))] = 1.0;
        } catch (const FormatError& e) {
          throw FormatError("csv: " + cell_location(row_no, col.name) + ": " + e.what());
        }
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw FormatError("csv: " + cell_location(row_no, col.name) + ": cannot parse '" +
                          cell + "' as a number");
      }
      if (v < col.min || v > col.max) ++result.log.clamped_cells;
      row[schema.offset(c)] = schema.scale(c, v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("csv: empty file (header only)");

  Eigen::MatrixXd& values = result.table.values;
  values.resize(static_cast<Eigen::Index>(rows.size()), schema.width());
  for (std::size_t i = 0; i < rows.size(); ++i) values.row(static_cast<Eigen::Index>(i)) = rows[i];
  result.log.rows = static_cast<std::int64_t>(rows.size());

  const Eigen::VectorXd center = schema.encoder_center();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if ((values.row(i) - center.transpose()).norm() * schema.encoder_scale() > 1.0) {
      result.log.clipped_row_indices.push_back(i + 1);
    }
  }
  result.log.clipped_rows = static_cast<std::int64_t>(result.log.clipped_row_indices.size());
  return result;
}

IngestResult load_csv(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_csv(in, schema);
}

void write_csv(const DatasetTable& table, std::ostream& out) {
  const ColumnSchema& schema = table.schema;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    out << (c ? "," : "") << quote(schema.columns()[c].name);
  }
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c) out << ',';
      const ColumnSpec& col = schema.columns()[c];
      if (col.one_hot()) {
        out << quote(col.categories[group_argmax(schema, c, table.values.row(i))]);
      } else {
        const double v = schema.unscale(c, table.values(i, schema.offset(c)));
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, res.ptr - buf);
      }
    }
    out << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp + " for writing");
    out << text;
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw FormatError("failed writing " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw FormatError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

void save_csv(const DatasetTable& table, const std::string& path) {
  std::ostringstream ss;
  write_csv(table, ss);
  write_text_file(path, ss.str());
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

ColumnSchema load_schema(const std::string& path) { return ColumnSchema::from_json(load_json(path)); }

}  // namespace phasegen

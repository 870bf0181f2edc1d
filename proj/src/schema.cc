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

#include "phasegen/schema.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"

namespace phasegen {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous:
      return "continuous";
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kLabel:
      return "label";
  }
  return "continuous";
}

ColumnSchema::ColumnSchema(std::vector<ColumnSpec> columns, double encoder_scale)
    : columns_(std::move(columns)), encoder_scale_(encoder_scale) {
  if (columns_.empty()) throw FormatError("schema: no columns");
  if (!(encoder_scale_ > 0.0) || !std::isfinite(encoder_scale_)) {
    throw FormatError("schema: encoder_scale must be a positive number");
  }
  std::set<std::string> names;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const ColumnSpec& col = columns_[c];
    if (col.name.empty()) throw FormatError("schema: column without a name");
    if (!names.insert(col.name).second) {
      throw FormatError("schema: duplicate column '" + col.name + "'");
    }
    if (col.kind == ColumnKind::kContinuous) {
      if (!(col.max > col.min) || !std::isfinite(col.min) || !std::isfinite(col.max)) {
        throw FormatError("schema: column '" + col.name + "' needs finite min < max");
      }
    } else {
      if (col.categories.size() < 2) {
        throw FormatError("schema: column '" + col.name + "' needs at least 2 categories");
      }
      std::set<std::string> cats(col.categories.begin(), col.categories.end());
      if (cats.size() != col.categories.size()) {
        throw FormatError("schema: column '" + col.name + "' repeats a category");
      }
    }
    if (col.kind == ColumnKind::kLabel) {
      if (label_) throw FormatError("schema: more than one label column");
      label_ = c;
    }
    offsets_.push_back(width_);
    width_ += arity(c);
  }
}

Eigen::Index ColumnSchema::arity(std::size_t column) const {
  const ColumnSpec& col = columns_.at(column);
  return col.one_hot() ? static_cast<Eigen::Index>(col.categories.size()) : 1;
}

Eigen::VectorXd ColumnSchema::encoder_center() const {
  Eigen::VectorXd center(width_);
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Eigen::Index a = arity(c);
    center.segment(offsets_[c], a).setConstant(columns_[c].one_hot() ? 1.0 / a : 0.5);
  }
  return center;
}

double ColumnSchema::scale(std::size_t column, double raw) const {
  const ColumnSpec& col = columns_.at(column);
  return std::clamp((raw - col.min) / (col.max - col.min), 0.0, 1.0);
}

double ColumnSchema::unscale(std::size_t column, double scaled) const {
  const ColumnSpec& col = columns_.at(column);
  return col.min + scaled * (col.max - col.min);
}

std::size_t ColumnSchema::category_index(std::size_t column, const std::string& value) const {
  const ColumnSpec& col = columns_.at(column);
  auto it = std::find(col.categories.begin(), col.categories.end(), value);
  if (it == col.categories.end()) {
    throw FormatError("unknown category '" + value + "' in column '" + col.name + "'");
  }
  return static_cast<std::size_t>(it - col.categories.begin());
}

nlohmann::json ColumnSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const ColumnSpec& col : columns_) {
    nlohmann::json j{{"name", col.name}, {"kind", to_string(col.kind)}};
    if (col.one_hot()) {
      j["categories"] = col.categories;
    } else {
      j["min"] = col.min;
      j["max"] = col.max;
    }
    cols.push_back(std::move(j));
  }
  return {{"columns", cols}, {"encoder_scale", encoder_scale_}};
}

ColumnSchema ColumnSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<ColumnSpec> columns;
    for (const auto& c : j.at("columns")) {
      ColumnSpec col;
      col.name = c.at("name").get<std::string>();
      const std::string kind = c.at("kind").get<std::string>();
      if (kind == "continuous") {
        col.kind = ColumnKind::kContinuous;
        col.min = c.at("min").get<double>();
        col.max = c.at("max").get<double>();
      } else if (kind == "categorical" || kind == "label") {
        col.kind = kind == "label" ? ColumnKind::kLabel : ColumnKind::kCategorical;
        col.categories = c.at("categories").get<std::vector<std::string>>();
      } else {
        throw FormatError("schema: unknown column kind '" + kind + "'");
      }
      columns.push_back(std::move(col));
    }
    return ColumnSchema(std::move(columns), j.value("encoder_scale", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("schema: ") + e.what());
  }
}

bool ColumnSchema::operator==(const ColumnSchema& other) const {
  return to_json() == other.to_json();
}

std::size_t group_argmax(const ColumnSchema& schema, std::size_t column,
                         const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index arg = 0;
  row.segment(schema.offset(column), schema.arity(column)).maxCoeff(&arg);
  return static_cast<std::size_t>(arg);
}

std::vector<std::size_t> DatasetTable::labels() const {
  const auto label = schema.label_column();
  if (!label) throw DomainError("dataset: schema has no label column");
  std::vector<std::size_t> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = group_argmax(schema, *label, values.row(i));
  }
  return out;
}

Eigen::MatrixXd DatasetTable::features() const {
  const auto label = schema.label_column();
  if (!label) return values;
  const Eigen::Index off = schema.offset(*label);
  const Eigen::Index a = schema.arity(*label);
  Eigen::MatrixXd out(values.rows(), values.cols() - a);
  out.leftCols(off) = values.leftCols(off);
  out.rightCols(values.cols() - off - a) = values.rightCols(values.cols() - off - a);
  return out;
}

DatasetTable DatasetTable::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 0 || begin + count > values.rows()) {
    throw DomainError("dataset: slice out of range");
  }
  return {schema, values.middleRows(begin, count)};
}

EncoderView encoder_view(const ColumnSchema& schema, const Eigen::MatrixXd& values) {
  if (values.cols() != schema.width()) throw DomainError("encoder_view: width mismatch");
  EncoderView view;
  view.rows = (values.rowwise() - schema.encoder_center().transpose()) * schema.encoder_scale();
  for (Eigen::Index i = 0; i < view.rows.rows(); ++i) {
    const double f = clip_factor(view.rows.row(i).norm(), 1.0);
    if (f < 1.0) {
      view.rows.row(i) *= f;
      ++view.clipped;
    }
  }
  return view;
}

}  // namespace phasegen

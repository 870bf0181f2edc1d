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

// Column schema and the encoded table the models train on.
//
// Encoded ("model") domain: each continuous column is min-max scaled to
// [0, 1]; each categorical or label column expands to a one-hot group. The
// decoder reconstructs rows in this domain.
//
// Encoder domain: the model-domain row minus a public per-column center
// (0.5 for continuous, 1/arity inside one-hot groups), times encoder_scale,
// then L2-clipped to norm 1. PCA and EM see only encoder-domain rows.

#ifndef PHASEGEN_SCHEMA_H_
#define PHASEGEN_SCHEMA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace phasegen {

enum class ColumnKind { kContinuous, kCategorical, kLabel };

std::string to_string(ColumnKind kind);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Continuous only: public scaling range.
  double min = 0.0;
  double max = 1.0;
  // Categorical and label only.
  std::vector<std::string> categories;

  bool one_hot() const { return kind != ColumnKind::kContinuous; }
};

class ColumnSchema {
 public:
  ColumnSchema() = default;
  explicit ColumnSchema(std::vector<ColumnSpec> columns, double encoder_scale = 1.0);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  // Encoded width.
  Eigen::Index width() const { return width_; }
  Eigen::Index offset(std::size_t column) const { return offsets_[column]; }
  Eigen::Index arity(std::size_t column) const;
  std::optional<std::size_t> label_column() const { return label_; }
  double encoder_scale() const { return encoder_scale_; }
  Eigen::VectorXd encoder_center() const;

  // Raw value -> [0, 1]; out-of-range values are clamped.
  double scale(std::size_t column, double raw) const;
  double unscale(std::size_t column, double scaled) const;
  // Throws FormatError naming the value when it is not a known category.
  std::size_t category_index(std::size_t column, const std::string& value) const;

  nlohmann::json to_json() const;
  static ColumnSchema from_json(const nlohmann::json& j);

  bool operator==(const ColumnSchema& other) const;

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index width_ = 0;
  std::optional<std::size_t> label_;
  double encoder_scale_ = 1.0;
};

struct DatasetTable {
  ColumnSchema schema;
  Eigen::MatrixXd values;  // rows × schema.width(), model domain

  Eigen::Index rows() const { return values.rows(); }
  // Class index per row (argmax of the label group). Throws if no label.
  std::vector<std::size_t> labels() const;
  // Encoded columns excluding the label group.
  Eigen::MatrixXd features() const;
  DatasetTable slice(Eigen::Index begin, Eigen::Index count) const;
};

struct EncoderView {
  Eigen::MatrixXd rows;
  std::int64_t clipped = 0;  // rows whose norm exceeded 1 before clipping
};

EncoderView encoder_view(const ColumnSchema& schema, const Eigen::MatrixXd& values);

// Index of the largest entry of each one-hot group, per row.
std::size_t group_argmax(const ColumnSchema& schema, std::size_t column,
                         const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace phasegen

#endif  // PHASEGEN_SCHEMA_H_

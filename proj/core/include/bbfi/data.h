/*
 * Copyright 2026 The bbfi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BBFI_DATA_H_
#define BBFI_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bbfi {

// Column type. Categorical cells hold the index of their level.
class FeatureKind {
 public:
  static FeatureKind Numeric() { return FeatureKind(); }
  static FeatureKind Categorical(std::vector<std::string> levels);

  bool is_categorical() const { return categorical_; }
  bool is_numeric() const { return !categorical_; }
  const std::vector<std::string>& levels() const { return levels_; }
  std::size_t num_levels() const { return levels_.size(); }
  // Index of `level`; throws if absent.
  std::size_t LevelIndex(std::string_view level) const;

  friend bool operator==(const FeatureKind&, const FeatureKind&) = default;

 private:
  FeatureKind() = default;
  bool categorical_ = false;
  std::vector<std::string> levels_;
};

// Dense row-major matrix of cell values.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Feature names and kinds; shared between datasets and fitted models.
struct Schema {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;

  std::size_t size() const { return names.size(); }
  // Column index of `name`; throws naming the unknown feature.
  std::size_t IndexOf(std::string_view name) const;
  // Throws unless every cell is valid for its column (finite numbers, level
  // indices in range).
  void ValidateRow(std::span<const double> row) const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

// Immutable tabular data with a numeric target.
class Dataset {
 public:
  Dataset(Schema schema, Matrix x, std::vector<double> y,
          std::string target_name = "y");

  std::size_t n() const { return x_.rows(); }
  std::size_t p() const { return x_.cols(); }

  const Schema& schema() const { return schema_; }
  const std::vector<std::string>& feature_names() const { return schema_.names; }
  const std::vector<FeatureKind>& kinds() const { return schema_.kinds; }
  const FeatureKind& kind(std::size_t j) const { return schema_.kinds[j]; }
  const Matrix& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  const std::string& target_name() const { return target_name_; }

  double at(std::size_t i, std::size_t j) const { return x_(i, j); }
  std::size_t FeatureIndex(std::string_view name) const { return schema_.IndexOf(name); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Schema schema_;
  Matrix x_;
  std::vector<double> y_;
  std::string target_name_;
};

// Sorted set of column indices. The complement is computed on demand.
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(std::vector<std::size_t> indices);
  static FeatureSet All(std::size_t p);
  static FeatureSet FromMask(std::uint64_t mask);

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(std::size_t j) const;
  std::size_t front() const { return indices_.front(); }

  FeatureSet With(std::size_t j) const;
  FeatureSet Complement(std::size_t p) const;
  // Bitmask representation; requires every index < 64.
  std::uint64_t Mask() const;
  // Throws unless every index is < p.
  void CheckWithin(std::size_t p) const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

// Resolves comma-separated feature names against a schema.
FeatureSet ParseFeatureSet(const Schema& schema, std::string_view names);

struct CsvOptions {
  std::string target;
  // Columns forced to categorical regardless of content.
  std::vector<std::string> categorical;
  // Fixed level order per column (forces categorical); cells must use one of
  // these levels.
  std::map<std::string, std::vector<std::string>> levels;
};

// Reads an RFC-4180 CSV with a header row. Columns whose cells all parse as
// finite numbers are numeric; the rest are categorical with levels in order
// of first appearance.
Dataset ReadCsv(std::istream& in, const CsvOptions& options);
Dataset LoadCsv(const std::filesystem::path& path, const CsvOptions& options);

// Writes features then target, numbers at 17 significant digits.
void WriteCsv(const Dataset& d, std::ostream& out);
void SaveCsv(const Dataset& d, const std::filesystem::path& path);

// Shuffles rows with `seed` and returns (first floor(fraction * n) rows,
// remaining rows); each part keeps the original row order.
std::pair<Dataset, Dataset> Split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed);

// Rows with mask[i] true, in original order. The schema is unchanged.
Dataset SubsetRows(const Dataset& d, const std::vector<bool>& mask);

// Re-expresses `d` in `schema`: columns are matched by name and categorical
// level indices remapped to the schema's level order. Fails on missing
// columns, kind mismatches and unknown levels.
Dataset ConformToSchema(const Dataset& d, const Schema& schema);

}  // namespace bbfi

#endif  // BBFI_DATA_H_

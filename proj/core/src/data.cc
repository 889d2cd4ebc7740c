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

#include "bbfi/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "bbfi/error.h"
#include "bbfi/random.h"
#include "bbfi/table_io.h"

namespace bbfi {
namespace {

// True when `text` is a number literal that is NaN or infinite.
bool IsNonFiniteLiteral(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && (text.front() == '+')) text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ptr == text.data() + text.size() && !text.empty() &&
         (ec == std::errc::result_out_of_range || (ec == std::errc() && !std::isfinite(value)));
}

std::string CellName(std::size_t data_row, std::size_t line, const std::string& column) {
  return "data row " + std::to_string(data_row) + " (line " + std::to_string(line) +
         "), column '" + column + "'";
}

}  // namespace

FeatureKind FeatureKind::Categorical(std::vector<std::string> levels) {
  std::set<std::string> seen;
  for (const auto& level : levels) {
    if (level.empty()) throw Error("categorical level must be non-empty");
    if (!seen.insert(level).second) throw Error("duplicate categorical level '" + level + "'");
  }
  FeatureKind kind;
  kind.categorical_ = true;
  kind.levels_ = std::move(levels);
  return kind;
}

std::size_t FeatureKind::LevelIndex(std::string_view level) const {
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    if (levels_[l] == level) return l;
  }
  throw Error("unknown level '" + std::string(level) + "'");
}

std::size_t Schema::IndexOf(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) return j;
  }
  throw Error("unknown feature '" + std::string(name) + "'");
}

void Schema::ValidateRow(std::span<const double> row) const {
  if (row.size() != names.size()) {
    throw Error("row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(names.size()));
  }
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double v = row[j];
    if (!std::isfinite(v)) throw Error("non-finite value in column '" + names[j] + "'");
    if (kinds[j].is_categorical()) {
      if (v < 0 || v != std::floor(v) || v >= static_cast<double>(kinds[j].num_levels())) {
        throw Error("invalid level index " + FormatNumber(v) + " in column '" + names[j] +
                    "'");
      }
    }
  }
}

Dataset::Dataset(Schema schema, Matrix x, std::vector<double> y, std::string target_name)
    : schema_(std::move(schema)),
      x_(std::move(x)),
      y_(std::move(y)),
      target_name_(std::move(target_name)) {
  if (schema_.names.size() != schema_.kinds.size()) {
    throw Error("schema has " + std::to_string(schema_.names.size()) + " names but " +
                std::to_string(schema_.kinds.size()) + " kinds");
  }
  if (x_.rows() == 0) throw Error("dataset needs at least one row");
  if (x_.cols() == 0) throw Error("dataset needs at least one feature");
  if (x_.cols() != schema_.size()) {
    throw Error("matrix has " + std::to_string(x_.cols()) + " columns, schema has " +
                std::to_string(schema_.size()));
  }
  if (y_.size() != x_.rows()) {
    throw Error("target has " + std::to_string(y_.size()) + " values for " +
                std::to_string(x_.rows()) + " rows");
  }
  std::set<std::string> names;
  for (const auto& name : schema_.names) {
    if (!names.insert(name).second) throw Error("duplicate feature name '" + name + "'");
  }
  if (names.count(target_name_) > 0) {
    throw Error("target '" + target_name_ + "' is also a feature");
  }
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    try {
      schema_.ValidateRow(x_.row(i));
    } catch (const Error& e) {
      throw Error("row " + std::to_string(i + 1) + ": " + e.what());
    }
    if (!std::isfinite(y_[i])) throw Error("row " + std::to_string(i + 1) + ": non-finite target");
  }
}

FeatureSet::FeatureSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

FeatureSet FeatureSet::All(std::size_t p) {
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return FeatureSet(std::move(all));
}

FeatureSet FeatureSet::FromMask(std::uint64_t mask) {
  std::vector<std::size_t> indices;
  for (std::size_t j = 0; j < 64; ++j) {
    if (mask & (std::uint64_t{1} << j)) indices.push_back(j);
  }
  return FeatureSet(std::move(indices));
}

bool FeatureSet::contains(std::size_t j) const {
  return std::binary_search(indices_.begin(), indices_.end(), j);
}

FeatureSet FeatureSet::With(std::size_t j) const {
  auto indices = indices_;
  indices.push_back(j);
  return FeatureSet(std::move(indices));
}

FeatureSet FeatureSet::Complement(std::size_t p) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < p; ++j) {
    if (!contains(j)) out.push_back(j);
  }
  return FeatureSet(std::move(out));
}

std::uint64_t FeatureSet::Mask() const {
  std::uint64_t mask = 0;
  for (std::size_t j : indices_) {
    if (j >= 64) throw Error("feature index " + std::to_string(j) + " exceeds bitmask width");
    mask |= std::uint64_t{1} << j;
  }
  return mask;
}

void FeatureSet::CheckWithin(std::size_t p) const {
  for (std::size_t j : indices_) {
    if (j >= p) {
      throw Error("feature index " + std::to_string(j) + " out of range for " +
                  std::to_string(p) + " features");
    }
  }
}

FeatureSet ParseFeatureSet(const Schema& schema, std::string_view names) {
  std::vector<std::size_t> indices;
  std::size_t start = 0;
  while (start <= names.size()) {
    const std::size_t comma = std::min(names.find(',', start), names.size());
    std::string_view name = names.substr(start, comma - start);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (name.empty()) throw Error("empty feature name in '" + std::string(names) + "'");
    indices.push_back(schema.IndexOf(name));
    start = comma + 1;
  }
  return FeatureSet(std::move(indices));
}

Dataset ReadCsv(std::istream& in, const CsvOptions& options) {
  const std::vector<CsvRecord> records = ReadCsvRecords(in);
  if (records.empty()) throw Error("CSV has no header row");
  const std::vector<std::string>& header = records.front().fields;
  {
    std::set<std::string> seen;
    for (const auto& name : header) {
      if (name.empty()) throw Error("empty column name in header");
      if (!seen.insert(name).second) throw Error("duplicate header column '" + name + "'");
    }
  }
  if (options.target.empty()) throw Error("no target column given");
  const auto target_it = std::find(header.begin(), header.end(), options.target);
  if (target_it == header.end()) {
    throw Error("unknown target column '" + options.target + "'");
  }
  const std::size_t target_col = static_cast<std::size_t>(target_it - header.begin());
  for (const auto& name : options.categorical) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw Error("unknown categorical column '" + name + "'");
    }
    if (name == options.target) throw Error("target '" + name + "' must be numeric");
  }
  for (const auto& [name, levels] : options.levels) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw Error("unknown categorical column '" + name + "'");
    }
  }

  const std::size_t n = records.size() - 1;
  if (n == 0) throw Error("CSV has no data rows");
  const std::size_t cols = header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != cols) {
      throw Error("data row " + std::to_string(r) + " (line " + std::to_string(rec.line) +
                  ") has " + std::to_string(rec.fields.size()) + " fields, header has " +
                  std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (rec.fields[c].empty()) {
        throw Error("missing cell at " + CellName(r, rec.line, header[c]));
      }
      if (IsNonFiniteLiteral(rec.fields[c])) {
        throw Error("non-finite number at " + CellName(r, rec.line, header[c]));
      }
    }
  }

  Schema schema;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < cols; ++c) {
    if (c == target_col) continue;
    feature_cols.push_back(c);
    schema.names.push_back(header[c]);
    const bool forced = std::find(options.categorical.begin(), options.categorical.end(),
                                  header[c]) != options.categorical.end();
    if (auto it = options.levels.find(header[c]); it != options.levels.end()) {
      schema.kinds.push_back(FeatureKind::Categorical(it->second));
      continue;
    }
    bool numeric = !forced;
    double unused = 0.0;
    for (std::size_t r = 1; numeric && r < records.size(); ++r) {
      numeric = ParseFiniteDouble(records[r].fields[c], unused);
    }
    if (numeric) {
      schema.kinds.push_back(FeatureKind::Numeric());
    } else {
      std::vector<std::string> levels;
      std::set<std::string> seen;
      for (std::size_t r = 1; r < records.size(); ++r) {
        if (seen.insert(records[r].fields[c]).second) levels.push_back(records[r].fields[c]);
      }
      schema.kinds.push_back(FeatureKind::Categorical(std::move(levels)));
    }
  }

  Matrix x(n, feature_cols.size());
  std::vector<double> y(n);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t i = r - 1;
    if (!ParseFiniteDouble(rec.fields[target_col], y[i])) {
      throw Error("unparseable numeric cell '" + rec.fields[target_col] + "' at " +
                  CellName(r, rec.line, header[target_col]));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& cell = rec.fields[feature_cols[j]];
      if (schema.kinds[j].is_numeric()) {
        ParseFiniteDouble(cell, x(i, j));
      } else {
        try {
          x(i, j) = static_cast<double>(schema.kinds[j].LevelIndex(cell));
        } catch (const Error&) {
          throw Error("unknown level '" + cell + "' at " +
                      CellName(r, rec.line, header[feature_cols[j]]));
        }
      }
    }
  }
  return Dataset(std::move(schema), std::move(x), std::move(y), options.target);
}

Dataset LoadCsv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return ReadCsv(in, options);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void WriteCsv(const Dataset& d, std::ostream& out) {
  std::vector<std::string> fields = d.feature_names();
  fields.push_back(d.target_name());
  WriteCsvRow(out, fields);
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.p(); ++j) {
      const double v = d.at(i, j);
      fields[j] = d.kind(j).is_categorical()
                      ? d.kind(j).levels()[static_cast<std::size_t>(v)]
                      : FormatNumber(v);
    }
    fields[d.p()] = FormatNumber(d.y()[i]);
    WriteCsvRow(out, fields);
  }
}

void SaveCsv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  WriteCsv(d, out);
}

namespace {

Dataset SelectRows(const Dataset& d, const std::vector<std::size_t>& rows) {
  Matrix x(rows.size(), d.p());
  std::vector<double> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = d.x().row(rows[r]);
    std::copy(src.begin(), src.end(), x.row(r).begin());
    y[r] = d.y()[rows[r]];
  }
  return Dataset(d.schema(), std::move(x), std::move(y), d.target_name());
}

}  // namespace

std::pair<Dataset, Dataset> Split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie in (0, 1), got " + FormatNumber(train_fraction));
  }
  if (d.n() < 2) throw Error("split needs at least two rows");
  const std::size_t train_n =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(d.n())));
  if (train_n == 0 || train_n == d.n()) {
    throw Error("train fraction " + FormatNumber(train_fraction) + " leaves an empty part for " +
                std::to_string(d.n()) + " rows");
  }
  CounterStream stream(DeriveKey(seed, {0x5711}));
  std::vector<std::size_t> perm = RandomPermutation(d.n(), stream);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_n));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(train_n), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {SelectRows(d, train), SelectRows(d, test)};
}

Dataset SubsetRows(const Dataset& d, const std::vector<bool>& mask) {
  if (mask.size() != d.n()) {
    throw Error("mask has " + std::to_string(mask.size()) + " entries for " +
                std::to_string(d.n()) + " rows");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(i);
  }
  if (rows.empty()) throw Error("empty subset");
  return SelectRows(d, rows);
}

Dataset ConformToSchema(const Dataset& d, const Schema& schema) {
  Matrix x(d.n(), schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const std::size_t src = d.FeatureIndex(schema.names[j]);
    const FeatureKind& want = schema.kinds[j];
    const FeatureKind& have = d.kind(src);
    if (want.is_categorical() != have.is_categorical()) {
      throw Error("feature '" + schema.names[j] + "' is " +
                  (have.is_categorical() ? "categorical" : "numeric") +
                  " in the data but " + (want.is_categorical() ? "categorical" : "numeric") +
                  " in the model");
    }
    std::vector<std::size_t> remap;
    if (have.is_categorical()) {
      for (const auto& level : have.levels()) {
        try {
          remap.push_back(want.LevelIndex(level));
        } catch (const Error&) {
          remap.push_back(static_cast<std::size_t>(-1));
        }
      }
    }
    for (std::size_t i = 0; i < d.n(); ++i) {
      const double v = d.at(i, src);
      if (have.is_numeric()) {
        x(i, j) = v;
        continue;
      }
      const std::size_t mapped = remap[static_cast<std::size_t>(v)];
      if (mapped == static_cast<std::size_t>(-1)) {
        throw Error("row " + std::to_string(i + 1) + ": level '" +
                    have.levels()[static_cast<std::size_t>(v)] + "' of feature '" +
                    schema.names[j] + "' is unknown to the model");
      }
      x(i, j) = static_cast<double>(mapped);
    }
  }
  return Dataset(schema, std::move(x), d.y(), d.target_name());
}

}  // namespace bbfi

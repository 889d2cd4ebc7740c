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

#ifndef BBFI_TABLE_IO_H_
#define BBFI_TABLE_IO_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bbfi {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based physical line where the record starts
};

// RFC-4180 records: quoted fields may contain commas, doubled quotes and
// newlines. CRLF line endings are accepted. Blank lines are skipped.
std::vector<CsvRecord> ReadCsvRecords(std::istream& in);

std::string CsvEscape(std::string_view field);
void WriteCsvRow(std::ostream& out, std::span<const std::string> fields);

// 17 significant digits; enough to round-trip any double.
std::string FormatNumber(double value);
// 4 significant digits, for plot labels.
std::string FormatShort(double value);

// Parses a complete string as a finite double; false otherwise.
bool ParseFiniteDouble(std::string_view text, double& value);

}  // namespace bbfi

#endif  // BBFI_TABLE_IO_H_

// Copyright 2026 The Croma Authors
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

#ifndef CROMA_CSV_HPP_
#define CROMA_CSV_HPP_

#include <string>
#include <vector>

namespace croma {

// CSV dialect used for every file the project emits: comma separator, one
// header row, '.' decimal point, LF line endings, floats at 17 significant
// digits so reruns are byte-identical.

/// Shortest-roundtrip-free fixed policy: %.17g.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);

  /// Serialize to a single LF-terminated string.
  std::string str() const;

  /// Write via temp file + rename so partial output is never visible.
  void save(const std::string& path) const;

  size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws IoError if absent.
  size_t col(const std::string& name) const;
};

/// Strict reader for the dialect above. Throws IoError naming the line on
/// ragged rows or on an unreadable file.
CsvTable read_csv(const std::string& path);

/// Atomic text-file write (temp + rename).
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace croma

#endif  // CROMA_CSV_HPP_

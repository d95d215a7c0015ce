// Copyright 2026 The Muskwheel Authors
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


#include "muskwheel/harness/report.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "muskwheel/core/errors.h"

namespace muskwheel {

void Trajectory::Add(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw UsageError("Trajectory " + name + ": row has " +
                     std::to_string(row.size()) + " values, expected " +
                     std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string FormatCsv(const Trajectory& trajectory) {
  std::string out;
  for (size_t i = 0; i < trajectory.columns.size(); ++i) {
    if (i) out += ',';
    out += trajectory.columns[i];
  }
  out += '\n';
  char buf[32];
  for (const auto& row : trajectory.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace

std::vector<std::string> WriteReport(const Report& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> written;
  fs::path metrics = fs::path(dir) / "metrics.json";
  WriteFile(metrics, report.metrics.dump(2) + "\n");
  written.push_back(metrics.string());
  for (const Trajectory& t : report.trajectories) {
    fs::path p = fs::path(dir) / (t.name + ".csv");
    WriteFile(p, FormatCsv(t));
    written.push_back(p.string());
  }
  for (const auto& [name, text] : report.files) {
    fs::path p = fs::path(dir) / name;
    WriteFile(p, text);
    written.push_back(p.string());
  }
  return written;
}

}  // namespace muskwheel

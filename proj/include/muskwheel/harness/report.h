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


#ifndef MUSKWHEEL_HARNESS_REPORT_H_
#define MUSKWHEEL_HARNESS_REPORT_H_

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace muskwheel {

// A table of samples written as CSV; `columns` is the header row.
struct Trajectory {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void Add(std::vector<double> row);
};

struct Report {
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::vector<Trajectory> trajectories;
  // Other artifacts written verbatim: file name and contents.
  std::vector<std::pair<std::string, std::string>> files;
};

// Doubles print with 17 significant digits so files are byte-identical
// whenever the numbers are.
std::string FormatCsv(const Trajectory& trajectory);

// Writes <dir>/metrics.json, <dir>/<name>.csv for every trajectory and the
// extra files, creating the directory. Returns the paths written.
std::vector<std::string> WriteReport(const Report& report, const std::string& dir);

}  // namespace muskwheel

#endif  // MUSKWHEEL_HARNESS_REPORT_H_

// Copyright 2026-present the graphann project
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

#pragma once

#include <string>
#include <vector>

#include "graphann/run_suite.hpp"

namespace graphann {

/// One JSON object per configuration; field names are stable and documented
/// in the README.
std::string reports_to_json(const std::vector<ConfigReport>& reports);
void write_json_report(const std::string& path, const std::vector<ConfigReport>& reports);

/// One CSV row per configuration; doubles as the plot-data table
/// (engine, intra, inter, L, latency, qps, recall columns).
std::string reports_to_csv(const std::vector<ConfigReport>& reports);
void write_csv_report(const std::string& path, const std::vector<ConfigReport>& reports);

}  // namespace graphann

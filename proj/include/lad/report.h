// Copyright 2026 The LAD Authors. All Rights Reserved.
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

// Result tables: a text rendering and a JSON rendering of the same rows,
// appended side by side to <dir>/report.txt and <dir>/report.json, plus an
// SVG line plot for alpha sweeps.

#ifndef LAD_REPORT_H_
#define LAD_REPORT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lad/config.h"

namespace lad {

struct ReportRow {
  std::string arm;
  std::optional<double> teacher_miou;
  std::optional<double> student_miou;
  std::optional<double> kl_mean;
  std::optional<double> saliency_ratio;
  Json extra = Json::object();
};

struct Report {
  std::string title;
  std::vector<ReportRow> rows;
  Json provenance = Json::object();
};

std::string FormatReport(const Report& report);
Json ToJson(const Report& report);

// report.json holds a JSON array of blocks; report.txt the text renderings.
void AppendReport(const std::filesystem::path& dir, const Report& report);

struct SweepSeries {
  std::string name;
  std::vector<double> values;  // one per alpha, NaN for missing
  bool dashed = false;
};

// Alphas are placed at evenly spaced categorical positions.
std::string SweepPlotSvg(const std::vector<double>& alphas,
                         const std::vector<SweepSeries>& series,
                         const std::string& title);

}  // namespace lad

#endif  // LAD_REPORT_H_

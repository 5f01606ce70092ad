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

#include "lad/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lad/error.h"

namespace lad {
namespace {

std::string Cell(const std::optional<double>& v, const char* fmt) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), fmt, *v);
  return buf;
}

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string FormatAlpha(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", alpha);
  return buf;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b"};

}  // namespace

std::string FormatReport(const Report& report) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"arm", "teacher mIoU", "student mIoU", "mKL (x100)",
                   "saliency ratio"});
  for (const ReportRow& row : report.rows) {
    cells.push_back(
        {row.arm, Cell(row.teacher_miou, "%.4f"), Cell(row.student_miou, "%.4f"),
         Cell(row.kl_mean ? std::optional<double>(100.0 * *row.kl_mean)
                          : std::nullopt,
              "%.4f"),
         Cell(row.saliency_ratio, "%.4g")});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      width[i] = std::max(width[i], line[i].size());
    }
  }
  std::ostringstream os;
  os << "== " << report.title << " ==\n";
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      os << (i ? "  " : "") << cells[r][i]
         << std::string(width[i] - cells[r][i].size(), ' ');
    }
    os << "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      os << std::string(total - 2, '-') << "\n";
    }
  }
  if (!report.provenance.empty()) {
    os << "provenance: " << report.provenance.dump() << "\n";
  }
  return os.str();
}

Json ToJson(const Report& report) {
  Json rows = Json::array();
  for (const ReportRow& row : report.rows) {
    Json r{{"arm", row.arm},
           {"teacher_miou", OptionalJson(row.teacher_miou)},
           {"student_miou", OptionalJson(row.student_miou)},
           {"kl_mean", OptionalJson(row.kl_mean)},
           {"kl_mean_x100", row.kl_mean ? Json(100.0 * *row.kl_mean)
                                        : Json(nullptr)},
           {"saliency_ratio", OptionalJson(row.saliency_ratio)}};
    for (const auto& item : row.extra.items()) r[item.key()] = item.value();
    rows.push_back(std::move(r));
  }
  return Json{{"title", report.title},
              {"rows", std::move(rows)},
              {"provenance", report.provenance}};
}

void AppendReport(const std::filesystem::path& dir, const Report& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Require(!ec, ErrorCode::kIo,
          "cannot create " + dir.string() + ": " + ec.message());
  const auto json_path = dir / "report.json";
  Json blocks = Json::array();
  if (std::filesystem::exists(json_path)) {
    blocks = ReadJsonFile(json_path);
    Require(blocks.is_array(), ErrorCode::kIo,
            json_path.string() + " is not a JSON array");
  }
  blocks.push_back(ToJson(report));
  WriteJsonFile(json_path, blocks);

  std::ofstream text(dir / "report.txt", std::ios::app);
  Require(static_cast<bool>(text), ErrorCode::kIo,
          "cannot write " + (dir / "report.txt").string());
  text << FormatReport(report) << "\n";
}

std::string SweepPlotSvg(const std::vector<double>& alphas,
                         const std::vector<SweepSeries>& series,
                         const std::string& title) {
  const double w = 640, h = 420, left = 70, right = 170, top = 40, bottom = 60;
  const double plot_w = w - left - right, plot_h = h - top - bottom;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  const double pad = std::max(0.02, 0.1 * (hi - lo));
  lo = std::max(0.0, lo - pad);
  hi = std::min(1.0, hi + pad);
  if (hi <= lo) hi = lo + 0.1;
  auto x_at = [&](std::size_t i) {
    return alphas.size() <= 1 ? left + plot_w / 2
                              : left + plot_w * i / (alphas.size() - 1.0);
  };
  auto y_at = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
     << left + plot_w << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
     << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    char label[16];
    std::snprintf(label, sizeof(label), "%.3f", v);
    os << "<text x=\"" << left - 8 << "\" y=\"" << y_at(v) + 4
       << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    os << "<text x=\"" << x_at(i) << "\" y=\"" << top + plot_h + 18
       << "\" text-anchor=\"middle\">" << FormatAlpha(alphas[i]) << "</text>\n";
  }
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << h - 16
     << "\" text-anchor=\"middle\">alpha (pixel-noise scale)</text>\n";
  os << "<text x=\"18\" y=\"" << top + plot_h / 2
     << "\" transform=\"rotate(-90 18 " << top + plot_h / 2
     << ")\" text-anchor=\"middle\">val mIoU</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::ostringstream points;
    for (std::size_t i = 0; i < series[s].values.size() && i < alphas.size(); ++i) {
      const double v = series[s].values[i];
      if (std::isnan(v)) continue;
      points << x_at(i) << "," << y_at(v) << " ";
      os << "<circle cx=\"" << x_at(i) << "\" cy=\"" << y_at(v)
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
       << (series[s].dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\""
       << points.str() << "\"/>\n";
    const double ly = top + 16 + 18 * s;
    os << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\""
       << left + plot_w + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\""
       << (series[s].dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << left + plot_w + 42 << "\" y=\"" << ly + 4 << "\">"
       << series[s].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lad

// Copyright 2026 The sleepsae Authors.
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

// Minimal SVG output: labelled heatmaps and line charts.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsae/autoencoder.hpp"
#include "sleepsae/error.hpp"

namespace sleepsae {

/// Small CSV table: header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    fail(ErrorCode::FormatError, "CSV column '" + std::string(name) + "' missing");
  }
};

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  bool first = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cells.emplace_back(line.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (first) t.header = std::move(cells);
    else t.rows.push_back(std::move(cells));
    first = false;
  }
  return t;
}

/// Numeric body of a table whose first column holds row labels.
inline Matrix csv_matrix(const CsvTable& t, std::vector<std::string>* row_labels = nullptr) {
  if (t.header.size() < 2) fail(ErrorCode::FormatError, "table has no value columns");
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size() - 1));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) fail(ErrorCode::FormatError, "ragged CSV row");
    if (row_labels) row_labels->push_back(t.rows[r][0]);
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = std::stod(t.rows[r][c]);
    }
  }
  return m;
}

namespace detail {

inline std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// White to dark blue.
inline std::string ramp(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 * (1 - v) + 8 * v));
  const int g = static_cast<int>(std::lround(255 * (1 - v) + 48 * v));
  const int b = static_cast<int>(std::lround(255 * (1 - v) + 107 * v));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// Heatmap with one cell per entry, colour scaled to [min, max] of `m`.
inline std::string heatmap_svg(const Matrix& m, const std::vector<std::string>& rows,
                               const std::vector<std::string>& cols, std::string_view title) {
  constexpr int cell = 22, left = 60, top = 40, bottom = 170;
  const auto nr = static_cast<int>(m.rows()), nc = static_cast<int>(m.cols());
  const int width = left + nc * cell + 80, height = top + nr * cell + bottom;
  const double lo = m.size() ? m.minCoeff() : 0.0, hi = m.size() ? m.maxCoeff() : 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << detail::escape_xml(title) << "</text>\n";
  for (int r = 0; r < nr; ++r) {
    s << "<text x=\"" << left - 4 << "\" y=\"" << top + r * cell + cell * 0.65 << "\" text-anchor=\"end\">"
      << detail::escape_xml(r < static_cast<int>(rows.size()) ? rows[static_cast<std::size_t>(r)] : "") << "</text>\n";
    for (int c = 0; c < nc; ++c) {
      const double v = m(r, c);
      const double u = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      s << "<rect x=\"" << left + c * cell << "\" y=\"" << top + r * cell << "\" width=\"" << cell << "\" height=\""
        << cell << "\" fill=\"" << detail::ramp(u) << "\"><title>" << v << "</title></rect>\n";
    }
  }
  for (int c = 0; c < nc; ++c) {
    const double x = left + c * cell + cell * 0.6;
    const double y = top + nr * cell + 6;
    s << "<text transform=\"translate(" << x << ',' << y << ") rotate(90)\">"
      << detail::escape_xml(c < static_cast<int>(cols.size()) ? cols[static_cast<std::size_t>(c)] : "") << "</text>\n";
  }
  const int lx = left + nc * cell + 15;
  for (int i = 0; i < 10; ++i) {
    s << "<rect x=\"" << lx << "\" y=\"" << top + (9 - i) * 10 << "\" width=\"12\" height=\"10\" fill=\""
      << detail::ramp(i / 9.0) << "\"/>\n";
  }
  s << "<text x=\"" << lx + 16 << "\" y=\"" << top + 8 << "\">" << hi << "</text>\n";
  s << "<text x=\"" << lx + 16 << "\" y=\"" << top + 100 << "\">" << lo << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

struct Series {
  std::string name;
  std::vector<double> x, y, err;
};

/// Line chart with optional symmetric error bars.
inline std::string line_chart_svg(const std::vector<Series>& series, std::string_view title, std::string_view x_label,
                                  std::string_view y_label) {
  constexpr int width = 520, height = 360, left = 60, right = 130, top = 40, bottom = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = i < s.err.size() ? s.err[i] : 0.0;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1 - (y - y0) / (y1 - y0)) * ph; };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << detail::escape_xml(title) << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y0 + (y1 - y0) * i / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << std::lround(yv * 10) / 10.0
      << "</text>\n";
  }
  for (const auto& ser : series) {
    for (double xv : ser.x) {
      s << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    }
    break;
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
    << detail::escape_xml(x_label) << "</text>\n";
  s << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::escape_xml(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ser = series[k];
    const char* col = colours[k % 5];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) s << px(ser.x[i]) << ',' << py(ser.y[i]) << ' ';
    s << "\"/>\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      s << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
      if (i < ser.err.size() && ser.err[i] > 0) {
        s << "<line x1=\"" << px(ser.x[i]) << "\" x2=\"" << px(ser.x[i]) << "\" y1=\"" << py(ser.y[i] - ser.err[i])
          << "\" y2=\"" << py(ser.y[i] + ser.err[i]) << "\" stroke=\"" << col << "\"/>\n";
      }
    }
    const double ly = top + 14 + 16.0 * static_cast<double>(k);
    s << "<rect x=\"" << width - right + 10 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << col
      << "\"/><text x=\"" << width - right + 24 << "\" y=\"" << ly << "\">" << detail::escape_xml(ser.name)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

/// Accuracy-versus-order series (one per alpha mode) from sweep.csv tables.
inline std::vector<Series> sweep_series(const std::vector<CsvTable>& tables, bool smoothed) {
  std::map<std::string, Series> by_mode;
  for (const auto& t : tables) {
    const auto order = t.column("model_order"), mode = t.column("alpha_mode");
    const auto mean = t.column(smoothed ? "smoothed_mean" : "raw_mean");
    const auto sd = t.column(smoothed ? "smoothed_std" : "raw_std");
    for (const auto& row : t.rows) {
      auto& s = by_mode[row[mode]];
      s.name = row[mode];
      s.x.push_back(std::stod(row[order]));
      s.y.push_back(std::stod(row[mean]));
      s.err.push_back(std::stod(row[sd]));
    }
  }
  std::vector<Series> out;
  for (auto& [_, s] : by_mode) out.push_back(std::move(s));
  return out;
}

}  // namespace sleepsae

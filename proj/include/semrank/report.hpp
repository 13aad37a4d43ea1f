// Copyright 2026 The semrank Authors.
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

// Minimal CSV reading and static SVG charts for run reports.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "semrank/checkpoint.hpp"
#include "semrank/common.hpp"

namespace semrank {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

// Comma-separated, no quoting (the files this library writes never need it).
inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  bool first = true;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t p = 0;
    while (true) {
      const auto q = line.find(',', p);
      cells.emplace_back(line.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p));
      if (q == std::string_view::npos) break;
      p = q + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file_bytes(path));
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

namespace svg {

inline constexpr double kWidth = 720.0;
inline constexpr double kHeight = 400.0;
inline constexpr double kLeft = 70.0;
inline constexpr double kRight = 160.0;
inline constexpr double kTop = 40.0;
inline constexpr double kBottom = 50.0;

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string header(std::string_view title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft, escape(title));
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

inline Range padded(double lo, double hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

inline std::string axes(Range x, Range y, std::string_view xlabel, std::string_view ylabel) {
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;
  std::string s = fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{3}\" stroke=\"black\"/>\n",
      x0, y0, x1, y1);
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y0 - (y0 - y1) * i / 4.0;
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4g}</text>\n", x0 - 6, py + 4, v);
    s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>\n", x0, py, x1, py);
  }
  if (x.hi > x.lo) {
    for (int i = 0; i <= 4; ++i) {
      const double v = x.lo + (x.hi - x.lo) * i / 4.0;
      const double px = x0 + (x1 - x0) * i / 4.0;
      s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", px, y0 + 18, v);
    }
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                   kHeight - 12, escape(xlabel));
  s += fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
      (y0 + y1) / 2, escape(ylabel));
  return s;
}

}  // namespace svg

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

inline std::string line_chart_svg(std::string_view title, std::string_view xlabel,
                                  std::string_view ylabel, const std::vector<Series>& series) {
  double xlo = std::numeric_limits<double>::infinity();
  double xhi = -xlo;
  double ylo = xlo;
  double yhi = -xlo;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  if (!std::isfinite(xlo)) {
    xlo = ylo = 0.0;
    xhi = yhi = 1.0;
  }
  const svg::Range xr{xlo, xhi > xlo ? xhi : xlo + 1.0};
  const svg::Range yr = svg::padded(ylo, yhi);
  const double x0 = svg::kLeft;
  const double x1 = svg::kWidth - svg::kRight;
  const double y0 = svg::kHeight - svg::kBottom;
  const double y1 = svg::kTop;
  auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
  auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

  std::string out = svg::header(title) + svg::axes(xr, yr, xlabel, ylabel);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string pts;
    for (auto [x, y] : s.points) pts += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       svg::palette(i), pts);
    const double ly = y1 + 16.0 * static_cast<double>(i) + 8.0;
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{}\"/>\n", x1 + 12,
                       ly - 4, svg::palette(i));
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", x1 + 30, ly, svg::escape(s.name));
  }
  out += "</svg>\n";
  return out;
}

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> lo;  // whisker range
  std::optional<double> hi;
};

// Bars with optional min-max whiskers.
inline std::string bar_chart_svg(std::string_view title, std::string_view ylabel,
                                 const std::vector<Bar>& bars) {
  double ylo = std::numeric_limits<double>::infinity();
  double yhi = -ylo;
  for (const auto& b : bars) {
    ylo = std::min({ylo, b.value, b.lo.value_or(b.value)});
    yhi = std::max({yhi, b.value, b.hi.value_or(b.value)});
  }
  if (!std::isfinite(ylo)) {
    ylo = 0.0;
    yhi = 1.0;
  }
  const svg::Range yr = svg::padded(ylo, yhi);
  const double x0 = svg::kLeft;
  const double x1 = svg::kWidth - svg::kRight;
  const double y0 = svg::kHeight - svg::kBottom;
  const double y1 = svg::kTop;
  auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };
  std::string out = svg::header(title) + svg::axes({0.0, 0.0}, yr, "", ylabel);
  const double slot = (x1 - x0) / std::max<std::size_t>(1, bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
    const double w = slot * 0.6;
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                       cx - w / 2, py(b.value), w, std::max(0.0, y0 - py(b.value)), svg::palette(i));
    if (b.lo && b.hi) {
      out += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n"
          "<line x1=\"{3:.2f}\" y1=\"{1:.2f}\" x2=\"{4:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n"
          "<line x1=\"{3:.2f}\" y1=\"{2:.2f}\" x2=\"{4:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
          cx, py(*b.lo), py(*b.hi), cx - w / 6, cx + w / 6);
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", cx,
                       y0 + 16, svg::escape(b.label));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.1f}</text>\n", cx,
                       py(b.hi.value_or(b.value)) - 6, b.value);
  }
  out += "</svg>\n";
  return out;
}

// One series per numeric column other than the x column.
inline std::vector<Series> series_from_csv(const CsvTable& t, std::string_view x_column,
                                           const std::vector<std::string>& columns) {
  std::vector<Series> out;
  const auto xc = t.column(x_column);
  if (!xc) throw ValidationError("CSV has no column '" + std::string(x_column) + "'");
  for (const auto& name : columns) {
    const auto c = t.column(name);
    if (!c) continue;
    Series s{name, {}};
    for (const auto& row : t.rows) {
      if (row.size() <= std::max(*xc, *c)) continue;
      const auto x = parse_number(row[*xc]);
      const auto y = parse_number(row[*c]);
      if (x && y) s.points.emplace_back(*x, *y);
    }
    if (!s.points.empty()) out.push_back(std::move(s));
  }
  return out;
}

// Elo bars (mean) with min-max whiskers from an aggregate CSV.
inline std::vector<Bar> elo_bars_from_csv(const CsvTable& t) {
  const auto m = t.column("model");
  const auto mean = t.column("mean_elo");
  const auto lo = t.column("min_elo");
  const auto hi = t.column("max_elo");
  if (!m || !mean || !lo || !hi) throw ValidationError("not an aggregate Elo CSV");
  std::vector<Bar> bars;
  for (const auto& row : t.rows) {
    Bar b;
    b.label = row.at(*m);
    b.value = parse_number(row.at(*mean)).value_or(0.0);
    b.lo = parse_number(row.at(*lo));
    b.hi = parse_number(row.at(*hi));
    bars.push_back(std::move(b));
  }
  std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) { return a.value > b.value; });
  return bars;
}

}  // namespace semrank

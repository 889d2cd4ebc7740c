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

#include "bbfi/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "bbfi/error.h"
#include "bbfi/numeric.h"
#include "bbfi/table_io.h"

namespace bbfi {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;
constexpr double kStrip = 48.0;  // histogram strip height
constexpr int kBins = 20;

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string Escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Finish() {
    if (lo > hi) lo = 0.0, hi = 1.0;
    if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string RenderLinePlot(const PlotSpec& spec) {
  if (spec.curves.empty() && spec.aggregates.empty()) throw Error("nothing to plot: no curves");
  for (const auto* group : {&spec.curves, &spec.aggregates}) {
    for (const Curve& c : *group) {
      if (c.abscissa.size() != c.ordinates.size()) {
        throw Error("curve '" + c.label + "' has mismatched abscissa and ordinates");
      }
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!std::isfinite(c.abscissa[k]) || !std::isfinite(c.ordinates[k])) {
          throw Error("curve '" + c.label + "' has non-finite values");
        }
      }
    }
  }
  const bool strip = !spec.histogram.empty();
  const double plot_bottom = kHeight - kBottom - (strip ? kStrip : 0.0);

  Range xr, yr;
  auto add = [&](const Curve& c) {
    for (double v : c.abscissa) xr.Add(v);
    for (double v : c.ordinates) yr.Add(v);
  };
  for (const Curve& c : spec.curves) add(c);
  for (const Curve& c : spec.aggregates) add(c);
  for (double v : spec.histogram) xr.Add(v);
  xr.Finish();
  yr.Finish();

  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kLeft - kRight); };
  auto py = [&](double y) { return plot_bottom - (y - yr.lo) / (yr.hi - yr.lo) * (plot_bottom - kTop); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Num(kWidth) + "\" height=\"" +
         Num(kHeight) + "\" viewBox=\"0 0 " + Num(kWidth) + " " + Num(kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + Num(kWidth) + "\" height=\"" + Num(kHeight) +
         "\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg += "<text x=\"" + Num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           Escape(spec.title) + "</text>\n";
  }

  // Axes and ticks.
  svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + Num(kLeft) + "\" y1=\"" + Num(plot_bottom) + "\" x2=\"" +
         Num(kWidth - kRight) + "\" y2=\"" + Num(plot_bottom) + "\"/>\n";
  svg += "<line x1=\"" + Num(kLeft) + "\" y1=\"" + Num(kTop) + "\" x2=\"" + Num(kLeft) +
         "\" y2=\"" + Num(plot_bottom) + "\"/>\n";
  svg += "</g>\n";

  std::map<double, std::string> level_ticks;
  for (const auto* group : {&spec.aggregates, &spec.curves}) {
    for (const Curve& c : *group) {
      for (std::size_t k = 0; k < c.abscissa_labels.size() && k < c.abscissa.size(); ++k) {
        level_ticks.emplace(c.abscissa[k], c.abscissa_labels[k]);
      }
    }
  }
  svg += "<g font-size=\"11\" fill=\"black\">\n";
  if (!level_ticks.empty()) {
    for (const auto& [x, label] : level_ticks) {
      svg += "<text x=\"" + Num(px(x)) + "\" y=\"" + Num(plot_bottom + 16) +
             "\" text-anchor=\"middle\">" + Escape(label) + "</text>\n";
    }
  } else {
    for (int t = 0; t <= 4; ++t) {
      const double x = xr.lo + (xr.hi - xr.lo) * t / 4.0;
      svg += "<text x=\"" + Num(px(x)) + "\" y=\"" + Num(plot_bottom + 16) +
             "\" text-anchor=\"middle\">" + Escape(FormatShort(x)) + "</text>\n";
    }
  }
  for (int t = 0; t <= 4; ++t) {
    const double y = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    svg += "<text x=\"" + Num(kLeft - 6) + "\" y=\"" + Num(py(y) + 4) +
           "\" text-anchor=\"end\">" + Escape(FormatShort(y)) + "</text>\n";
  }
  svg += "</g>\n";
  if (!spec.x_label.empty()) {
    svg += "<text x=\"" + Num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + Num(kHeight - 12) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + Escape(spec.x_label) + "</text>\n";
  }
  if (!spec.y_label.empty()) {
    const double cy = (kTop + plot_bottom) / 2;
    svg += "<text x=\"16\" y=\"" + Num(cy) + "\" text-anchor=\"middle\" font-size=\"13\" "
           "transform=\"rotate(-90 16 " + Num(cy) + ")\">" + Escape(spec.y_label) + "</text>\n";
  }

  // Highlighted individual curves: largest and smallest mean ordinate.
  std::size_t hi_curve = spec.curves.size(), lo_curve = spec.curves.size();
  if (spec.highlight_extremes && !spec.curves.empty()) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < spec.curves.size(); ++c) {
      const double m = Mean(spec.curves[c].ordinates);
      if (m > hi) hi = m, hi_curve = c;
      if (m < lo) lo = m, lo_curve = c;
    }
  }

  auto polyline = [&](const Curve& c, const std::string& style) {
    std::string points;
    for (std::size_t k = 0; k < c.size() && k < c.ordinates.size(); ++k) {
      if (!points.empty()) points += ' ';
      points += Num(px(c.abscissa[k])) + "," + Num(py(c.ordinates[k]));
    }
    svg += "<polyline fill=\"none\" " + style + " points=\"" + points + "\"><title>" +
           Escape(c.label) + "</title></polyline>\n";
  };
  for (std::size_t c = 0; c < spec.curves.size(); ++c) {
    if (c == hi_curve || c == lo_curve) continue;
    polyline(spec.curves[c], "stroke=\"#8c8c8c\" stroke-opacity=\"0.5\" stroke-width=\"1\"");
  }
  if (lo_curve < spec.curves.size()) {
    polyline(spec.curves[lo_curve], "stroke=\"#1f77b4\" stroke-width=\"2\"");
  }
  if (hi_curve < spec.curves.size() && hi_curve != lo_curve) {
    polyline(spec.curves[hi_curve], "stroke=\"#d62728\" stroke-width=\"2\"");
  }
  for (const Curve& c : spec.aggregates) polyline(c, "stroke=\"black\" stroke-width=\"3\"");

  if (strip) {
    std::vector<std::size_t> counts(kBins, 0);
    for (double v : spec.histogram) {
      if (!std::isfinite(v)) continue;
      auto b = static_cast<int>((v - xr.lo) / (xr.hi - xr.lo) * kBins);
      counts[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))]++;
    }
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    const double base = kHeight - kBottom + 8.0;
    const double bin_w = (kWidth - kLeft - kRight) / kBins;
    svg += "<g fill=\"#bdbdbd\">\n";
    for (int b = 0; b < kBins; ++b) {
      if (counts[b] == 0) continue;
      const double h = (kStrip - 16.0) * static_cast<double>(counts[b]) / static_cast<double>(top);
      svg += "<rect x=\"" + Num(kLeft + b * bin_w) + "\" y=\"" + Num(base - h) + "\" width=\"" +
             Num(bin_w - 1.0) + "\" height=\"" + Num(h) + "\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace bbfi

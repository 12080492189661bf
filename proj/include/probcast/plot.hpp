#pragma once

// Static SVG reports: returns with VaR bands and exceedance dots, and PIT
// histograms. Plain path/rect/circle elements, deterministic output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "probcast/errors.hpp"
#include "probcast/pipeline.hpp"
#include "probcast/risk.hpp"

namespace probcast {

namespace detail {

inline std::string num2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string polyline_path(std::span<const double> xs, std::span<const double> ys) {
  std::string d;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d += i == 0 ? "M" : "L";
    d += num2(xs[i]) + " " + num2(ys[i]);
  }
  return d;
}

}  // namespace detail

// Returns line with -VaR bands per tolerance and dots on exceedance days.
inline std::string svg_var_plot(std::span<const ForecastRecord> records,
                                std::span<const double> alphas, const std::string& title) {
  if (records.empty()) throw data_error("svg_var_plot: no records");
  const double width = 960.0, height = 360.0, margin = 40.0;
  double lo = 0.0, hi = 0.0;
  std::vector<RiskSeries> bands;
  std::vector<double> realized;
  realized.reserve(records.size());
  for (const auto& r : records) realized.push_back(r.realized);
  const auto specs = record_specs(records);
  for (double a : alphas) bands.push_back(build_risk_series(specs, realized, a));
  for (double r : realized) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  for (const auto& b : bands)
    for (double v : b.var) lo = std::min(lo, -v);
  const double span_y = hi - lo > 0 ? hi - lo : 1.0;
  auto sx = [&](std::size_t i) {
    return margin + (width - 2 * margin) * static_cast<double>(i) /
                        static_cast<double>(records.size() - 1 ? records.size() - 1 : 1);
  };
  auto sy = [&](double v) { return height - margin - (height - 2 * margin) * (v - lo) / span_y; };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"360\" "
      "viewBox=\"0 0 960 360\">\n";
  svg += "<title>" + title + "</title>\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"960\" height=\"360\" fill=\"white\"/>\n";
  std::vector<double> xs(records.size()), ys(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    xs[i] = sx(i);
    ys[i] = sy(realized[i]);
  }
  svg += "<path class=\"returns\" d=\"" + detail::polyline_path(xs, ys) +
         "\" fill=\"none\" stroke=\"#3366cc\" stroke-width=\"0.7\"/>\n";
  const char* colors[] = {"#2ca02c", "#d62728", "#9467bd"};
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t i = 0; i < records.size(); ++i) ys[i] = sy(-bands[b].var[i]);
    svg += "<path class=\"var\" d=\"" + detail::polyline_path(xs, ys) +
           "\" fill=\"none\" stroke=\"" + colors[b % 3] + "\" stroke-width=\"0.9\"/>\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!bands[b].exceed[i]) continue;
      svg += "<circle class=\"exceedance\" cx=\"" + detail::num2(xs[i]) + "\" cy=\"" +
             detail::num2(sy(realized[i])) + "\" r=\"2\" fill=\"" + colors[b % 3] + "\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string svg_pit_histogram(std::span<const double> pit, std::size_t bins,
                                     const std::string& title) {
  if (pit.empty()) throw data_error("svg_pit_histogram: no values");
  if (bins < 2) throw config_error("svg_pit_histogram: need at least 2 bins");
  const double width = 480.0, height = 320.0, margin = 40.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double u : pit) {
    std::size_t b = static_cast<std::size_t>(u * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    counts[b]++;
  }
  const std::size_t peak = *std::max_element(counts.begin(), counts.end());
  const double expected = static_cast<double>(pit.size()) / static_cast<double>(bins);
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" "
      "viewBox=\"0 0 480 320\">\n";
  svg += "<title>" + title + "</title>\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"320\" fill=\"white\"/>\n";
  const double bw = (width - 2 * margin) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double h =
        peak ? (height - 2 * margin) * static_cast<double>(counts[b]) / static_cast<double>(peak)
             : 0.0;
    svg += "<rect class=\"bin\" x=\"" + detail::num2(margin + bw * static_cast<double>(b)) +
           "\" y=\"" + detail::num2(height - margin - h) + "\" width=\"" +
           detail::num2(bw * 0.92) + "\" height=\"" + detail::num2(h) +
           "\" fill=\"#3366cc\"/>\n";
  }
  // reference line at the uniform expectation
  const double ref =
      height - margin -
      (peak ? (height - 2 * margin) * expected / static_cast<double>(peak) : 0.0);
  svg += "<path class=\"uniform\" d=\"M" + detail::num2(margin) + " " + detail::num2(ref) + "L" +
         detail::num2(width - margin) + " " + detail::num2(ref) +
         "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\" fill=\"none\"/>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace probcast

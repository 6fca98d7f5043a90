// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace saedrift::svg {

inline std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Coordinates are printed with two decimals so output is stable text.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 60;
constexpr double kRight = 20;
constexpr double kTop = 30;
constexpr double kBottom = 70;

inline const char* palette(std::size_t i) {
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  return colors[i % std::size(colors)];
}

inline std::string open(const std::string& title) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  return out;
}

inline std::string axes() {
  const double x0 = kLeft;
  const double y0 = kHeight - kBottom;
  return "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" + num(y0) +
         "\" stroke=\"black\"/>\n<line x1=\"" + num(x0) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x0) + "\" y2=\"" +
         num(y0) + "\" stroke=\"black\"/>\n";
}

}  // namespace detail

/// One polyline per series over a fixed [y_min, y_max] axis.
inline std::string line_chart(const std::string& title, const std::vector<Series>& series, double y_min, double y_max,
                              const std::string& x_label, const std::string& y_label) {
  using namespace detail;
  double x_min = 0;
  double x_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (double x : s.x) {
      if (first) {
        x_min = x_max = x;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (y_max - std::clamp(y, y_min, y_max)) / (y_max - y_min) * plot_h; };

  std::string out = open(title) + axes();
  for (int k = 0; k <= 5; ++k) {
    const double y = y_min + (y_max - y_min) * k / 5.0;
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(y) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(y) + "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string pts;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!pts.empty()) pts += ' ';
      pts += num(px(s.x[k])) + "," + num(py(s.y[k]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(palette(i)) + "\" stroke-width=\"2\" points=\"" + pts +
           "\"><title>" + escape(s.label) + "</title></polyline>\n";
    for (std::size_t k = 0; k < s.x.size() && i == 0; ++k) {
      out += "<text x=\"" + num(px(s.x[k])) + "\" y=\"" + num(kHeight - kBottom + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + num(s.x[k]) + "</text>\n";
    }
  }
  out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - kBottom + 40) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape(x_label) + "</text>\n";
  out += "<text x=\"14\" y=\"" + num(kTop + plot_h / 2) + "\" transform=\"rotate(-90 14 " + num(kTop + plot_h / 2) +
         ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape(y_label) + "</text>\n";
  out += "</svg>\n";
  return out;
}

/// One bar per value, labelled underneath with the matching string.
inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
  using namespace detail;
  double top = 0;
  for (double v : values) top = std::max(top, v);
  if (top <= 0) top = 1;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = values.empty() ? plot_w : plot_w / static_cast<double>(values.size());
  const double y0 = kHeight - kBottom;

  std::string out = open(title) + axes();
  out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(kTop + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(top) + "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double h = std::max(0.0, values[i]) / top * plot_h;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.1;
    const double cx = x + slot * 0.4;
    out += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(y0 - h) + "\" width=\"" + num(slot * 0.8) +
           "\" height=\"" + num(h) + "\" fill=\"" + palette(0) + "\"/>\n";
    const std::string label = i < labels.size() ? escape(labels[i]) : std::string();
    out += "<text x=\"" + num(cx) + "\" y=\"" + num(y0 + 12) + "\" transform=\"rotate(45 " + num(cx) + " " +
           num(y0 + 12) + ")\" font-family=\"sans-serif\" font-size=\"10\">" + label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace saedrift::svg

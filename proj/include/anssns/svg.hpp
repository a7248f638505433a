#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "anssns/errors.hpp"
#include "anssns/mcmc.hpp"
#include "anssns/posterior.hpp"
#include "anssns/simulate.hpp"

namespace anssns {

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

inline void save(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << body;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline constexpr double kPanelWidth = 720.0;
inline constexpr double kPanelHeight = 160.0;
inline constexpr double kMarginLeft = 70.0;
inline constexpr double kMarginRight = 20.0;
inline constexpr double kMarginTop = 24.0;
inline constexpr double kMarginBottom = 26.0;

/// One trace panel at vertical offset `top`.
inline std::string trace_panel(const std::vector<double>& raw, const std::string& name, bool axial,
                               const std::vector<std::size_t>& flags, double top) {
  const double x0 = kMarginLeft, x1 = kPanelWidth - kMarginRight;
  const double y0 = top + kMarginTop, y1 = top + kPanelHeight - kMarginBottom;
  std::vector<double> v = raw;
  double lo, hi;
  if (axial) {
    for (auto& t : v) t = axial_angle(t);
    lo = 0.0;
    hi = std::numbers::pi;
  } else {
    lo = *std::min_element(v.begin(), v.end());
    hi = *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(1e-6, 0.05 * std::abs(hi));
      lo -= pad;
      hi += pad;
    }
  }
  const std::size_t n = v.size();
  const auto px = [&](std::size_t d) {
    return n > 1 ? x0 + (x1 - x0) * static_cast<double>(d) / static_cast<double>(n - 1) : 0.5 * (x0 + x1);
  };
  const auto py = [&](double value) { return y1 - (y1 - y0) * (value - lo) / (hi - lo); };

  std::ostringstream s;
  s << "<g class=\"panel\" data-parameter=\"" << escape(name) << "\">\n";
  s << "<rect class=\"frame\" x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0)
    << "\" height=\"" << num(y1 - y0) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<text class=\"label\" x=\"" << num(x0) << "\" y=\"" << num(y0 - 6) << "\" font-size=\"13\">"
    << escape(name) << "</text>\n";
  for (double t : {lo, 0.5 * (lo + hi), hi})
    s << "<text class=\"tick\" x=\"" << num(x0 - 6) << "\" y=\"" << num(py(t) + 4)
      << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  s << "<text class=\"tick\" x=\"" << num(x0) << "\" y=\"" << num(y1 + 14) << "\" font-size=\"10\">0</text>\n";
  s << "<text class=\"tick\" x=\"" << num(x1) << "\" y=\"" << num(y1 + 14)
    << "\" font-size=\"10\" text-anchor=\"end\">" << (n ? n - 1 : 0) << "</text>\n";

  // Axial traces break where the shorter arc between consecutive draws crosses 0 = pi.
  std::vector<std::size_t> wraps;
  if (axial)
    for (std::size_t d = 1; d < n; ++d)
      if (std::abs(v[d] - v[d - 1]) > 0.5 * std::numbers::pi) wraps.push_back(d);
  std::size_t start = 0;
  for (std::size_t w = 0; w <= wraps.size(); ++w) {
    const std::size_t stop = w < wraps.size() ? wraps[w] : n;
    s << "<polyline class=\"trace\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1\" points=\"";
    for (std::size_t d = start; d < stop; ++d) s << (d > start ? " " : "") << num(px(d)) << ',' << num(py(v[d]));
    s << "\"/>\n";
    start = stop;
  }
  for (const auto d : wraps) {
    const double yy = v[d] < v[d - 1] ? y0 : y1;
    s << "<circle class=\"wrap\" cx=\"" << num(px(d)) << "\" cy=\"" << num(yy) << "\" r=\"3\" fill=\"#d08c00\"/>\n";
  }
  for (const auto d : flags) {
    if (d >= n) continue;
    s << "<line class=\"switch\" x1=\"" << num(px(d)) << "\" x2=\"" << num(px(d)) << "\" y1=\"" << num(y0)
      << "\" y2=\"" << num(y1) << "\" stroke=\"#c0392b\" stroke-dasharray=\"4,3\"/>\n";
  }
  s << "</g>\n";
  return s.str();
}

inline std::string document(double width, double height, const std::string& body) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
    << "<rect class=\"background\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << body << "</svg>\n";
  return s.str();
}

/// Blue below 1, white at 1, red above; log scale clipped at ratio 4.
inline std::string ratio_colour(double r) {
  const double t = std::clamp(std::log(std::max(r, 1e-12)) / std::log(4.0), -1.0, 1.0);
  const auto mix = [&](int c) { return static_cast<int>(std::lround(255.0 + (c - 255.0) * std::abs(t))); };
  char buf[16];
  if (t >= 0.0) std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", 255, mix(40), mix(40));
  else std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(40), mix(90), 255);
  return buf;
}

}  // namespace svg

/// Trace of one chain coordinate against draw index. theta_0 is drawn on
/// [0, pi) with wrap markers; `flags` become vertical markers.
inline void emit_traceplot(const PosteriorSamples& samples, const std::string& parameter, const std::string& path,
                           const std::vector<std::size_t>& flags = {}) {
  if (samples.empty()) throw UsageError("traceplot of an empty chain");
  const auto body = svg::trace_panel(samples.column(parameter), parameter, parameter == "theta_0", flags, 0.0);
  svg::save(path, svg::document(svg::kPanelWidth, svg::kPanelHeight, body));
}

/// One panel per chain coordinate, stacked.
inline void emit_trace_panels(const PosteriorSamples& samples, const std::string& path,
                              const std::vector<std::size_t>& flags = {}) {
  if (samples.empty()) throw UsageError("traceplot of an empty chain");
  std::string body;
  double top = 0.0;
  for (const auto& p : samples.parameters) {
    body += svg::trace_panel(samples.column(p.name), p.name, p.name == "theta_0", flags, top);
    top += svg::kPanelHeight;
  }
  svg::save(path, svg::document(svg::kPanelWidth, top, body));
}

/// Lower envelope, upper envelope and exit map side by side, optionally
/// with the data points over the exit map.
inline void emit_envelope_heatmap(const EnvelopeTest& test, const Window& w, const std::string& path,
                                  const PointPattern* pattern = nullptr) {
  const auto& e = test.envelope;
  if (e.grid.empty()) throw UsageError("envelope heatmap of an empty grid");
  const double size = 240.0, gap = 30.0, top = 30.0;
  const double cw = size / static_cast<double>(e.nx), ch = size / static_cast<double>(e.ny);
  std::vector<bool> exit(e.grid.size(), false);
  for (auto k : test.exits) exit[k] = true;

  std::ostringstream s;
  const char* titles[] = {"lower", "upper", "exits"};
  for (int panel = 0; panel < 3; ++panel) {
    const double left = gap + panel * (size + gap);
    s << "<g class=\"panel\" data-surface=\"" << titles[panel] << "\">\n";
    s << "<text class=\"label\" x=\"" << svg::num(left) << "\" y=\"" << svg::num(top - 8)
      << "\" font-size=\"13\">" << titles[panel] << "</text>\n";
    for (std::size_t k = 0; k < e.grid.size(); ++k) {
      const std::size_t i = k % e.nx, j = k / e.nx;
      std::string fill;
      if (panel == 0) fill = svg::ratio_colour(e.lower[k]);
      else if (panel == 1) fill = svg::ratio_colour(e.upper[k]);
      else fill = exit[k] ? "#c0392b" : "#eeeeee";
      s << "<rect class=\"cell\" x=\"" << svg::num(left + cw * static_cast<double>(i)) << "\" y=\""
        << svg::num(top + size - ch * static_cast<double>(j + 1)) << "\" width=\"" << svg::num(cw)
        << "\" height=\"" << svg::num(ch) << "\" fill=\"" << fill << "\"/>\n";
    }
    if (panel == 2 && pattern)
      for (const auto& p : pattern->points)
        s << "<circle class=\"point\" cx=\"" << svg::num(left + size * (p.x - w.x_min) / w.width()) << "\" cy=\""
          << svg::num(top + size - size * (p.y - w.y_min) / w.height()) << "\" r=\"1.5\" fill=\"black\"/>\n";
    s << "<rect class=\"frame\" x=\"" << svg::num(left) << "\" y=\"" << svg::num(top) << "\" width=\""
      << svg::num(size) << "\" height=\"" << svg::num(size) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    s << "</g>\n";
  }
  svg::save(path, svg::document(gap + 3 * (size + gap), top + size + gap, s.str()));
}

}  // namespace anssns

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crbm/csv.hpp"
#include "crbm/errors.hpp"

namespace crbm::svg {

struct Series {
  std::string label;
  std::vector<double> x, y, err;  // err empty or per point (half-width)
  std::string color = "#1f77b4";
  bool line = false;
};

struct Plot {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  std::vector<double> vlines;  // vertical markers
  bool diagonal = false;       // y = x reference
  int width = 480, height = 360;
};

namespace detail {

inline std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '"') o += "&quot;";
    else o += c;
  }
  return o;
}

}  // namespace detail

inline std::string render(const Plot& p) {
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      double e = s.err.empty() ? 0.0 : s.err[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  for (double v : p.vlines) {
    x0 = std::min(x0, v);
    x1 = std::max(x1, v);
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (p.diagonal) x0 = y0 = std::min(x0, y0), x1 = y1 = std::max(x1, y1);
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double L = 60, R = 20, T = 30, B = 45;
  const double W = p.width - L - R, H = p.height - T - B;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * W; };
  auto sy = [&](double y) { return T + H - (y - y0) / (y1 - y0) * H; };
  auto n = [](double v) { return csv::number(std::round(v * 100) / 100); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << p.width / 2 << "\" y=\"18\" text-anchor=\"middle\">" << detail::esc(p.title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W << "\" height=\"" << H
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    o << "<text x=\"" << n(sx(xv)) << "\" y=\"" << n(T + H + 14) << "\" text-anchor=\"middle\">" << csv::number(xv)
      << "</text>\n";
    o << "<text x=\"" << n(L - 4) << "\" y=\"" << n(sy(yv) + 4) << "\" text-anchor=\"end\">" << csv::number(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << n(L + W / 2) << "\" y=\"" << p.height - 8 << "\" text-anchor=\"middle\">"
    << detail::esc(p.xlabel) << "</text>\n";
  o << "<text x=\"14\" y=\"" << n(T + H / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << n(T + H / 2)
    << ")\">" << detail::esc(p.ylabel) << "</text>\n";
  if (p.diagonal)
    o << "<line x1=\"" << n(sx(x0)) << "\" y1=\"" << n(sy(x0)) << "\" x2=\"" << n(sx(x1)) << "\" y2=\"" << n(sy(x1))
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (double v : p.vlines)
    o << "<line x1=\"" << n(sx(v)) << "\" y1=\"" << T << "\" x2=\"" << n(sx(v)) << "\" y2=\"" << T + H
      << "\" stroke=\"black\" stroke-dasharray=\"5 3\"/>\n";
  int legend = 0;
  for (const auto& s : p.series) {
    if (s.line && s.x.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i])) o << n(sx(s.x[i])) << ',' << n(sy(s.y[i])) << ' ';
      o << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!s.err.empty())
        o << "<line x1=\"" << n(sx(s.x[i])) << "\" y1=\"" << n(sy(s.y[i] - s.err[i])) << "\" x2=\"" << n(sx(s.x[i]))
          << "\" y2=\"" << n(sy(s.y[i] + s.err[i])) << "\" stroke=\"" << s.color << "\"/>\n";
      o << "<circle cx=\"" << n(sx(s.x[i])) << "\" cy=\"" << n(sy(s.y[i])) << "\" r=\"2.5\" fill=\"" << s.color
        << "\"/>\n";
    }
    if (!s.label.empty()) {
      o << "<text x=\"" << n(L + 8) << "\" y=\"" << n(T + 14 + 13 * legend) << "\" fill=\"" << s.color << "\">"
        << detail::esc(s.label) << "</text>\n";
      ++legend;
    }
  }
  o << "</svg>\n";
  return o.str();
}

/// Bar histogram from bin edges and counts, with an optional marker.
inline std::string histogram(const std::string& title, const std::vector<double>& edges, const std::vector<int>& counts,
                             double marker, int width = 360, int height = 240) {
  if (edges.size() != counts.size() + 1) throw ContractError("histogram needs one more edge than counts");
  const double L = 40, R = 10, T = 26, B = 30;
  const double W = width - L - R, H = height - T - B;
  const double lo = edges.front(), hi = edges.back();
  int cmax = 1;
  for (int c : counts) cmax = std::max(cmax, c);
  auto sx = [&](double x) { return L + (x - lo) / (hi - lo) * W; };
  auto n = [](double v) { return csv::number(std::round(v * 100) / 100); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"16\" text-anchor=\"middle\">" << detail::esc(title) << "</text>\n";
  for (std::size_t b = 0; b < counts.size(); ++b) {
    double h = H * counts[b] / cmax;
    o << "<rect x=\"" << n(sx(edges[b])) << "\" y=\"" << n(T + H - h) << "\" width=\""
      << n(std::max(0.5, sx(edges[b + 1]) - sx(edges[b]) - 0.5)) << "\" height=\"" << n(h) << "\" fill=\"#bbbbbb\"/>\n";
  }
  o << "<line x1=\"" << n(sx(marker)) << "\" y1=\"" << T << "\" x2=\"" << n(sx(marker)) << "\" y2=\"" << T + H
    << "\" stroke=\"black\" stroke-dasharray=\"5 3\"/>\n";
  o << "<text x=\"" << L << "\" y=\"" << height - 8 << "\">" << csv::number(lo) << "</text>\n";
  o << "<text x=\"" << width - R << "\" y=\"" << height - 8 << "\" text-anchor=\"end\">" << csv::number(hi)
    << "</text>\n</svg>\n";
  return o.str();
}

inline void save(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path + "'");
  f << content;
}

}  // namespace crbm::svg

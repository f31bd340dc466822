#include "fpu/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu {

namespace {

constexpr double W = 640, H = 420, ML = 80, MR = 20, MT = 40, MB = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

std::string coord(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return t;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0.0); };
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return ML + (x - x0) / (x1 - x0) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (y - y0) / (y1 - y0) * (H - MT - MB); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title) << "</text>\n";
  o << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  for (double t : ticks(x0, x1)) {
    o << "<line x1=\"" << coord(px(t)) << "\" y1=\"" << H - MB << "\" x2=\"" << coord(px(t)) << "\" y2=\"" << H - MB + 5
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << coord(px(t)) << "\" y=\"" << H - MB + 18 << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    o << "<line x1=\"" << ML - 5 << "\" y1=\"" << coord(py(t)) << "\" x2=\"" << ML << "\" y2=\"" << coord(py(t))
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << ML - 8 << "\" y=\"" << coord(py(t) + 4) << "\" text-anchor=\"end\">"
      << (spec.log_y ? "1e" + num(t) : num(t)) << "</text>\n";
  }
  o << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << escape(spec.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << (MT + H - MB) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (MT + H - MB) / 2 << ")\">" << escape(spec.ylabel) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kColors[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) o << coord(px(s.x[i])) << ',' << coord(py(ty(s.y[i]))) << ' ';
    o << "\"/>\n";
    const double ly = MT + 14.0 * static_cast<double>(k) + 6;
    o << "<line x1=\"" << W - MR - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - MR - 130 << "\" y2=\"" << ly << "\" stroke=\""
      << color << "\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
    o << "<text x=\"" << W - MR - 125 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::string& path, const PlotSpec& spec) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << render_svg(spec);
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace fpu

#include "codp/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace codp::io {

namespace {

constexpr double kW = 720, kH = 440;
constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(x) < 1e-12 ? 0.0 : x);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return lo > hi; }
};

double nice_step(double span) {
  const double raw = span / 5;
  const double mag = std::pow(10, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10 * mag;
}

double tick_step(double span) {
  const double s = nice_step(span);
  return span / s < 4 ? s / 2 : s;
}

// Expands the range outward to whole ticks.
void pad(Range& r) {
  if (r.empty()) r = {0, 1};
  if (r.hi - r.lo < 1e-12) {
    r.lo -= 0.5 * std::max(1.0, std::abs(r.lo));
    r.hi += 0.5 * std::max(1.0, std::abs(r.hi));
  }
  const double s = nice_step(r.hi - r.lo);
  r.lo = std::floor(r.lo / s) * s;
  r.hi = std::ceil(r.hi / s) * s;
}

}  // namespace

std::string render_svg(const Figure& fig) {
  Range xr, yr;
  for (const auto& b : fig.bands) {
    for (double v : b.x) xr.add(v);
    for (const auto* ys : {&b.lo, &b.mid, &b.hi})
      for (double v : *ys) yr.add(v);
  }
  for (const auto& s : fig.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& b : fig.bars) {
    xr.add(b.lo);
    xr.add(b.hi);
    yr.add(0);
    yr.add(b.height);
  }
  pad(xr);
  pad(yr);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto X = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(fig.title) + "</text>\n";

  // grid and ticks
  const double xs = tick_step(xr.hi - xr.lo), ys = tick_step(yr.hi - yr.lo);
  for (double t = std::ceil(xr.lo / xs - 1e-9) * xs; t <= xr.hi + xs * 1e-6; t += xs) {
    o += "<line x1=\"" + fmt(X(t)) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(X(t)) + "\" y2=\"" + fmt(kTop + ph) +
         "\" stroke=\"#e5e5e5\"/>\n";
    o += "<text x=\"" + fmt(X(t)) + "\" y=\"" + fmt(kTop + ph + 18) + "\" text-anchor=\"middle\">" + tick_label(t) +
         "</text>\n";
  }
  for (double t = std::ceil(yr.lo / ys - 1e-9) * ys; t <= yr.hi + ys * 1e-6; t += ys) {
    o += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(Y(t)) + "\" x2=\"" + fmt(kLeft + pw) + "\" y2=\"" + fmt(Y(t)) +
         "\" stroke=\"#e5e5e5\"/>\n";
    o += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(Y(t) + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
         "</text>\n";
  }
  o += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  o += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kH - 16) + "\" text-anchor=\"middle\">" +
       escape(fig.xlabel) + "</text>\n";
  o += "<text transform=\"translate(20," + fmt(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(fig.ylabel) + "</text>\n";

  for (const auto& b : fig.bars)
    o += "<rect x=\"" + fmt(X(b.lo)) + "\" y=\"" + fmt(Y(b.height)) + "\" width=\"" + fmt(X(b.hi) - X(b.lo)) +
         "\" height=\"" + fmt(Y(0) - Y(b.height)) + "\" fill=\"#9ecae1\" stroke=\"#3182bd\"/>\n";

  int colour = 0;
  std::vector<std::pair<std::string, const char*>> legend;
  for (const auto& b : fig.bands) {
    const char* c = kPalette[colour++ % 8];
    std::string upper, lower, mid;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (!std::isfinite(b.lo[i]) || !std::isfinite(b.hi[i])) continue;
      upper += fmt(X(b.x[i])) + "," + fmt(Y(b.hi[i])) + " ";
      lower = fmt(X(b.x[i])) + "," + fmt(Y(b.lo[i])) + " " + lower;
      if (std::isfinite(b.mid[i])) mid += fmt(X(b.x[i])) + "," + fmt(Y(b.mid[i])) + " ";
    }
    if (!upper.empty())
      o += std::string("<polygon points=\"") + upper + lower + "\" fill=\"" + c + "\" fill-opacity=\"0.25\"/>\n";
    if (!mid.empty())
      o += std::string("<polyline points=\"") + mid + "\" fill=\"none\" stroke=\"" + c + "\" stroke-width=\"2\"/>\n";
    legend.emplace_back(b.name, c);
  }
  for (const auto& s : fig.series) {
    const char* c = kPalette[colour++ % 8];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (s.markers)
        o += "<circle cx=\"" + fmt(X(s.x[i])) + "\" cy=\"" + fmt(Y(s.y[i])) + "\" r=\"3.5\" fill=\"" + c + "\"/>\n";
      else
        pts += fmt(X(s.x[i])) + "," + fmt(Y(s.y[i])) + " ";
    }
    if (!pts.empty())
      o += std::string("<polyline points=\"") + pts + "\" fill=\"none\" stroke=\"" + c + "\" stroke-width=\"2\"/>\n";
    legend.emplace_back(s.name, c);
  }

  double ly = kTop + 10;
  for (const auto& [name, c] : legend) {
    if (name.empty()) continue;
    o += std::string("<rect x=\"") + fmt(kLeft + pw + 14) + "\" y=\"" + fmt(ly - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
         c + "\"/>\n";
    o += "<text x=\"" + fmt(kLeft + pw + 32) + "\" y=\"" + fmt(ly + 1) + "\">" + escape(name) + "</text>\n";
    ly += 18;
  }
  o += "</svg>\n";
  return o;
}

}  // namespace codp::io

#pragma once

// Minimal deterministic SVG charts: axes with ticks, line/marker series,
// shaded quantile bands and histogram bars. Coordinates are printed with a
// fixed precision so equal data gives equal bytes.

#include <string>
#include <vector>

namespace codp::io {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool markers = false;  // markers only, no connecting line
};

/// Shaded area between lo and hi with a centre line.
struct Band {
  std::string name;
  std::vector<double> x, lo, mid, hi;
};

struct Bar {
  double lo = 0, hi = 0, height = 0;
};

struct Figure {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Band> bands;
  std::vector<Series> series;
  std::vector<Bar> bars;
};

/// Non-finite points are skipped.
std::string render_svg(const Figure& fig);

}  // namespace codp::io

#pragma once

// Minimal SVG emission for the benchmark plots: a canvas with shape
// primitives, linear axes with tick labeling, two small colormaps, and a
// marching-squares contour tracer. Numbers are printed with %.6g so output
// is deterministic across runs and platforms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wesbench/common.hpp"

namespace wesbench {
namespace svg {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string escape_text(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    default: out += c;
    }
  }
  return out;
}

class Canvas {
public:
  Canvas(double width, double height) : width_(width), height_(height) {
    body_ += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" +
             fmt(height) + "\" fill=\"#ffffff\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double width = 1.0) {
    body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" +
             fmt(x2) + "\" y2=\"" + fmt(y2) + "\" stroke=\"" + stroke +
             "\" stroke-width=\"" + fmt(width) + "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none", double stroke_width = 0.0) {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" +
             fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\"";
    if (stroke != "none")
      body_ += " stroke=\"" + stroke + "\" stroke-width=\"" +
               fmt(stroke_width) + "\"";
    body_ += "/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill,
              double opacity = 1.0) {
    body_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" +
             fmt(r) + "\" fill=\"" + fill + "\"";
    if (opacity < 1.0)
      body_ += " fill-opacity=\"" + fmt(opacity) + "\"";
    body_ += "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.5,
                const std::string& fill = "none") {
    if (pts.empty())
      return;
    body_ += "<polyline points=\"";
    for (const auto& p : pts)
      body_ += fmt(p.first) + "," + fmt(p.second) + " ";
    body_ += "\" fill=\"" + fill + "\" stroke=\"" + stroke +
             "\" stroke-width=\"" + fmt(width) + "\"/>\n";
  }

  /// A path of disjoint segments (one M/L pair per segment).
  void segments(const std::vector<std::array<double, 4>>& segs,
                const std::string& stroke, double width = 1.2) {
    if (segs.empty())
      return;
    std::string d;
    for (const auto& s : segs)
      d += "M" + fmt(s[0]) + " " + fmt(s[1]) + "L" + fmt(s[2]) + " " +
           fmt(s[3]);
    body_ += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + stroke +
             "\" stroke-width=\"" + fmt(width) + "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start",
            const std::string& fill = "#222222") {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) +
             "\" font-family=\"sans-serif\" font-size=\"" + fmt(size) +
             "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
             escape_text(s) + "</text>\n";
  }

  void text_vertical(double x, double y, const std::string& s,
                     double size = 12.0) {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) +
             "\" font-family=\"sans-serif\" font-size=\"" + fmt(size) +
             "\" text-anchor=\"middle\" fill=\"#222222\" transform=\"rotate(-90 " +
             fmt(x) + " " + fmt(y) + ")\">" + escape_text(s) + "</text>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           fmt(width_) + "\" height=\"" + fmt(height_) + "\" viewBox=\"0 0 " +
           fmt(width_) + " " + fmt(height_) + "\">\n" + body_ + "</svg>\n";
  }

private:
  double width_, height_;
  std::string body_;
};

// --- Data-to-pixel mapping -----------------------------------------------

struct Axes {
  double px0, py0, pw, ph;         // pixel frame (py0 = top edge)
  double xmin, xmax, ymin, ymax;   // data ranges

  double px(double x) const {
    return px0 + (x - xmin) / (xmax - xmin) * pw;
  }
  double py(double y) const {
    return py0 + ph - (y - ymin) / (ymax - ymin) * ph;
  }
};

/// Widens a degenerate range so the axis always has extent.
inline void pad_range(double& lo, double& hi, double frac = 0.05) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
    return;
  }
  const double pad = (hi - lo) * frac;
  lo -= pad;
  hi += pad;
}

/// 1-2-5 tick spacing covering the range with 4..8 ticks.
inline std::vector<double> nice_ticks(double lo, double hi) {
  const double range = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(range / 4.0)));
  const double candidates[] = {1.0, 2.0, 5.0, 10.0};
  for (const double c : candidates) {
    if (range / (step * c) <= 8.0) {
      step *= c;
      break;
    }
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) {
    // snap values that should be exactly zero
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

inline void draw_frame(Canvas& c, const Axes& a, const std::string& xlabel,
                       const std::string& ylabel) {
  c.rect(a.px0, a.py0, a.pw, a.ph, "none", "#555555", 1.0);
  for (const double t : nice_ticks(a.xmin, a.xmax)) {
    const double x = a.px(t);
    c.line(x, a.py0 + a.ph, x, a.py0 + a.ph + 4, "#555555", 1.0);
    c.text(x, a.py0 + a.ph + 16, fmt(t), 10.0, "middle");
  }
  for (const double t : nice_ticks(a.ymin, a.ymax)) {
    const double y = a.py(t);
    c.line(a.px0 - 4, y, a.px0, y, "#555555", 1.0);
    c.text(a.px0 - 7, y + 3.5, fmt(t), 10.0, "end");
  }
  if (!xlabel.empty())
    c.text(a.px0 + a.pw / 2, a.py0 + a.ph + 32, xlabel, 12.0, "middle");
  if (!ylabel.empty())
    c.text_vertical(a.px0 - 40, a.py0 + a.ph / 2, ylabel);
}

// --- Colormaps -----------------------------------------------------------

namespace detail {

inline std::string hex_color(double r, double g, double b) {
  const auto channel = [](double v) {
    const int x =
        std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
    return x;
  };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(r), channel(g),
                channel(b));
  return buf;
}

// Sampled perceptually uniform map (dark purple -> teal -> yellow).
inline constexpr double kSequential[9][3] = {
    {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
    {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
    {0.135, 0.659, 0.518}, {0.477, 0.821, 0.318}, {0.993, 0.906, 0.144}};

} // namespace detail

/// t in [0, 1] -> sequential colormap hex string.
inline std::string sequential_color(double t) {
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const int i = std::min(static_cast<int>(t), 7);
  const double f = t - i;
  const auto& a = detail::kSequential[i];
  const auto& b = detail::kSequential[i + 1];
  return detail::hex_color(a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]),
                           a[2] + f * (b[2] - a[2]));
}

/// t in [-1, 1] -> blue/white/red diverging hex string.
inline std::string diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  if (t < 0.0)
    return detail::hex_color(1.0 + t * (1.0 - 0.23), 1.0 + t * (1.0 - 0.30),
                             1.0 + t * (1.0 - 0.75));
  return detail::hex_color(1.0 - t * (1.0 - 0.70), 1.0 - t * (1.0 - 0.09),
                           1.0 - t * (1.0 - 0.17));
}

/// Categorical palette for macrostate coloring.
inline std::string category_color(int i) {
  static const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                   "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
                                   "#ccb974", "#64b5cd"};
  return kPalette[((i % 10) + 10) % 10];
}

// --- Marching-squares contours -------------------------------------------

/// Extracts iso-contour segments of `field` (rows = y index, cols = x index)
/// at `level`, in grid coordinates (x = column, y = row, both fractional).
inline std::vector<std::array<double, 4>>
contour_segments(const Eigen::MatrixXd& field, double level) {
  std::vector<std::array<double, 4>> segs;
  const auto interp = [level](double a, double b) {
    const double d = b - a;
    return d == 0.0 ? 0.5 : (level - a) / d;
  };
  for (Eigen::Index r = 0; r + 1 < field.rows(); ++r) {
    for (Eigen::Index c = 0; c + 1 < field.cols(); ++c) {
      const double v00 = field(r, c), v01 = field(r, c + 1);
      const double v10 = field(r + 1, c), v11 = field(r + 1, c + 1);
      int mask = 0;
      if (v00 >= level) mask |= 1;
      if (v01 >= level) mask |= 2;
      if (v11 >= level) mask |= 4;
      if (v10 >= level) mask |= 8;
      if (mask == 0 || mask == 15)
        continue;
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      // Edge midpoints by linear interpolation: top, right, bottom, left.
      const double tx = x + interp(v00, v01), ty = y;
      const double rx = x + 1, ry = y + interp(v01, v11);
      const double bx = x + interp(v10, v11), by = y + 1;
      const double lx = x, ly = y + interp(v00, v10);
      const auto emit = [&segs](double x1, double y1, double x2, double y2) {
        segs.push_back({x1, y1, x2, y2});
      };
      switch (mask) {
      case 1: case 14: emit(lx, ly, tx, ty); break;
      case 2: case 13: emit(tx, ty, rx, ry); break;
      case 3: case 12: emit(lx, ly, rx, ry); break;
      case 4: case 11: emit(rx, ry, bx, by); break;
      case 6: case 9:  emit(tx, ty, bx, by); break;
      case 7: case 8:  emit(lx, ly, bx, by); break;
      case 5:          emit(lx, ly, tx, ty); emit(rx, ry, bx, by); break;
      case 10:         emit(tx, ty, rx, ry); emit(lx, ly, bx, by); break;
      }
    }
  }
  return segs;
}

} // namespace svg
} // namespace wesbench

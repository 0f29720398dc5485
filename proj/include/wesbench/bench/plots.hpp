#pragma once

// The benchmark's plot set, rendered straight to SVG: TIC-space density
// contours (reference vs. model), WE exploration colored by iteration, the
// contact-map difference heat map, 1D observable distribution panels, a
// macrostate-colored TIC scatter, and the MSM-reweighting overlay.

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wesbench/bench/svg.hpp"
#include "wesbench/metrics.hpp"

namespace wesbench {
namespace plots {

namespace detail {

inline constexpr const char* kReferenceColor = "#4c72b0";
inline constexpr const char* kModelColor = "#dd8452";

/// Deterministic thinning to at most `cap` rows, keeping weights aligned.
inline void thin(Eigen::MatrixXd& pts, Eigen::VectorXd& w, Eigen::Index cap) {
  const Eigen::Index n = pts.rows();
  if (n <= cap)
    return;
  const Eigen::Index stride = (n + cap - 1) / cap;
  const Eigen::Index kept = (n + stride - 1) / stride;
  Eigen::MatrixXd p2(kept, pts.cols());
  Eigen::VectorXd w2(kept);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < n; i += stride) {
    p2.row(at) = pts.row(i);
    w2(at) = w(i);
    ++at;
  }
  pts = std::move(p2);
  w = std::move(w2);
}

/// KDE of weighted 2D points sampled on a grid; rows index y, columns x.
inline Eigen::MatrixXd density_field(const Eigen::MatrixXd& pts,
                                     const Eigen::VectorXd& weights,
                                     double xmin, double xmax, double ymin,
                                     double ymax, int grid) {
  Eigen::MatrixXd points = pts;
  Eigen::VectorXd w = weights;
  thin(points, w, 3000);
  const Kde kde = weighted_kde(points, w);
  Eigen::MatrixXd field(grid, grid);
  for (int r = 0; r < grid; ++r) {
    const double y = ymin + (ymax - ymin) * r / (grid - 1);
    for (int c = 0; c < grid; ++c) {
      const double x = xmin + (xmax - xmin) * c / (grid - 1);
      field(r, c) = kde.evaluate(x, y);
    }
  }
  return field;
}

inline void draw_contours(svg::Canvas& canvas, const svg::Axes& axes,
                          const Eigen::MatrixXd& field, double xmin,
                          double xmax, double ymin, double ymax,
                          const std::string& color) {
  const double peak = field.maxCoeff();
  if (!(peak > 0.0))
    return;
  const int grid = static_cast<int>(field.rows());
  const auto to_px = [&](double gx) {
    return axes.px(xmin + (xmax - xmin) * gx / (grid - 1));
  };
  const auto to_py = [&](double gy) {
    return axes.py(ymin + (ymax - ymin) * gy / (grid - 1));
  };
  for (const double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    auto segs = svg::contour_segments(field, frac * peak);
    for (auto& s : segs)
      s = {to_px(s[0]), to_py(s[1]), to_px(s[2]), to_py(s[3])};
    canvas.segments(segs, color, 1.3);
  }
}

inline void legend_line(svg::Canvas& canvas, double x, double y,
                        const std::string& color, const std::string& label) {
  canvas.line(x, y, x + 22, y, color, 2.0);
  canvas.text(x + 28, y + 4, label, 11.0);
}

inline void vertical_colorbar(svg::Canvas& canvas, double x, double y,
                              double h, const std::string& lo_label,
                              const std::string& hi_label, bool diverging) {
  const int steps = 24;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / steps;
    const std::string color = diverging
                                  ? svg::diverging_color(2.0 * t - 1.0)
                                  : svg::sequential_color(t);
    canvas.rect(x, y + h - (i + 1) * h / steps, 14, h / steps + 0.5, color);
  }
  canvas.rect(x, y, 14, h, "none", "#555555", 0.8);
  canvas.text(x + 18, y + h, lo_label, 10.0);
  canvas.text(x + 18, y + 8, hi_label, 10.0);
}

} // namespace detail

/// Reference vs. model density in the leading two TIC coordinates, drawn as
/// KDE iso-contours over a shared range.
inline std::string tic_contour_overlay(const Eigen::MatrixXd& gt_tics,
                                       const Eigen::VectorXd& gt_weights,
                                       const Eigen::MatrixXd& model_tics,
                                       const Eigen::VectorXd& model_weights) {
  double xmin = std::min(gt_tics.col(0).minCoeff(), model_tics.col(0).minCoeff());
  double xmax = std::max(gt_tics.col(0).maxCoeff(), model_tics.col(0).maxCoeff());
  double ymin = std::min(gt_tics.col(1).minCoeff(), model_tics.col(1).minCoeff());
  double ymax = std::max(gt_tics.col(1).maxCoeff(), model_tics.col(1).maxCoeff());
  svg::pad_range(xmin, xmax);
  svg::pad_range(ymin, ymax);

  svg::Canvas canvas(560, 440);
  svg::Axes axes{70, 40, 440, 340, xmin, xmax, ymin, ymax};
  const int grid = 72;
  const Eigen::MatrixXd gt_field = detail::density_field(
      gt_tics.leftCols(2), gt_weights, xmin, xmax, ymin, ymax, grid);
  const Eigen::MatrixXd model_field = detail::density_field(
      model_tics.leftCols(2), model_weights, xmin, xmax, ymin, ymax, grid);
  detail::draw_contours(canvas, axes, gt_field, xmin, xmax, ymin, ymax,
                        detail::kReferenceColor);
  detail::draw_contours(canvas, axes, model_field, xmin, xmax, ymin, ymax,
                        detail::kModelColor);
  svg::draw_frame(canvas, axes, "TIC 0", "TIC 1");
  canvas.text(70, 25, "TIC density: reference vs. model", 14.0);
  detail::legend_line(canvas, 380, 55, detail::kReferenceColor, "reference");
  detail::legend_line(canvas, 380, 72, detail::kModelColor, "model");
  return canvas.str();
}

/// WE walker positions in TIC space, colored from early (dark) to late
/// (bright) iterations.
inline std::string
we_exploration_scatter(const std::vector<std::array<double, 3>>& points,
                       int n_iterations) {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  if (!points.empty()) {
    xmin = xmax = points[0][0];
    ymin = ymax = points[0][1];
    for (const auto& p : points) {
      xmin = std::min(xmin, p[0]);
      xmax = std::max(xmax, p[0]);
      ymin = std::min(ymin, p[1]);
      ymax = std::max(ymax, p[1]);
    }
  }
  svg::pad_range(xmin, xmax);
  svg::pad_range(ymin, ymax);

  svg::Canvas canvas(600, 440);
  svg::Axes axes{70, 40, 440, 340, xmin, xmax, ymin, ymax};
  const double denom = std::max(1, n_iterations - 1);
  for (const auto& p : points)
    canvas.circle(axes.px(p[0]), axes.py(p[1]), 2.0,
                  svg::sequential_color(p[2] / denom), 0.7);
  svg::draw_frame(canvas, axes, "TIC 0", "TIC 1");
  canvas.text(70, 25, "WE exploration by iteration", 14.0);
  detail::vertical_colorbar(canvas, 530, 60, 200, "0",
                            std::to_string(std::max(0, n_iterations - 1)),
                            false);
  return canvas.str();
}

/// Pairwise mean-distance difference (model - reference) as a heat map.
inline std::string contact_map_heatmap(const Eigen::MatrixXd& diff) {
  const int n = static_cast<int>(diff.rows());
  const double scale = std::max(diff.cwiseAbs().maxCoeff(), 1e-12);
  svg::Canvas canvas(560, 460);
  const double px0 = 70, py0 = 40, side = 360;
  const double cell = side / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      canvas.rect(px0 + j * cell, py0 + i * cell, cell + 0.3, cell + 0.3,
                  svg::diverging_color(diff(i, j) / scale));
  canvas.rect(px0, py0, side, side, "none", "#555555", 1.0);
  const int tick = std::max(1, n / 5);
  for (int i = 0; i < n; i += tick) {
    canvas.text(px0 + (i + 0.5) * cell, py0 + side + 16, std::to_string(i),
                10.0, "middle");
    canvas.text(px0 - 7, py0 + (i + 0.5) * cell + 3.5, std::to_string(i),
                10.0, "end");
  }
  canvas.text(px0 + side / 2, py0 + side + 34, "bead index", 12.0, "middle");
  canvas.text_vertical(px0 - 36, py0 + side / 2, "bead index");
  canvas.text(px0, 25, "Contact-map difference (model - reference)", 14.0);
  detail::vertical_colorbar(canvas, 470, py0 + 40, 200,
                            "-" + svg::fmt(scale), "+" + svg::fmt(scale),
                            true);
  return canvas.str();
}

struct DistributionPanel {
  std::string title;
  Histogram1D reference;
  Histogram1D model;
};

namespace detail {

inline void draw_panel(svg::Canvas& canvas, const DistributionPanel& panel,
                       double px0, double py0, double pw, double ph) {
  const Histogram1D& g = panel.reference;
  const Histogram1D& m = panel.model;
  double xmin = g.edges.front(), xmax = g.edges.back();
  xmin = std::min(xmin, m.edges.front());
  xmax = std::max(xmax, m.edges.back());
  const auto density = [](const Histogram1D& h, std::size_t b) {
    return h.masses[b] / (h.edges[b + 1] - h.edges[b]);
  };
  double peak = 0.0;
  for (std::size_t b = 0; b < g.masses.size(); ++b)
    peak = std::max(peak, density(g, b));
  for (std::size_t b = 0; b < m.masses.size(); ++b)
    peak = std::max(peak, density(m, b));
  if (!(peak > 0.0))
    peak = 1.0;
  svg::Axes axes{px0, py0, pw, ph, xmin, xmax, 0.0, peak * 1.08};
  const auto curve = [&](const Histogram1D& h, const char* color) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(h.masses.size());
    for (std::size_t b = 0; b < h.masses.size(); ++b)
      pts.emplace_back(axes.px(h.center(static_cast<int>(b))),
                       axes.py(density(h, b)));
    canvas.polyline(pts, color, 1.6);
  };
  curve(g, kReferenceColor);
  curve(m, kModelColor);
  svg::draw_frame(canvas, axes, "", "");
  canvas.text(px0 + pw / 2, py0 - 8, panel.title, 12.0, "middle");
}

} // namespace detail

/// Up to four 1D observable distributions, reference vs. model, one panel
/// each (gyration radius, bonds, angles, dihedrals for chain systems).
inline std::string
distribution_panels(const std::vector<DistributionPanel>& panels) {
  svg::Canvas canvas(780, 560);
  canvas.text(60, 25, "Observable distributions: reference vs. model", 14.0);
  detail::legend_line(canvas, 480, 20, detail::kReferenceColor, "reference");
  detail::legend_line(canvas, 600, 20, detail::kModelColor, "model");
  const double pw = 290, ph = 180;
  for (std::size_t i = 0; i < panels.size() && i < 4; ++i) {
    const double px0 = 60 + (i % 2) * 380;
    const double py0 = 60 + (i / 2) * 250;
    detail::draw_panel(canvas, panels[i], px0, py0, pw, ph);
  }
  return canvas.str();
}

/// Model frames in TIC space colored by macrostate.
inline std::string
macrostate_scatter(const Eigen::MatrixXd& tics,
                   const std::vector<int>& macrostate, int n_macrostates) {
  double xmin = tics.col(0).minCoeff(), xmax = tics.col(0).maxCoeff();
  double ymin = tics.col(1).minCoeff(), ymax = tics.col(1).maxCoeff();
  svg::pad_range(xmin, xmax);
  svg::pad_range(ymin, ymax);
  svg::Canvas canvas(600, 440);
  svg::Axes axes{70, 40, 440, 340, xmin, xmax, ymin, ymax};
  Eigen::Index stride =
      std::max<Eigen::Index>(1, tics.rows() / 6000); // keep files small
  for (Eigen::Index i = 0; i < tics.rows(); i += stride)
    canvas.circle(axes.px(tics(i, 0)), axes.py(tics(i, 1)), 2.0,
                  svg::category_color(macrostate[static_cast<std::size_t>(i)]),
                  0.7);
  svg::draw_frame(canvas, axes, "TIC 0", "TIC 1");
  canvas.text(70, 25, "Macrostates in TIC space", 14.0);
  for (int s = 0; s < n_macrostates && s < 10; ++s) {
    canvas.circle(530, 60 + 18 * s, 4.0, svg::category_color(s));
    canvas.text(540, 64 + 18 * s, "state " + std::to_string(s), 11.0);
  }
  return canvas.str();
}

/// KDE of one observable under WE weights vs. MSM-reweighted weights.
inline std::string msm_overlay(const std::string& observable,
                               const std::vector<double>& values,
                               const std::vector<double>& we_weights,
                               const std::vector<double>& msm_weights) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    pts(static_cast<Eigen::Index>(i), 0) = values[i];
  double xmin = pts.col(0).minCoeff(), xmax = pts.col(0).maxCoeff();
  svg::pad_range(xmin, xmax);

  const auto curve_of = [&](const std::vector<double>& w) {
    Eigen::MatrixXd p = pts;
    Eigen::VectorXd wv(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i)
      wv(static_cast<Eigen::Index>(i)) = w[i];
    plots::detail::thin(p, wv, 3000);
    const Kde kde = weighted_kde(p, wv);
    std::vector<std::pair<double, double>> out;
    const int n = 220;
    for (int i = 0; i < n; ++i) {
      const double x = xmin + (xmax - xmin) * i / (n - 1);
      out.emplace_back(x, kde.evaluate(x));
    }
    return out;
  };
  const auto raw = curve_of(we_weights);
  const auto rew = curve_of(msm_weights);
  double peak = 0.0;
  for (const auto& p : raw)
    peak = std::max(peak, p.second);
  for (const auto& p : rew)
    peak = std::max(peak, p.second);
  if (!(peak > 0.0))
    peak = 1.0;

  svg::Canvas canvas(560, 440);
  svg::Axes axes{70, 40, 440, 340, xmin, xmax, 0.0, peak * 1.08};
  const auto draw = [&](const std::vector<std::pair<double, double>>& c,
                        const char* color) {
    std::vector<std::pair<double, double>> px;
    px.reserve(c.size());
    for (const auto& p : c)
      px.emplace_back(axes.px(p.first), axes.py(p.second));
    canvas.polyline(px, color, 1.6);
  };
  draw(raw, detail::kReferenceColor);
  draw(rew, detail::kModelColor);
  svg::draw_frame(canvas, axes, observable, "density");
  canvas.text(70, 25, "WE weights vs. MSM reweighting", 14.0);
  detail::legend_line(canvas, 360, 55, detail::kReferenceColor, "WE weights");
  detail::legend_line(canvas, 360, 72, detail::kModelColor, "MSM reweighted");
  return canvas.str();
}

} // namespace plots
} // namespace wesbench

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wesbench/common.hpp"
#include "wesbench/core.hpp"
#include "wesbench/tica.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// The evaluation suite: weighted histograms and KDEs, KL and Wasserstein-1
// divergences, contact-map differences, radius of gyration, bond / angle /
// dihedral series, grid coverage, and the combined report.
// ---------------------------------------------------------------------------

struct Histogram1D {
  std::vector<double> edges;  // strictly increasing, masses.size() + 1
  std::vector<double> masses; // nonnegative, sum 1

  double center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

/// Weighted histogram over the given edges; an empty weight vector means
/// uniform weights. Out-of-range values clamp into the end bins.
inline Histogram1D histogram(const std::vector<double>& values,
                             const std::vector<double>& weights,
                             std::vector<double> edges) {
  if (edges.size() < 2)
    throw Error("histogram: need at least two edges");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1]))
      throw Error("histogram: edges must be strictly increasing");
  if (values.empty())
    throw EmptyPointSet("histogram: no values");
  if (!weights.empty() && weights.size() != values.size())
    throw DimensionMismatch("histogram: one weight per value required");

  Histogram1D h;
  h.masses.assign(edges.size() - 1, 0.0);
  const double lo = edges.front(), hi = edges.back();
  const int nb = static_cast<int>(h.masses.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    int b = static_cast<int>(std::floor((values[i] - lo) / (hi - lo) * nb));
    b = std::max(0, std::min(nb - 1, b));
    h.masses[static_cast<std::size_t>(b)] += w;
  }
  double total = 0.0;
  for (const double m : h.masses)
    total += m;
  if (!(total > 0.0))
    throw AllZeroWeights("histogram: total mass is zero");
  detail::exact_renormalize(h.masses);
  h.edges = std::move(edges);
  return h;
}

inline std::vector<double> uniform_edges(double lo, double hi, int n_bins) {
  if (!(lo < hi)) { // degenerate support: widen to unit width
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(static_cast<std::size_t>(n_bins) + 1);
  for (int i = 0; i <= n_bins; ++i)
    edges[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / n_bins;
  return edges;
}

/// Two histograms on one shared grid spanning the union of both supports —
/// the layout every KL comparison requires.
inline std::pair<Histogram1D, Histogram1D> paired_histograms(
    const std::vector<double>& p_values, const std::vector<double>& p_weights,
    const std::vector<double>& q_values, const std::vector<double>& q_weights,
    int n_bins = 100) {
  if (p_values.empty() || q_values.empty())
    throw EmptyPointSet("paired_histograms: empty input");
  double lo = p_values.front(), hi = p_values.front();
  for (const double v : p_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const double v : q_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const std::vector<double> edges = uniform_edges(lo, hi, n_bins);
  return {histogram(p_values, p_weights, edges),
          histogram(q_values, q_weights, edges)};
}

/// D_KL(p || q) in nats with both sides floored at epsilon before the ratio;
/// clamped at zero so the floor can never produce a negative total. Reported
/// tables use the direction D_KL(ground truth || model).
inline double kl_divergence(const Histogram1D& p, const Histogram1D& q,
                            double epsilon = 1e-12) {
  if (p.edges != q.edges)
    throw SupportMismatch("kl_divergence: histograms use different grids");
  double kl = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b) {
    const double pb = std::max(p.masses[b], epsilon);
    const double qb = std::max(q.masses[b], epsilon);
    kl += pb * std::log(pb / qb);
  }
  return std::max(kl, 0.0);
}

/// Exact 1D Wasserstein-1 between the histograms read as discrete measures
/// at their bin centers: the integral of |F_p - F_q| over the merged support.
/// On a shared uniform grid this reduces to sum |cum(p) - cum(q)| * width.
inline double w1_distance(const Histogram1D& p, const Histogram1D& q) {
  struct Atom {
    double x, pm, qm;
  };
  std::vector<Atom> atoms;
  atoms.reserve(p.masses.size() + q.masses.size());
  for (std::size_t b = 0; b < p.masses.size(); ++b)
    atoms.push_back({p.center(b), p.masses[b], 0.0});
  for (std::size_t b = 0; b < q.masses.size(); ++b)
    atoms.push_back({q.center(b), 0.0, q.masses[b]});
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.x < b.x; });

  double dist = 0.0, cum_p = 0.0, cum_q = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    cum_p += atoms[i].pm;
    cum_q += atoms[i].qm;
    if (i + 1 < atoms.size())
      dist += std::abs(cum_p - cum_q) * (atoms[i + 1].x - atoms[i].x);
  }
  return dist;
}

// ------------------------------ KDE ----------------------------------------

struct Kde {
  Eigen::MatrixXd points;    // n x dims, dims in {1, 2}
  Eigen::VectorXd weights;   // sum 1
  Eigen::VectorXd bandwidth; // per dimension, > 0

  double evaluate(const Eigen::RowVectorXd& x) const {
    static constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    double density = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      double k = 1.0;
      for (Eigen::Index d = 0; d < points.cols(); ++d) {
        const double z = (x[d] - points(i, d)) / bandwidth[d];
        k *= inv_sqrt_2pi / bandwidth[d] * std::exp(-0.5 * z * z);
      }
      density += weights[i] * k;
    }
    return density;
  }
  double evaluate(double x) const {
    Eigen::RowVectorXd v(1);
    v[0] = x;
    return evaluate(v);
  }
  double evaluate(double x, double y) const {
    Eigen::RowVectorXd v(2);
    v[0] = x;
    v[1] = y;
    return evaluate(v);
  }
};

/// Gaussian product-kernel KDE over weighted samples. bandwidth = 0 selects
/// Scott's rule on the weighted sample, with the effective sample size
/// n_eff = 1 / sum(w_i^2).
inline Kde weighted_kde(const Eigen::MatrixXd& points,
                        const Eigen::VectorXd& weights, double bandwidth = 0.0) {
  if (points.rows() == 0)
    throw EmptyPointSet("weighted_kde: no samples");
  if (points.cols() < 1 || points.cols() > 2)
    throw DimensionMismatch("weighted_kde: dims must be 1 or 2");
  if (weights.size() != points.rows())
    throw DimensionMismatch("weighted_kde: one weight per sample required");

  Kde kde;
  kde.points = points;
  kde.weights = weights;
  const double total = weights.sum();
  if (!(total > 0.0))
    throw AllZeroWeights("weighted_kde: total weight is zero");
  kde.weights /= total;

  const Eigen::Index d = points.cols();
  kde.bandwidth.resize(d);
  if (bandwidth > 0.0) {
    kde.bandwidth.setConstant(bandwidth);
    return kde;
  }
  const double n_eff = 1.0 / kde.weights.squaredNorm();
  const double factor = std::pow(n_eff, -1.0 / (static_cast<double>(d) + 4.0));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = kde.weights.dot(points.col(j));
    const double var =
        kde.weights.dot((points.col(j).array() - mean).square().matrix());
    const double h = std::sqrt(var) * factor;
    if (!(h > 0.0))
      throw ZeroBandwidth("weighted_kde: degenerate sample, pass a bandwidth");
    kde.bandwidth[j] = h;
  }
  return kde;
}

/// Evaluates a 1D KDE at the centers of the given edges and normalizes the
/// result into bin masses, so KDE pairs feed the same KL machinery.
inline Histogram1D kde_bin_masses(const Kde& kde, std::vector<double> edges) {
  if (kde.points.cols() != 1)
    throw DimensionMismatch("kde_bin_masses: 1D KDE required");
  Histogram1D h;
  h.masses.resize(edges.size() - 1);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    h.masses[b] = kde.evaluate(0.5 * (edges[b] + edges[b + 1]));
  double total = 0.0;
  for (const double m : h.masses)
    total += m;
  if (!(total > 0.0))
    throw AllZeroWeights("kde_bin_masses: density vanished on the grid");
  detail::exact_renormalize(h.masses);
  h.edges = std::move(edges);
  return h;
}

// --------------------------- geometry --------------------------------------

/// Difference in mean pairwise particle distances, model minus ground truth.
/// Model averages use the set's weights; ground-truth averages are raw
/// unweighted means. Positive entries mean the model samples larger average
/// separations.
inline Eigen::MatrixXd contact_map_diff(const WeightedFrameSet& model,
                                        const WeightedFrameSet& gt) {
  if (model.frames.empty() || gt.frames.empty())
    throw EmptyPointSet("contact_map_diff: empty frame set");
  const int n = model.frames.front().n_particles();
  const int dims = model.frames.front().dims;
  if (gt.frames.front().n_particles() != n)
    throw ParticleMismatch("contact_map_diff: particle counts differ");
  if (gt.frames.front().dims != dims)
    throw DimensionMismatch("contact_map_diff: dimensionalities differ");

  auto mean_distances = [&](const std::vector<Conformation>& frames,
                            const std::vector<double>* weights) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    double total = 0.0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      if (frames[f].n_particles() != n || frames[f].dims != dims)
        throw ParticleMismatch("contact_map_diff: frames disagree in shape");
      const double w = weights ? (*weights)[f] : 1.0;
      total += w;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          double r2 = 0.0;
          for (int d = 0; d < dims; ++d) {
            const double dd = static_cast<double>(frames[f].coord(i, d)) -
                              frames[f].coord(j, d);
            r2 += dd * dd;
          }
          mean(i, j) += w * std::sqrt(r2);
        }
    }
    if (!(total > 0.0))
      throw AllZeroWeights("contact_map_diff: zero total weight");
    mean /= total;
    return Eigen::MatrixXd(mean + mean.transpose());
  };

  return mean_distances(model.frames, &model.weights) -
         mean_distances(gt.frames, nullptr);
}

/// Root-mean-square distance from the unweighted geometric center.
inline double radius_of_gyration(const Conformation& frame) {
  const int n = frame.n_particles();
  if (n < 1)
    throw TooFewParticles("radius_of_gyration: empty conformation");
  std::vector<double> com(static_cast<std::size_t>(frame.dims), 0.0);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < frame.dims; ++d)
      com[static_cast<std::size_t>(d)] += frame.coord(i, d);
  for (double& c : com)
    c /= n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < frame.dims; ++d) {
      const double dd = frame.coord(i, d) - com[static_cast<std::size_t>(d)];
      sum += dd * dd;
    }
  return std::sqrt(sum / n);
}

/// Bond / angle / dihedral series over consecutive index tuples, flattened
/// across frames. Feature classes the particle count cannot support are
/// absent; accessing one throws.
struct BadFeatures {
  std::vector<double> bonds;     // |r_{i+1} - r_i|
  std::vector<double> angles;    // [0, pi], cosine formula at the middle bead
  std::vector<double> dihedrals; // (-pi, pi], cis = 0, trans = pi
  bool has_bonds = false, has_angles = false, has_dihedrals = false;
  int features_per_frame_bonds = 0, features_per_frame_angles = 0,
      features_per_frame_dihedrals = 0;

  const std::vector<double>& require_bonds() const {
    if (!has_bonds)
      throw TooFewParticles("bond series needs >= 2 particles");
    return bonds;
  }
  const std::vector<double>& require_angles() const {
    if (!has_angles)
      throw TooFewParticles("angle series needs >= 3 particles");
    return angles;
  }
  const std::vector<double>& require_dihedrals() const {
    if (!has_dihedrals)
      throw TooFewParticles("dihedral series needs >= 4 particles");
    return dihedrals;
  }
};

inline BadFeatures bad_features(const std::vector<Conformation>& frames) {
  if (frames.empty())
    throw EmptyPointSet("bad_features: no frames");
  const int n = frames.front().n_particles();
  if (n < 2)
    throw TooFewParticles("bad_features: need at least 2 particles");
  BadFeatures out;
  out.has_bonds = true;
  out.has_angles = n >= 3;
  out.has_dihedrals = n >= 4;
  out.features_per_frame_bonds = n - 1;
  out.features_per_frame_angles = out.has_angles ? n - 2 : 0;
  out.features_per_frame_dihedrals = out.has_dihedrals ? n - 3 : 0;

  auto at = [&](const Conformation& c, int i) {
    detail::Vec3 v;
    v.x = c.coord(i, 0);
    v.y = c.dims > 1 ? c.coord(i, 1) : 0.0;
    v.z = c.dims > 2 ? c.coord(i, 2) : 0.0;
    return v;
  };

  for (const Conformation& c : frames) {
    if (c.n_particles() != n)
      throw ParticleMismatch("bad_features: frames disagree in particle count");
    for (int i = 0; i + 1 < n; ++i)
      out.bonds.push_back(detail::norm(at(c, i + 1) - at(c, i)));
    for (int i = 0; out.has_angles && i + 2 < n; ++i) {
      const detail::Vec3 u = at(c, i) - at(c, i + 1);
      const detail::Vec3 v = at(c, i + 2) - at(c, i + 1);
      const double nu = detail::norm(u), nv = detail::norm(v);
      double ct = nu > 0.0 && nv > 0.0 ? detail::dot(u, v) / (nu * nv) : 1.0;
      ct = std::max(-1.0, std::min(1.0, ct));
      out.angles.push_back(std::acos(ct));
    }
    for (int i = 0; out.has_dihedrals && i + 3 < n; ++i) {
      const detail::Vec3 b1 = at(c, i + 1) - at(c, i);
      const detail::Vec3 b2 = at(c, i + 2) - at(c, i + 1);
      const detail::Vec3 b3 = at(c, i + 3) - at(c, i + 2);
      const detail::Vec3 n1 = detail::cross(b1, b2);
      const detail::Vec3 n2 = detail::cross(b2, b3);
      const double nb2 = detail::norm(b2);
      double phi = 0.0;
      if (nb2 > 0.0)
        phi = std::atan2(detail::dot(detail::cross(n1, n2), b2 * (1.0 / nb2)),
                         detail::dot(n1, n2));
      if (phi <= -3.14159265358979323846)
        phi = 3.14159265358979323846; // signed range (-pi, pi]
      out.dihedrals.push_back(phi);
    }
  }
  return out;
}

inline BadFeatures bad_features(const Trajectory& traj) {
  return bad_features(traj.frames);
}

// ---------------------------- coverage -------------------------------------

/// Percentage of ground-truth-occupied grid cells that also contain at least
/// one model point. Grid bounds come from the ground-truth set; model points
/// outside those bounds contribute nothing.
inline double coverage(const Eigen::MatrixXd& gt_points,
                       const Eigen::MatrixXd& model_points, int grid_n = 100) {
  if (gt_points.rows() == 0 || model_points.rows() == 0)
    throw EmptyPointSet("coverage: empty point set");
  if (gt_points.cols() != model_points.cols())
    throw DimensionMismatch("coverage: point dimensions differ");
  const Eigen::Index dims = gt_points.cols();

  std::vector<double> lo(dims), hi(dims);
  for (Eigen::Index d = 0; d < dims; ++d) {
    lo[static_cast<std::size_t>(d)] = gt_points.col(d).minCoeff();
    hi[static_cast<std::size_t>(d)] = gt_points.col(d).maxCoeff();
    if (!(lo[static_cast<std::size_t>(d)] < hi[static_cast<std::size_t>(d)])) {
      lo[static_cast<std::size_t>(d)] -= 0.5;
      hi[static_cast<std::size_t>(d)] += 0.5;
    }
  }

  auto cell_of = [&](const Eigen::MatrixXd& pts, Eigen::Index r,
                     std::int64_t& id) {
    id = 0;
    for (Eigen::Index d = 0; d < dims; ++d) {
      const double x = pts(r, d);
      const double l = lo[static_cast<std::size_t>(d)];
      const double h = hi[static_cast<std::size_t>(d)];
      if (x < l || x > h)
        return false;
      int idx = static_cast<int>(std::floor((x - l) / (h - l) * grid_n));
      idx = std::max(0, std::min(grid_n - 1, idx));
      id = id * grid_n + idx;
    }
    return true;
  };

  std::unordered_set<std::int64_t> gt_cells;
  for (Eigen::Index r = 0; r < gt_points.rows(); ++r) {
    std::int64_t id = 0;
    cell_of(gt_points, r, id); // gt points are inside their own bounds
    gt_cells.insert(id);
  }
  std::unordered_set<std::int64_t> hit;
  for (Eigen::Index r = 0; r < model_points.rows(); ++r) {
    std::int64_t id = 0;
    if (cell_of(model_points, r, id) && gt_cells.count(id))
      hit.insert(id);
  }
  return 100.0 * static_cast<double>(hit.size()) /
         static_cast<double>(gt_cells.size());
}

// ----------------------------- report --------------------------------------

struct ObservableMetrics {
  std::string name;
  double kl = 0.0;
  double w1 = 0.0;
};

struct MetricReport {
  std::vector<ObservableMetrics> observables; // TIC 0-3, Bonds, ..., Gyration
  double coverage_percent = 0.0;
  Eigen::MatrixXd contact_map;     // model minus ground truth mean distances
  double bond_band_fraction = -1.0; // model bond mass in [3.5, 4.5] A; -1: n/a
  std::string weighting;            // provenance
  std::string gt_id, model_id;
};

struct ReportConfig {
  int histogram_bins = 100;
  int coverage_grid = 100;
  double kl_epsilon = 1e-12;
};

inline std::string to_string(WeightSource s) {
  switch (s) {
  case WeightSource::WE_WEIGHTED:
    return "we_weighted";
  case WeightSource::MSM_REWEIGHTED:
    return "msm_reweighted";
  case WeightSource::RAW_UNWEIGHTED:
    return "raw_unweighted";
  }
  return "?";
}

/// KL (ground truth || model) and W1 per observable, coverage over the first
/// two TICs, and the contact-map difference — the full comparison table for
/// one model run against reference data sharing the same TICA model.
inline MetricReport build_report(const WeightedFrameSet& gt,
                                 const WeightedFrameSet& model,
                                 const TicaModel& tica, const ReportConfig& rc,
                                 std::string gt_id = "",
                                 std::string model_id = "") {
  if (gt.frames.empty() || model.frames.empty())
    throw EmptyPointSet("build_report: empty frame set");

  MetricReport report;
  report.weighting = to_string(model.source);
  report.gt_id = std::move(gt_id);
  report.model_id = std::move(model_id);

  auto add = [&](const std::string& name, const std::vector<double>& gt_vals,
                 const std::vector<double>& gt_wts,
                 const std::vector<double>& model_vals,
                 const std::vector<double>& model_wts) {
    const auto [p, q] = paired_histograms(gt_vals, gt_wts, model_vals,
                                          model_wts, rc.histogram_bins);
    report.observables.push_back(
        {name, kl_divergence(p, q, rc.kl_epsilon), w1_distance(p, q)});
  };

  const Eigen::MatrixXd gt_tics =
      project(tica, featurize_frames(tica.features, gt.frames));
  const Eigen::MatrixXd model_tics =
      project(tica, featurize_frames(tica.features, model.frames));
  const int n_tics = std::min(4, tica.n_components);
  for (int t = 0; t < n_tics; ++t) {
    std::vector<double> gv(gt_tics.rows()), mv(model_tics.rows());
    for (Eigen::Index i = 0; i < gt_tics.rows(); ++i)
      gv[static_cast<std::size_t>(i)] = gt_tics(i, t);
    for (Eigen::Index i = 0; i < model_tics.rows(); ++i)
      mv[static_cast<std::size_t>(i)] = model_tics(i, t);
    add("TIC " + std::to_string(t), gv, gt.weights, mv, model.weights);
  }

  const int n_particles = gt.frames.front().n_particles();
  if (n_particles >= 2) {
    const BadFeatures gt_bad = bad_features(gt.frames);
    const BadFeatures model_bad = bad_features(model.frames);
    auto expand = [](const std::vector<double>& frame_weights, int per_frame) {
      std::vector<double> w;
      w.reserve(frame_weights.size() * static_cast<std::size_t>(per_frame));
      for (const double fw : frame_weights)
        for (int k = 0; k < per_frame; ++k)
          w.push_back(fw);
      return w;
    };
    add("Bonds", gt_bad.bonds,
        expand(gt.weights, gt_bad.features_per_frame_bonds), model_bad.bonds,
        expand(model.weights, model_bad.features_per_frame_bonds));
    if (gt_bad.has_angles && model_bad.has_angles)
      add("Angles", gt_bad.angles,
          expand(gt.weights, gt_bad.features_per_frame_angles),
          model_bad.angles,
          expand(model.weights, model_bad.features_per_frame_angles));
    if (gt_bad.has_dihedrals && model_bad.has_dihedrals)
      add("Dihedrals", gt_bad.dihedrals,
          expand(gt.weights, gt_bad.features_per_frame_dihedrals),
          model_bad.dihedrals,
          expand(model.weights, model_bad.features_per_frame_dihedrals));

    // Bond sanity diagnostic: weighted model bond mass inside [3.5, 4.5] A.
    const std::vector<double> bw =
        expand(model.weights, model_bad.features_per_frame_bonds);
    double in_band = 0.0, total = 0.0;
    for (std::size_t i = 0; i < model_bad.bonds.size(); ++i) {
      total += bw[i];
      if (model_bad.bonds[i] >= 3.5 && model_bad.bonds[i] <= 4.5)
        in_band += bw[i];
    }
    if (total > 0.0)
      report.bond_band_fraction = in_band / total;
  }

  {
    std::vector<double> gv(gt.frames.size()), mv(model.frames.size());
    for (std::size_t i = 0; i < gt.frames.size(); ++i)
      gv[i] = radius_of_gyration(gt.frames[i]);
    for (std::size_t i = 0; i < model.frames.size(); ++i)
      mv[i] = radius_of_gyration(model.frames[i]);
    add("Gyration", gv, gt.weights, mv, model.weights);
  }

  const int cov_dims = std::min(2, tica.n_components);
  report.coverage_percent = coverage(gt_tics.leftCols(cov_dims),
                                     model_tics.leftCols(cov_dims),
                                     rc.coverage_grid);
  report.contact_map = contact_map_diff(model, gt);

  for (const ObservableMetrics& o : report.observables)
    if (!std::isfinite(o.kl) || !std::isfinite(o.w1))
      throw Error("build_report: non-finite metric for " + o.name);
  return report;
}

} // namespace wesbench

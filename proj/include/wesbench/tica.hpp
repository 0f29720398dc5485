#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wesbench/common.hpp"
#include "wesbench/core.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// Featurization + time-lagged independent component analysis. A model is fit
// once on reference data and then applied as a fixed linear map z = (r - mu) U
// with U = W Sigma^-1 V: W whitens the instantaneous covariance, V rotates
// into the eigenbasis of the whitened time-lagged covariance.
// ---------------------------------------------------------------------------

enum class FeatureKind { RAW_COORDS_2D, PAIRWISE_DISTANCES };

struct FeatureSpec {
  FeatureKind kind = FeatureKind::RAW_COORDS_2D;
  /// Explicit particle index pairs for PAIRWISE_DISTANCES; empty means all
  /// n(n-1)/2 pairs in lexicographic order.
  std::vector<std::pair<int, int>> pair_list;
};

inline int feature_count(const FeatureSpec& spec, int n_particles, int dims) {
  if (spec.kind == FeatureKind::RAW_COORDS_2D)
    return n_particles * dims;
  if (!spec.pair_list.empty())
    return static_cast<int>(spec.pair_list.size());
  return n_particles * (n_particles - 1) / 2;
}

/// One frame -> one feature row.
inline Eigen::VectorXd featurize_frame(const FeatureSpec& spec,
                                       const Conformation& c) {
  const int n = c.n_particles();
  if (spec.kind == FeatureKind::RAW_COORDS_2D) {
    if (c.dims != 2)
      throw DimensionMismatch("RAW_COORDS_2D requires 2-dimensional frames");
    Eigen::VectorXd f(c.positions.size());
    for (std::size_t i = 0; i < c.positions.size(); ++i)
      f[static_cast<Eigen::Index>(i)] = c.positions[i];
    return f;
  }
  std::vector<std::pair<int, int>> pairs = spec.pair_list;
  if (pairs.empty()) {
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        pairs.emplace_back(i, j);
  }
  Eigen::VectorXd f(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw DimensionMismatch("pair list index out of range");
    double r2 = 0.0;
    for (int d = 0; d < c.dims; ++d) {
      const double dd = static_cast<double>(c.coord(i, d)) - c.coord(j, d);
      r2 += dd * dd;
    }
    f[static_cast<Eigen::Index>(k)] = std::sqrt(r2);
  }
  return f;
}

/// Frame sequence -> frames x features matrix.
inline Eigen::MatrixXd featurize_frames(const FeatureSpec& spec,
                                        const std::vector<Conformation>& frames) {
  if (frames.empty())
    throw InsufficientFrames("featurize: no frames");
  const int n = frames.front().n_particles();
  const int dims = frames.front().dims;
  Eigen::MatrixXd out(frames.size(), feature_count(spec, n, dims));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Conformation& c = frames[t];
    if (c.n_particles() != n || c.dims != dims)
      throw DimensionMismatch("featurize: frames disagree in shape");
    out.row(static_cast<Eigen::Index>(t)) = featurize_frame(spec, c).transpose();
  }
  return out;
}

inline Eigen::MatrixXd featurize(const FeatureSpec& spec, const Trajectory& traj) {
  return featurize_frames(spec, traj.frames);
}

struct TicaModel {
  FeatureSpec features;
  Eigen::VectorXd mean;        // feature-space mean mu
  Eigen::MatrixXd whitening;   // W: features x rank, C00 eigenvectors
  Eigen::VectorXd singular;    // Sigma: sqrt of retained C00 eigenvalues
  Eigen::MatrixXd rotation;    // V: rank x n_components
  Eigen::MatrixXd transform;   // U = W Sigma^-1 V: features x n_components
  Eigen::VectorXd eigenvalues; // lambda_1 >= lambda_2 >= ...
  int lag = 10;                // in saved-frame units
  int n_components = 4;        // retained columns of U
};

/// Fit on several trajectories' feature matrices; lagged pairs never span a
/// trajectory boundary. Covariances use the symmetrized estimator over the
/// pooled heads (rows t) and tails (rows t + lag), which keeps eigenvalues
/// real and bounded by 1 up to roundoff.
inline TicaModel fit_tica(const std::vector<Eigen::MatrixXd>& trajs, int lag,
                          int n_components, FeatureSpec features = {}) {
  if (lag < 1)
    throw Error("fit_tica: lag must be >= 1");
  if (n_components < 1)
    throw Error("fit_tica: n_components must be >= 1");
  if (trajs.empty())
    throw InsufficientFrames("fit_tica: no input trajectories");

  const Eigen::Index F = trajs.front().cols();
  Eigen::Index total_frames = 0, n_pairs = 0;
  for (const Eigen::MatrixXd& X : trajs) {
    if (X.cols() != F)
      throw DimensionMismatch("fit_tica: feature dimension differs between trajectories");
    total_frames += X.rows();
    n_pairs += std::max<Eigen::Index>(0, X.rows() - lag);
  }
  if (n_pairs < 1 || total_frames <= lag + n_components)
    throw InsufficientFrames("fit_tica: need more frames than lag + n_components");

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(F);
  for (const Eigen::MatrixXd& X : trajs) {
    const Eigen::Index n = X.rows() - lag;
    if (n <= 0)
      continue;
    mu += X.topRows(n).colwise().sum().transpose();
    mu += X.bottomRows(n).colwise().sum().transpose();
  }
  mu /= 2.0 * static_cast<double>(n_pairs);

  Eigen::MatrixXd c00 = Eigen::MatrixXd::Zero(F, F);
  Eigen::MatrixXd c0t = Eigen::MatrixXd::Zero(F, F);
  for (const Eigen::MatrixXd& X : trajs) {
    const Eigen::Index n = X.rows() - lag;
    if (n <= 0)
      continue;
    const Eigen::MatrixXd heads = X.topRows(n).rowwise() - mu.transpose();
    const Eigen::MatrixXd tails = X.bottomRows(n).rowwise() - mu.transpose();
    c00 += heads.transpose() * heads + tails.transpose() * tails;
    c0t += heads.transpose() * tails + tails.transpose() * heads;
  }
  c00 /= 2.0 * static_cast<double>(n_pairs);
  c0t /= 2.0 * static_cast<double>(n_pairs);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es00(c00);
  const Eigen::VectorXd evals = es00.eigenvalues(); // ascending
  const double cutoff = 1e-10 * std::max(0.0, evals[F - 1]);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = F - 1; i >= 0; --i) // descending variance
    if (evals[i] > cutoff && evals[i] > 0.0)
      keep.push_back(i);
  if (keep.empty())
    throw RankDeficient("fit_tica: instantaneous covariance has no usable directions");

  const Eigen::Index R = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd W(F, R);
  Eigen::VectorXd sigma(R);
  for (Eigen::Index r = 0; r < R; ++r) {
    W.col(r) = es00.eigenvectors().col(keep[static_cast<std::size_t>(r)]);
    sigma[r] = std::sqrt(evals[keep[static_cast<std::size_t>(r)]]);
  }

  Eigen::MatrixXd M =
      sigma.cwiseInverse().asDiagonal() * (W.transpose() * c0t * W) *
      sigma.cwiseInverse().asDiagonal();
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(M);

  const Eigen::Index K = std::min<Eigen::Index>(n_components, R);
  Eigen::MatrixXd V(R, K);
  Eigen::VectorXd lambda(K);
  for (Eigen::Index k = 0; k < K; ++k) { // eigenvalues ascending -> reverse
    V.col(k) = esM.eigenvectors().col(R - 1 - k);
    lambda[k] = esM.eigenvalues()[R - 1 - k];
  }

  Eigen::MatrixXd U = W * sigma.cwiseInverse().asDiagonal() * V;
  // Sign convention: the largest-magnitude entry of each component is
  // positive, so repeated fits agree bit-for-bit.
  for (Eigen::Index k = 0; k < K; ++k) {
    Eigen::Index imax = 0;
    U.col(k).cwiseAbs().maxCoeff(&imax);
    if (U(imax, k) < 0.0) {
      U.col(k) = -U.col(k);
      V.col(k) = -V.col(k);
    }
  }

  TicaModel model;
  model.features = std::move(features);
  model.mean = std::move(mu);
  model.whitening = std::move(W);
  model.singular = std::move(sigma);
  model.rotation = std::move(V);
  model.transform = std::move(U);
  model.eigenvalues = std::move(lambda);
  model.lag = lag;
  model.n_components = static_cast<int>(K);
  return model;
}

inline TicaModel fit_tica(const Eigen::MatrixXd& features_matrix, int lag,
                          int n_components, FeatureSpec features = {}) {
  return fit_tica(std::vector<Eigen::MatrixXd>{features_matrix}, lag,
                  n_components, std::move(features));
}

/// z = (r - mu) U, one output row per input row.
inline Eigen::MatrixXd project(const TicaModel& model,
                               const Eigen::MatrixXd& features_matrix) {
  if (features_matrix.cols() != model.mean.size())
    throw DimensionMismatch("project: feature dimension does not match model");
  return (features_matrix.rowwise() - model.mean.transpose()) * model.transform;
}

inline Eigen::RowVectorXd project_frame(const TicaModel& model,
                                        const Conformation& frame) {
  const Eigen::VectorXd f = featurize_frame(model.features, frame);
  if (f.size() != model.mean.size())
    throw DimensionMismatch("project: feature dimension does not match model");
  return (f - model.mean).transpose() * model.transform;
}

} // namespace wesbench

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "wesbench/common.hpp"
#include "wesbench/core.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// Markov state models over a rectilinear discretization of TIC space:
// transition counting within trajectory segments, restriction to the largest
// strongly connected set, stationary distribution by direct linear solve,
// per-frame equilibrium reweighting, and k-means + PCCA+ macrostating.
// ---------------------------------------------------------------------------

struct RectilinearGrid {
  int n_per_dim = 80;
  int dims = 2;
  std::vector<std::array<double, 2>> bounds; // per-dim {lo, hi}

  int n_cells() const {
    int n = 1;
    for (int d = 0; d < dims; ++d)
      n *= n_per_dim;
    return n;
  }
};

inline void validate(const RectilinearGrid& grid) {
  if (grid.n_per_dim < 2)
    throw ConfigError("grid: n_per_dim must be >= 2");
  if (grid.dims < 1 || grid.bounds.size() != static_cast<std::size_t>(grid.dims))
    throw ConfigError("grid: bounds must cover every dimension");
  for (const auto& b : grid.bounds)
    if (!(b[0] < b[1]))
      throw ConfigError("grid: each dimension needs lo < hi");
}

/// Grid bounds from reference data (degenerate dimensions widened to unit
/// width so lo < hi always holds).
inline RectilinearGrid make_grid(const Eigen::MatrixXd& reference_points,
                                 int n_per_dim) {
  if (reference_points.rows() == 0)
    throw EmptyPointSet("make_grid: no reference points");
  RectilinearGrid grid;
  grid.n_per_dim = n_per_dim;
  grid.dims = static_cast<int>(reference_points.cols());
  for (int d = 0; d < grid.dims; ++d) {
    double lo = reference_points.col(d).minCoeff();
    double hi = reference_points.col(d).maxCoeff();
    if (!(lo < hi)) {
      lo -= 0.5;
      hi += 0.5;
    }
    grid.bounds.push_back({lo, hi});
  }
  validate(grid);
  return grid;
}

/// Cell id per point, row-major over dimensions; out-of-bounds points clamp
/// to the edge cells.
inline std::vector<int> assign_bins(const RectilinearGrid& grid,
                                    const Eigen::MatrixXd& points) {
  validate(grid);
  if (points.cols() != grid.dims)
    throw DimensionMismatch("assign_bins: point dimension does not match grid");
  std::vector<int> ids(points.rows());
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    int id = 0;
    for (int d = 0; d < grid.dims; ++d) {
      const auto [lo, hi] = grid.bounds[static_cast<std::size_t>(d)];
      const double u = (points(r, d) - lo) / (hi - lo);
      int idx = static_cast<int>(std::floor(u * grid.n_per_dim));
      idx = std::max(0, std::min(grid.n_per_dim - 1, idx));
      id = id * grid.n_per_dim + idx;
    }
    ids[static_cast<std::size_t>(r)] = id;
  }
  return ids;
}

struct CountMatrix {
  Eigen::SparseMatrix<double> counts; // n x n over `states`
  std::vector<int> states;            // sorted original state ids
};

/// Sliding-window transition counts at the given lag. Sequences shorter than
/// lag+1 contribute no transitions (their states still appear); transitions
/// are never counted across sequence boundaries.
inline CountMatrix count_matrix(const std::vector<std::vector<int>>& assignments,
                                int lag) {
  if (lag < 1)
    throw Error("count_matrix: lag must be >= 1");
  bool any_long_enough = false;
  std::vector<int> states;
  for (const auto& seq : assignments) {
    if (seq.size() >= static_cast<std::size_t>(lag) + 1)
      any_long_enough = true;
    states.insert(states.end(), seq.begin(), seq.end());
  }
  if (!any_long_enough)
    throw LagTooLong("count_matrix: every sequence is shorter than lag + 1");
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());

  const int n = static_cast<int>(states.size());
  auto index_of = [&](int id) {
    return static_cast<int>(std::lower_bound(states.begin(), states.end(), id) -
                            states.begin());
  };
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& seq : assignments)
    for (std::size_t t = 0; t + lag < seq.size(); ++t)
      trips.emplace_back(index_of(seq[t]), index_of(seq[t + lag]), 1.0);

  CountMatrix out;
  out.counts.resize(n, n);
  out.counts.setFromTriplets(trips.begin(), trips.end());
  out.states = std::move(states);
  return out;
}

inline CountMatrix count_matrix(const std::vector<int>& assignment, int lag) {
  return count_matrix(std::vector<std::vector<int>>{assignment}, lag);
}

namespace detail {

/// Iterative Tarjan strongly-connected components over an adjacency list.
/// Returns a component id per node (ids in no particular order).
inline std::vector<int> strongly_connected_components(
    const std::vector<std::vector<int>>& adj, int& n_components) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), lowlink(n, 0), component(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  n_components = 0;
  int next_index = 0;

  struct Frame {
    int v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1)
      continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      const int v = f.v;
      if (f.edge == 0) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (f.edge < adj[v].size()) {
        const int w = adj[v][f.edge++];
        if (index[w] == -1) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w])
          lowlink[v] = std::min(lowlink[v], index[w]);
      }
      if (descended)
        continue;
      if (lowlink[v] == index[v]) {
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component[w] = n_components;
          if (w == v)
            break;
        }
        ++n_components;
      }
      call.pop_back();
      if (!call.empty())
        lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[v]);
    }
  }
  return component;
}

inline std::vector<std::vector<int>> adjacency_of(
    const Eigen::SparseMatrix<double>& a) {
  std::vector<std::vector<int>> adj(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      if (it.value() > 0.0)
        adj[static_cast<std::size_t>(it.row())].push_back(
            static_cast<int>(it.col()));
  return adj;
}

} // namespace detail

struct TransitionMatrix {
  Eigen::SparseMatrix<double> transition; // row-stochastic over kept states
  std::vector<int> kept;                  // indices into the count matrix
};

/// Restricts to the strongly connected component carrying the most
/// transition counts (ties: more states, then lowest state index), then
/// row-normalizes.
inline TransitionMatrix transition_matrix(const Eigen::SparseMatrix<double>& counts) {
  if (counts.rows() != counts.cols())
    throw Error("transition_matrix: count matrix must be square");
  const int n = static_cast<int>(counts.rows());
  if (n == 0)
    throw NoConnectedSet("transition_matrix: empty count matrix");

  int n_comp = 0;
  const std::vector<int> comp =
      detail::strongly_connected_components(detail::adjacency_of(counts), n_comp);

  std::vector<double> comp_counts(n_comp, 0.0);
  std::vector<int> comp_size(n_comp, 0), comp_min_state(n_comp, n);
  for (int v = 0; v < n; ++v) {
    ++comp_size[comp[v]];
    comp_min_state[comp[v]] = std::min(comp_min_state[comp[v]], v);
  }
  for (int k = 0; k < counts.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(counts, k); it; ++it)
      if (it.value() > 0.0 && comp[it.row()] == comp[it.col()])
        comp_counts[comp[it.row()]] += it.value();

  int best = 0;
  for (int c = 1; c < n_comp; ++c) {
    if (comp_counts[c] > comp_counts[best] ||
        (comp_counts[c] == comp_counts[best] &&
         (comp_size[c] > comp_size[best] ||
          (comp_size[c] == comp_size[best] &&
           comp_min_state[c] < comp_min_state[best]))))
      best = c;
  }
  if (!(comp_counts[best] > 0.0))
    throw NoConnectedSet("transition_matrix: no recurrent transitions");

  TransitionMatrix out;
  std::vector<int> to_kept(n, -1);
  for (int v = 0; v < n; ++v)
    if (comp[v] == best) {
      to_kept[v] = static_cast<int>(out.kept.size());
      out.kept.push_back(v);
    }

  const int m = static_cast<int>(out.kept.size());
  std::vector<double> row_sum(m, 0.0);
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < counts.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(counts, k); it; ++it) {
      const int i = to_kept[it.row()], j = to_kept[it.col()];
      if (i >= 0 && j >= 0 && it.value() > 0.0) {
        trips.emplace_back(i, j, it.value());
        row_sum[static_cast<std::size_t>(i)] += it.value();
      }
    }
  for (auto& t : trips)
    t = {t.row(), t.col(), t.value() / row_sum[static_cast<std::size_t>(t.row())]};
  out.transition.resize(m, m);
  out.transition.setFromTriplets(trips.begin(), trips.end());
  return out;
}

/// pi with pi^T T = pi^T and sum(pi) = 1, by direct sparse solve of the
/// singularity-free system ((T^T - I) with its last equation replaced by
/// sum = 1), followed by a few power-iteration polish steps.
inline Eigen::VectorXd stationary_distribution(const Eigen::SparseMatrix<double>& T) {
  if (T.rows() != T.cols() || T.rows() == 0)
    throw Error("stationary_distribution: matrix must be square and non-empty");
  const int n = static_cast<int>(T.rows());
  {
    const Eigen::VectorXd rs = T * Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i)
      if (std::abs(rs[i] - 1.0) > 1e-9)
        throw Error("stationary_distribution: matrix is not row-stochastic");
  }
  int n_comp = 0;
  detail::strongly_connected_components(detail::adjacency_of(T), n_comp);
  if (n_comp != 1)
    throw NotIrreducible("stationary_distribution: chain is not irreducible");
  if (n == 1)
    return Eigen::VectorXd::Ones(1);

  // Rows 0..n-2 of B are rows of (T^T - I); the last row is the constraint
  // sum(pi) = 1. Replacing one balance equation keeps B nonsingular for any
  // irreducible chain.
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < T.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(T, k); it; ++it)
      if (it.col() != n - 1)
        trips.emplace_back(static_cast<int>(it.col()),
                           static_cast<int>(it.row()), it.value());
  for (int j = 0; j < n; ++j) {
    if (j != n - 1)
      trips.emplace_back(j, j, -1.0);
    trips.emplace_back(n - 1, j, 1.0);
  }
  Eigen::SparseMatrix<double> B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(B);
  if (lu.info() != Eigen::Success)
    throw Error("stationary_distribution: linear solve failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd pi = lu.solve(rhs);

  auto residual = [&](const Eigen::VectorXd& p) {
    return (T.transpose() * p - p).cwiseAbs().maxCoeff();
  };
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  for (int iter = 0; iter < 50 && residual(pi) > 1e-12; ++iter) {
    Eigen::VectorXd next = T.transpose() * pi;
    next = next.cwiseMax(0.0);
    next /= next.sum();
    if (residual(next) >= residual(pi))
      break;
    pi = next;
  }
  if (residual(pi) > 1e-10)
    throw Error("stationary_distribution: eigenvector residual did not converge");
  return pi;
}

inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& T) {
  return stationary_distribution(
      Eigen::SparseMatrix<double>(T.sparseView()));
}

struct MsmModel {
  RectilinearGrid grid;
  std::vector<int> states;                // occupied cell ids, sorted
  std::vector<int> kept;                  // indices into `states` after restriction
  Eigen::SparseMatrix<double> counts;     // over `states`
  Eigen::SparseMatrix<double> transition; // over kept states
  Eigen::VectorXd stationary;             // over kept states
  int lag = 1;
};

/// Full estimation pipeline from per-segment cell-id sequences.
inline MsmModel fit_msm(const RectilinearGrid& grid,
                        const std::vector<std::vector<int>>& cell_seqs, int lag) {
  validate(grid);
  MsmModel model;
  model.grid = grid;
  model.lag = lag;
  CountMatrix cm = count_matrix(cell_seqs, lag);
  model.states = std::move(cm.states);
  model.counts = std::move(cm.counts);
  TransitionMatrix tm = transition_matrix(model.counts);
  model.kept = std::move(tm.kept);
  model.transition = std::move(tm.transition);
  model.stationary = stationary_distribution(model.transition);
  return model;
}

/// Equilibrium reweighting: a frame in kept state i receives weight
/// pi_i / (#frames in state i); frames in pruned or unseen states receive 0.
inline WeightedFrameSet msm_reweight(const MsmModel& model,
                                     const std::vector<int>& frame_cells,
                                     const std::vector<Conformation>& frames) {
  if (frame_cells.size() != frames.size())
    throw DimensionMismatch("msm_reweight: one cell id per frame required");

  std::vector<int> kept_of_cell; // parallel to model.states, -1 if pruned
  kept_of_cell.assign(model.states.size(), -1);
  for (std::size_t k = 0; k < model.kept.size(); ++k)
    kept_of_cell[static_cast<std::size_t>(model.kept[k])] = static_cast<int>(k);

  auto kept_index = [&](int cell) -> int {
    const auto it =
        std::lower_bound(model.states.begin(), model.states.end(), cell);
    if (it == model.states.end() || *it != cell)
      return -1;
    return kept_of_cell[static_cast<std::size_t>(it - model.states.begin())];
  };

  std::vector<std::int64_t> population(model.kept.size(), 0);
  std::vector<int> frame_state(frames.size(), -1);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frame_state[f] = kept_index(frame_cells[f]);
    if (frame_state[f] >= 0)
      ++population[static_cast<std::size_t>(frame_state[f])];
  }

  WeightedFrameSet out;
  out.frames = frames;
  out.source = WeightSource::MSM_REWEIGHTED;
  out.weights.resize(frames.size(), 0.0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const int s = frame_state[f];
    if (s >= 0)
      out.weights[f] = model.stationary[s] /
                       static_cast<double>(population[static_cast<std::size_t>(s)]);
  }
  return normalize(out);
}

// --------------------------- macrostating ---------------------------------

struct KMeansResult {
  Eigen::MatrixXd centers;     // k x d
  std::vector<int> assignment; // point -> center
  double inertia = 0.0;
  int iterations = 0;
};

/// Deterministic Lloyd iteration with k-means++ seeding from the given seed.
/// Empty clusters are re-seeded from the point farthest from its center.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k,
                           std::uint64_t seed, int max_iterations = 500,
                           double tolerance = 1e-6) {
  const Eigen::Index n = points.rows();
  if (k < 1)
    throw Error("kmeans: k must be >= 1");
  if (n < k)
    throw TooFewFrames("kmeans: fewer points than clusters");

  Rng rng(seed, kStreamKmeans, 0);
  const Eigen::Index d = points.cols();
  KMeansResult res;
  res.centers.resize(k, d);

  auto pick = [&](double u, Eigen::Index limit) {
    return std::min<Eigen::Index>(limit - 1,
                                  static_cast<Eigen::Index>(u * static_cast<double>(limit)));
  };
  res.centers.row(0) = points.row(pick(rng.uniform(), n));
  Eigen::VectorXd d2 =
      (points.rowwise() - res.centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    } else {
      chosen = pick(rng.uniform(), n); // duplicated points; any choice works
    }
    res.centers.row(c) = points.row(chosen);
    d2 = d2.cwiseMin(
        (points.rowwise() - res.centers.row(c)).rowwise().squaredNorm());
  }

  res.assignment.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best_d2(n);
  double prev_inertia = -1.0;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    res.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = (points.row(i) - res.centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dist = (points.row(i) - res.centers.row(c)).squaredNorm();
        if (dist < bd) {
          bd = dist;
          best = c;
        }
      }
      res.assignment[static_cast<std::size_t>(i)] = best;
      best_d2[i] = bd;
    }
    res.inertia = best_d2.sum();

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.assignment[static_cast<std::size_t>(i)]) += points.row(i);
      ++sizes[static_cast<std::size_t>(res.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        res.centers.row(c) =
            sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      } else {
        Eigen::Index far = 0;
        best_d2.maxCoeff(&far);
        res.centers.row(c) = points.row(far);
        best_d2[far] = 0.0; // successive empties take distinct points
      }
    }

    if (prev_inertia >= 0.0 &&
        std::abs(prev_inertia - res.inertia) <=
            tolerance * std::max(prev_inertia, 1e-300))
      break;
    prev_inertia = res.inertia;
  }
  return res;
}

namespace detail {

/// Stationary measure for a transition matrix whose communicating classes
/// are all closed (an irreducible chain, or exactly decoupled blocks);
/// blocks share total mass equally. Transient states have no stationary
/// support and are rejected.
inline Eigen::VectorXd block_stationary(const Eigen::MatrixXd& T) {
  const int n = static_cast<int>(T.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (T(i, j) > 0.0)
        adj[static_cast<std::size_t>(i)].push_back(j);
  int n_comp = 0;
  const std::vector<int> comp = strongly_connected_components(adj, n_comp);
  for (int i = 0; i < n; ++i)
    for (int j : adj[static_cast<std::size_t>(i)])
      if (comp[i] != comp[j])
        throw NotIrreducible(
            "macrostates: transition matrix has transient states");

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n_comp; ++c) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (comp[i] == c)
        members.push_back(i);
    Eigen::MatrixXd sub(members.size(), members.size());
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = 0; b < members.size(); ++b)
        sub(a, b) = T(members[a], members[b]);
    const Eigen::VectorXd sub_pi = stationary_distribution(sub);
    for (std::size_t a = 0; a < members.size(); ++a)
      pi[members[a]] = sub_pi[static_cast<Eigen::Index>(a)] /
                       static_cast<double>(n_comp);
  }
  return pi;
}

} // namespace detail

/// PCCA+ memberships via the inner-simplex construction on the top
/// eigenvectors of the stationary-symmetrized transition matrix. Rows are
/// nonnegative and sum to one; exactly decoupled blocks come out as crisp
/// indicators.
inline Eigen::MatrixXd pcca_memberships(const Eigen::MatrixXd& T,
                                        int n_macrostates) {
  const int n = static_cast<int>(T.rows());
  if (T.cols() != n || n == 0)
    throw Error("pcca: transition matrix must be square and non-empty");
  if (n_macrostates < 1 || n_macrostates > n)
    throw Error("pcca: need 1 <= n_macrostates <= n_states");
  const int m = n_macrostates;
  if (m == 1)
    return Eigen::MatrixXd::Ones(n, 1);

  const Eigen::VectorXd pi = detail::block_stationary(T);
  const Eigen::VectorXd sqrt_pi = pi.cwiseSqrt();
  Eigen::MatrixXd S = sqrt_pi.asDiagonal() * T * sqrt_pi.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);

  // Orthonormal basis of the top-m eigenspace that starts with the exact
  // lambda = 1 direction sqrt(pi), so the first membership column is the
  // constant vector and rows sum to one by construction.
  std::vector<Eigen::VectorXd> basis;
  basis.push_back(sqrt_pi / sqrt_pi.norm());
  for (int k = 0; k < n && static_cast<int>(basis.size()) < m; ++k) {
    Eigen::VectorXd v = es.eigenvectors().col(n - 1 - k); // descending order
    for (const Eigen::VectorXd& q : basis)
      v -= q.dot(v) * q;
    const double norm = v.norm();
    if (norm > 1e-8)
      basis.push_back(v / norm);
  }
  if (static_cast<int>(basis.size()) < m)
    throw RankDeficient("pcca: eigenvector basis collapsed");

  Eigen::MatrixXd X(n, m);
  X.col(0) = Eigen::VectorXd::Ones(n);
  for (int k = 1; k < m; ++k)
    X.col(k) = basis[static_cast<std::size_t>(k)].cwiseQuotient(sqrt_pi);

  // Inner simplex vertices by farthest-point search with orthogonalization.
  std::vector<int> vertices;
  Eigen::VectorXd norms = X.rowwise().norm();
  Eigen::Index first = 0;
  norms.maxCoeff(&first);
  vertices.push_back(static_cast<int>(first));
  Eigen::MatrixXd Y = X.rowwise() - X.row(first);
  for (int j = 1; j < m; ++j) {
    Eigen::Index far = 0;
    Y.rowwise().norm().maxCoeff(&far);
    vertices.push_back(static_cast<int>(far));
    Eigen::RowVectorXd dir = Y.row(far);
    const double dn = dir.norm();
    if (dn > 0.0) {
      dir /= dn;
      Y -= (Y * dir.transpose()) * dir;
    }
  }

  Eigen::MatrixXd vertex_rows(m, m);
  for (int j = 0; j < m; ++j)
    vertex_rows.row(j) = X.row(vertices[static_cast<std::size_t>(j)]);
  Eigen::MatrixXd chi = X * vertex_rows.inverse();

  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (chi(i, j) < 0.0)
        chi(i, j) = 0.0;
      row_sum += chi(i, j);
    }
    if (!(row_sum > 0.0))
      throw Error("pcca: membership row degenerated to zero");
    chi.row(i) /= row_sum;
  }
  return chi;
}

struct MacrostateModel {
  Eigen::MatrixXd kmeans_centers;     // n_clusters x tic_dims
  std::vector<int> kept_clusters;     // clusters in the connected set
  Eigen::MatrixXd cluster_transition; // over kept clusters
  Eigen::MatrixXd memberships;        // n_clusters x n_macrostates
  std::vector<int> assignment;        // cluster -> macrostate (argmax)
  int n_macrostates = 5;
};

/// K-means over TIC points, cluster-level MSM, PCCA+ memberships, crisp
/// argmax assignment. Clusters outside the connected set inherit the
/// membership row of the nearest kept cluster center.
inline MacrostateModel fit_macrostates(const std::vector<Eigen::MatrixXd>& tic_segments,
                                       int lag, int n_clusters, int n_macrostates,
                                       std::uint64_t seed) {
  Eigen::Index total = 0;
  Eigen::Index d = 0;
  for (const Eigen::MatrixXd& seg : tic_segments) {
    total += seg.rows();
    if (seg.rows() > 0)
      d = seg.cols();
  }
  if (total < n_clusters)
    throw TooFewFrames("macrostates: fewer frames than clusters");

  Eigen::MatrixXd points(total, d);
  Eigen::Index at = 0;
  for (const Eigen::MatrixXd& seg : tic_segments) {
    if (seg.rows() == 0)
      continue;
    if (seg.cols() != d)
      throw DimensionMismatch("macrostates: TIC dimension differs between segments");
    points.middleRows(at, seg.rows()) = seg;
    at += seg.rows();
  }

  const KMeansResult km = kmeans(points, n_clusters, seed);

  std::vector<std::vector<int>> cluster_seqs;
  at = 0;
  for (const Eigen::MatrixXd& seg : tic_segments) {
    std::vector<int> seq(static_cast<std::size_t>(seg.rows()));
    for (Eigen::Index i = 0; i < seg.rows(); ++i)
      seq[static_cast<std::size_t>(i)] = km.assignment[static_cast<std::size_t>(at + i)];
    at += seg.rows();
    cluster_seqs.push_back(std::move(seq));
  }

  const CountMatrix cm = count_matrix(cluster_seqs, lag);
  const TransitionMatrix tm = transition_matrix(cm.counts);

  MacrostateModel model;
  model.kmeans_centers = km.centers;
  model.n_macrostates = n_macrostates;
  for (int idx : tm.kept)
    model.kept_clusters.push_back(cm.states[static_cast<std::size_t>(idx)]);
  model.cluster_transition = Eigen::MatrixXd(tm.transition);

  const Eigen::MatrixXd kept_chi =
      pcca_memberships(model.cluster_transition, n_macrostates);

  model.memberships.resize(n_clusters, n_macrostates);
  for (int c = 0; c < n_clusters; ++c) {
    const auto it = std::lower_bound(model.kept_clusters.begin(),
                                     model.kept_clusters.end(), c);
    if (it != model.kept_clusters.end() && *it == c) {
      model.memberships.row(c) =
          kept_chi.row(it - model.kept_clusters.begin());
    } else {
      int nearest = model.kept_clusters.front();
      double best = (km.centers.row(c) - km.centers.row(nearest)).squaredNorm();
      for (int kc : model.kept_clusters) {
        const double dist = (km.centers.row(c) - km.centers.row(kc)).squaredNorm();
        if (dist < best) {
          best = dist;
          nearest = kc;
        }
      }
      const auto near_it = std::lower_bound(model.kept_clusters.begin(),
                                            model.kept_clusters.end(), nearest);
      model.memberships.row(c) =
          kept_chi.row(near_it - model.kept_clusters.begin());
    }
  }

  model.assignment.resize(static_cast<std::size_t>(n_clusters));
  for (int c = 0; c < n_clusters; ++c) {
    Eigen::Index arg = 0;
    model.memberships.row(c).maxCoeff(&arg);
    model.assignment[static_cast<std::size_t>(c)] = static_cast<int>(arg);
  }
  return model;
}

inline MacrostateModel fit_macrostates(const Eigen::MatrixXd& tic_points, int lag,
                                       int n_clusters, int n_macrostates,
                                       std::uint64_t seed) {
  return fit_macrostates(std::vector<Eigen::MatrixXd>{tic_points}, lag,
                         n_clusters, n_macrostates, seed);
}

} // namespace wesbench

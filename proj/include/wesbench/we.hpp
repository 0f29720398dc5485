#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wesbench/common.hpp"
#include "wesbench/core.hpp"
#include "wesbench/metrics.hpp"
#include "wesbench/propagate.hpp"
#include "wesbench/tica.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// The weighted-ensemble engine: propagate all walkers, project their segments
// onto TICA progress coordinates, rebin with the minimal adaptive binning
// scheme, then split/merge toward a target walker count per bin with exact
// weight bookkeeping.
// ---------------------------------------------------------------------------

enum class BoundaryPolicy { LINEAR_MIN_MAX };

struct MabBinning {
  int bins_per_dim = 7;
  int n_dims = 2;
  BoundaryPolicy boundary_policy = BoundaryPolicy::LINEAR_MIN_MAX;
  /// Reserve a dedicated merge-exempt bin per dimension extremum, so the
  /// walkers probing the frontier are never merged away.
  bool bottleneck_bins = true;
};

inline void validate(const MabBinning& binning) {
  if (binning.bins_per_dim < 2)
    throw ConfigError("binning: bins_per_dim must be >= 2");
  if (binning.n_dims < 1)
    throw ConfigError("binning: n_dims must be >= 1");
}

/// One iteration's bin layout: equal-width edges spanning the observed
/// extremes per dimension. A dimension whose observations collapse to one
/// point falls back to a single unit-width bin.
struct MabBins {
  std::vector<std::vector<double>> edges; // per dim, strictly increasing
  std::vector<double> lo, hi;             // observed extremes per dim
  std::vector<char> degenerate;           // per dim
  bool bottleneck = true;

  int dims() const { return static_cast<int>(edges.size()); }
  int bins_in_dim(int d) const {
    return static_cast<int>(edges[static_cast<std::size_t>(d)].size()) - 1;
  }
  int interior_bins() const {
    int n = 1;
    for (int d = 0; d < dims(); ++d)
      n *= bins_in_dim(d);
    return n;
  }
  int total_bins() const {
    return interior_bins() + (bottleneck ? 2 * dims() : 0);
  }
};

/// Recomputes equal-width edges over [min, max] of the observed pcoords
/// (one row per walker, final time point only).
inline MabBins update_mab_bins(const MabBinning& binning,
                               const Eigen::MatrixXd& pcoords) {
  validate(binning);
  if (pcoords.rows() == 0)
    throw EmptyPointSet("update_mab_bins: no pcoords");
  if (pcoords.cols() != binning.n_dims)
    throw DimensionMismatch("update_mab_bins: pcoord dimension mismatch");
  if (!pcoords.allFinite())
    throw Error("update_mab_bins: non-finite pcoord");

  MabBins bins;
  bins.bottleneck = binning.bottleneck_bins;
  for (int d = 0; d < binning.n_dims; ++d) {
    const double lo = pcoords.col(d).minCoeff();
    const double hi = pcoords.col(d).maxCoeff();
    bins.lo.push_back(lo);
    bins.hi.push_back(hi);
    if (lo < hi) {
      bins.degenerate.push_back(0);
      std::vector<double> e(static_cast<std::size_t>(binning.bins_per_dim) + 1);
      for (int i = 0; i <= binning.bins_per_dim; ++i)
        e[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / binning.bins_per_dim;
      bins.edges.push_back(std::move(e));
    } else {
      bins.degenerate.push_back(1);
      bins.edges.push_back({lo - 0.5, lo + 0.5});
    }
  }
  return bins;
}

struct BinAssignment {
  std::vector<int> bin_of;    // per walker
  std::vector<char> extremum; // per bin id: exempt from merging
  int n_bins = 0;
};

/// Interior bins are row-major over dimensions; when bottleneck bins are on,
/// the walkers attaining the per-dimension min/max are diverted to dedicated
/// extremum bins appended after the interior ones.
inline BinAssignment assign_mab_bins(const MabBins& bins,
                                     const Eigen::MatrixXd& pcoords) {
  if (pcoords.cols() != bins.dims())
    throw DimensionMismatch("assign_mab_bins: pcoord dimension mismatch");
  BinAssignment out;
  out.n_bins = bins.total_bins();
  out.extremum.assign(static_cast<std::size_t>(out.n_bins), 0);
  const int interior = bins.interior_bins();
  if (bins.bottleneck)
    for (int b = interior; b < out.n_bins; ++b)
      out.extremum[static_cast<std::size_t>(b)] = 1;

  out.bin_of.resize(static_cast<std::size_t>(pcoords.rows()));
  for (Eigen::Index r = 0; r < pcoords.rows(); ++r) {
    int bin = -1;
    if (bins.bottleneck) {
      for (int d = 0; d < bins.dims() && bin < 0; ++d) {
        if (bins.degenerate[static_cast<std::size_t>(d)])
          continue;
        if (pcoords(r, d) == bins.lo[static_cast<std::size_t>(d)])
          bin = interior + 2 * d;
        else if (pcoords(r, d) == bins.hi[static_cast<std::size_t>(d)])
          bin = interior + 2 * d + 1;
      }
    }
    if (bin < 0) {
      bin = 0;
      for (int d = 0; d < bins.dims(); ++d) {
        const int nb = bins.bins_in_dim(d);
        const double lo = bins.edges[static_cast<std::size_t>(d)].front();
        const double hi = bins.edges[static_cast<std::size_t>(d)].back();
        int idx = static_cast<int>(
            std::floor((pcoords(r, d) - lo) / (hi - lo) * nb));
        idx = std::max(0, std::min(nb - 1, idx));
        bin = bin * nb + idx;
      }
    }
    out.bin_of[static_cast<std::size_t>(r)] = bin;
  }
  return out;
}

/// Split/merge resampling toward `target` walkers per occupied bin. Splitting
/// divides the heaviest walker's weight equally among its clones; merging
/// combines the two lightest, the survivor drawn with probability
/// proportional to weight (ties on weight broken by lower id). Extremum bins
/// are exempt from merging. Weight is conserved to the last unit of
/// precision; every output walker gets a fresh id with parent_id pointing at
/// the input walker whose state it carries.
inline Ensemble resample(const Ensemble& ensemble,
                         const BinAssignment& assignment, int target, Rng& rng,
                         std::int64_t& next_id) {
  if (ensemble.walkers.empty())
    throw EmptyEnsemble("resample: empty ensemble");
  if (assignment.bin_of.size() != ensemble.walkers.size())
    throw DimensionMismatch("resample: one bin per walker required");
  if (target < 1)
    throw Error("resample: target must be >= 1");
  const double before = total_weight(ensemble);
  if (std::abs(before - 1.0) > 1e-12)
    throw Error("resample: ensemble weight drifted from 1");

  struct Item {
    const Walker* source; // input walker whose state survives
    double weight;
  };
  std::map<int, std::vector<Item>> by_bin;
  for (std::size_t i = 0; i < ensemble.walkers.size(); ++i)
    by_bin[assignment.bin_of[i]].push_back(
        {&ensemble.walkers[i], ensemble.walkers[i].weight});

  constexpr double kWeightFloor = 1e-300;
  Ensemble out;
  out.iteration = ensemble.iteration + 1;

  for (auto& [bin, items] : by_bin) {
    const bool exempt =
        assignment.extremum[static_cast<std::size_t>(bin)] != 0;

    // Merge the two lightest until at target (never in extremum bins).
    while (!exempt && static_cast<int>(items.size()) > target) {
      std::size_t a = 0, b = 1;
      auto lighter = [&](std::size_t i, std::size_t j) {
        if (items[i].weight != items[j].weight)
          return items[i].weight < items[j].weight;
        return items[i].source->id < items[j].source->id;
      };
      if (lighter(b, a))
        std::swap(a, b);
      for (std::size_t i = 2; i < items.size(); ++i) {
        if (lighter(i, a)) {
          b = a;
          a = i;
        } else if (lighter(i, b)) {
          b = i;
        }
      }
      const double sum = items[a].weight + items[b].weight;
      const bool keep_a = rng.uniform() < items[a].weight / sum;
      Item merged{keep_a ? items[a].source : items[b].source, sum};
      const std::size_t hi_idx = std::max(a, b), lo_idx = std::min(a, b);
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(hi_idx));
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(lo_idx));
      items.push_back(merged);
    }

    // Split the heaviest until at target (ties: lower id first).
    while (static_cast<int>(items.size()) < target) {
      std::size_t h = 0;
      for (std::size_t i = 1; i < items.size(); ++i) {
        if (items[i].weight > items[h].weight ||
            (items[i].weight == items[h].weight &&
             items[i].source->id < items[h].source->id))
          h = i;
      }
      const int deficit = target - static_cast<int>(items.size());
      int clones = deficit + 1;
      while (clones > 1 && items[h].weight / clones < kWeightFloor)
        --clones;
      if (clones < 2)
        break; // nothing in this bin can be split further
      const Item src = items[h];
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(h));
      const double share = src.weight / clones;
      for (int c = 0; c < clones - 1; ++c)
        items.push_back({src.source, share});
      items.push_back({src.source, src.weight - (clones - 1) * share});
    }

    for (const Item& item : items) {
      Walker w;
      w.id = next_id++;
      w.parent_id = item.source->id;
      w.state = item.source->state;
      w.weight = item.weight;
      w.iteration = out.iteration;
      w.pcoord = item.source->pcoord;
      out.walkers.push_back(std::move(w));
    }
  }
  return out;
}

/// Featurizes a segment's saved frames and projects them onto the leading
/// TICA components: one progress-coordinate row per saved time point.
inline Eigen::MatrixXd compute_pcoord(const TicaModel& model,
                                      const SegmentResult& seg, int dims) {
  if (dims < 1 || dims > model.n_components)
    throw DimensionMismatch("compute_pcoord: dims exceeds model components");
  return project(model, featurize(model.features, seg.trajectory))
      .leftCols(dims);
}

struct WeConfig {
  int walkers_per_bin = 3;
  int max_iterations = 200;
  MabBinning binning;
  int pcoord_dims = 2;
  TicaModel tica;
  PropagatorConfig propagator;
  Conformation initial_state;
  /// Optional early stop once TIC-space coverage of `coverage_reference`
  /// reaches this percentage (0 disables), checked every few iterations.
  double coverage_target = 0.0;
  int coverage_check_interval = 10;
  int coverage_grid = 100;
  Eigen::MatrixXd coverage_reference; // reference TIC points (first 2 dims)
};

inline void validate(const WeConfig& cfg) {
  validate(cfg.binning);
  validate(cfg.propagator);
  if (cfg.walkers_per_bin < 1)
    throw ConfigError("we: walkers_per_bin must be >= 1");
  if (cfg.max_iterations < 0)
    throw ConfigError("we: max_iterations must be >= 0");
  if (cfg.pcoord_dims < 1 || cfg.pcoord_dims > cfg.tica.n_components)
    throw ConfigError("we: pcoord_dims must be in [1, tica components]");
  if (cfg.pcoord_dims != cfg.binning.n_dims)
    throw ConfigError("we: binning dimensions must match pcoord_dims");
  if (cfg.coverage_target < 0.0 || cfg.coverage_target > 100.0)
    throw ConfigError("we: coverage_target must be a percentage");
  if (cfg.coverage_check_interval < 1)
    throw ConfigError("we: coverage_check_interval must be >= 1");
}

struct WalkerRow {
  std::int64_t id = 0;
  std::int64_t parent_id = -1;
  double weight = 0.0;
  std::vector<double> pcoord; // final saved point
  bool broken = false;
  std::int64_t frame_begin = -1; // into WeRunRecord::frames
  int frame_count = 0;
};

struct IterationRecord {
  std::vector<WalkerRow> walkers;             // the generation that propagated
  std::vector<std::vector<double>> bin_edges; // layout used for resampling
  double total_weight = 0.0;
};

struct WeRunRecord {
  WalkerRow initial; // the iteration-0 starting walker
  std::vector<IterationRecord> iterations;
  std::vector<Conformation> frames; // all saved frames, segment-major
  std::vector<double> frame_weights;
  std::vector<int> frame_iteration;
  bool aborted = false;
  std::string stop_reason;
};

namespace detail {

struct SegmentOutcome {
  SegmentResult result;
  Eigen::MatrixXd pcoords; // per saved point
};

} // namespace detail

/// Runs the iteration loop one step at a time: propagate -> project -> rebin
/// -> resample. Broken walkers are recorded, then dropped with their weight
/// redistributed proportionally over the survivors; a run whose walkers all
/// break is marked aborted rather than raising. Because every random draw is
/// keyed by (seed, purpose, walker/iteration), a driver resumed from a saved
/// ensemble continues bit-identically to an uninterrupted run, for any
/// thread count.
class WeDriver {
public:
  /// One iteration's freshly produced data, for incremental persistence.
  struct StepResult {
    IterationRecord record;
    std::vector<Conformation> new_frames;
    std::vector<double> new_frame_weights;
    int iteration = 0;
    bool aborted = false;
    std::string stop_reason; // set when the run just ended early
  };

  WeDriver(WeConfig cfg, int threads = 1)
      : cfg_(std::move(cfg)), threads_(threads) {
    validate(cfg_);
    check_shape(cfg_.propagator.potential, cfg_.initial_state);
    Walker w;
    w.id = 0;
    w.weight = 1.0;
    w.state = cfg_.initial_state;
    const Eigen::RowVectorXd pc = project_frame(cfg_.tica, cfg_.initial_state);
    w.pcoord.assign(pc.data(), pc.data() + cfg_.pcoord_dims);
    ensemble_.walkers.push_back(std::move(w));
    next_id_ = 1;
  }

  /// Resume from a saved ensemble: `completed` iterations are already done
  /// and `frames_so_far` frames already persisted.
  WeDriver(WeConfig cfg, int threads, Ensemble ensemble, std::int64_t next_id,
           int completed, std::int64_t frames_so_far,
           std::vector<std::array<double, 2>> seen_tics)
      : cfg_(std::move(cfg)), threads_(threads), ensemble_(std::move(ensemble)),
        next_id_(next_id), iteration_(completed), frame_counter_(frames_so_far),
        seen_tics_(std::move(seen_tics)) {
    validate(cfg_);
    if (ensemble_.walkers.empty())
      throw EmptyEnsemble("WeDriver: resumed ensemble is empty");
  }

  bool done() const { return finished_ || iteration_ >= cfg_.max_iterations; }
  int iteration() const { return iteration_; }
  std::int64_t next_id() const { return next_id_; }
  std::int64_t frames_recorded() const { return frame_counter_; }
  const Ensemble& ensemble() const { return ensemble_; }
  const std::string& stop_reason() const { return stop_reason_; }
  bool aborted() const { return aborted_; }

  StepResult step() {
    if (done())
      throw Error("WeDriver: stepping a finished run");
    const int iter = iteration_;
    const std::size_t n = ensemble_.walkers.size();
    std::vector<detail::SegmentOutcome> outcomes(n);
    parallel_for(n, threads_, [&](std::size_t i) {
      const Walker& w = ensemble_.walkers[i];
      detail::SegmentOutcome& o = outcomes[i];
      o.result = propagate_segment(cfg_.propagator, w.state, w.id, iter);
      o.pcoords = compute_pcoord(cfg_.tica, o.result, cfg_.pcoord_dims);
    });

    StepResult out;
    out.iteration = iter;
    double iter_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Walker& w = ensemble_.walkers[i];
      const detail::SegmentOutcome& o = outcomes[i];
      WalkerRow row;
      row.id = w.id;
      row.parent_id = w.parent_id;
      row.weight = w.weight;
      row.broken = o.result.broken;
      row.frame_begin = frame_counter_;
      row.frame_count = static_cast<int>(o.result.trajectory.frames.size());
      frame_counter_ += row.frame_count;
      const Eigen::Index last = o.pcoords.rows() - 1;
      row.pcoord.assign(o.pcoords.row(last).data(),
                        o.pcoords.row(last).data() + cfg_.pcoord_dims);
      for (const Conformation& frame : o.result.trajectory.frames) {
        out.new_frames.push_back(frame);
        out.new_frame_weights.push_back(w.weight);
      }
      for (Eigen::Index t = 0; t < o.pcoords.rows(); ++t)
        seen_tics_.push_back(
            {o.pcoords(t, 0), cfg_.pcoord_dims > 1 ? o.pcoords(t, 1) : 0.0});
      iter_weight += w.weight;
      out.record.walkers.push_back(std::move(row));
    }
    out.record.total_weight = iter_weight;
    if (std::abs(iter_weight - 1.0) > 1e-12)
      throw Error("run_we: weight conservation violated");

    // Survivors carry on from their final states; broken walkers forfeit
    // their weight to the rest, proportionally.
    Ensemble survivors;
    survivors.iteration = ensemble_.iteration;
    for (std::size_t i = 0; i < n; ++i) {
      if (outcomes[i].result.broken)
        continue;
      Walker w = ensemble_.walkers[i];
      w.state = outcomes[i].result.final_state;
      w.pcoord = out.record.walkers[i].pcoord;
      survivors.walkers.push_back(std::move(w));
    }
    ++iteration_;
    if (survivors.walkers.empty()) {
      finished_ = aborted_ = out.aborted = true;
      stop_reason_ = out.stop_reason =
          "all walkers broken at iteration " + std::to_string(iter);
      return out;
    }
    if (survivors.walkers.size() < n) {
      std::vector<double> weights;
      weights.reserve(survivors.walkers.size());
      for (const Walker& w : survivors.walkers)
        weights.push_back(w.weight);
      detail::exact_renormalize(weights);
      for (std::size_t i = 0; i < weights.size(); ++i)
        survivors.walkers[i].weight = weights[i];
    }

    Eigen::MatrixXd final_pcoords(survivors.walkers.size(), cfg_.pcoord_dims);
    for (std::size_t i = 0; i < survivors.walkers.size(); ++i)
      for (int d = 0; d < cfg_.pcoord_dims; ++d)
        final_pcoords(static_cast<Eigen::Index>(i), d) =
            survivors.walkers[i].pcoord[static_cast<std::size_t>(d)];

    const MabBins bins = update_mab_bins(cfg_.binning, final_pcoords);
    out.record.bin_edges = bins.edges;
    const BinAssignment assignment = assign_mab_bins(bins, final_pcoords);

    Rng rng(cfg_.propagator.seed_base, kStreamResample,
            static_cast<std::uint64_t>(iter));
    ensemble_ =
        resample(survivors, assignment, cfg_.walkers_per_bin, rng, next_id_);

    if (cfg_.coverage_target > 0.0 && cfg_.coverage_reference.rows() > 0 &&
        (iter + 1) % cfg_.coverage_check_interval == 0) {
      Eigen::MatrixXd model_tics(seen_tics_.size(),
                                 cfg_.coverage_reference.cols());
      for (std::size_t i = 0; i < seen_tics_.size(); ++i)
        for (Eigen::Index d = 0; d < model_tics.cols(); ++d)
          model_tics(static_cast<Eigen::Index>(i), d) =
              seen_tics_[i][static_cast<std::size_t>(d)];
      const double cov =
          coverage(cfg_.coverage_reference, model_tics, cfg_.coverage_grid);
      if (cov >= cfg_.coverage_target) {
        finished_ = true;
        stop_reason_ = out.stop_reason =
            "coverage target reached at iteration " + std::to_string(iter);
      }
    }
    return out;
  }

  /// Starting walker of a fresh run, for the run record.
  WalkerRow initial_row() const {
    WalkerRow row;
    row.id = 0;
    row.parent_id = -1;
    row.weight = 1.0;
    const Eigen::RowVectorXd pc = project_frame(cfg_.tica, cfg_.initial_state);
    row.pcoord.assign(pc.data(), pc.data() + cfg_.pcoord_dims);
    return row;
  }

private:
  WeConfig cfg_;
  int threads_ = 1;
  Ensemble ensemble_;
  std::int64_t next_id_ = 1;
  int iteration_ = 0;
  std::int64_t frame_counter_ = 0;
  std::vector<std::array<double, 2>> seen_tics_; // for coverage stopping
  bool finished_ = false, aborted_ = false;
  std::string stop_reason_;
};

inline WeRunRecord run_we(const WeConfig& cfg, int threads = 1) {
  WeDriver driver(cfg, threads);
  WeRunRecord record;
  record.initial = driver.initial_row();
  while (!driver.done()) {
    WeDriver::StepResult step = driver.step();
    for (std::size_t i = 0; i < step.new_frames.size(); ++i) {
      record.frames.push_back(std::move(step.new_frames[i]));
      record.frame_weights.push_back(step.new_frame_weights[i]);
      record.frame_iteration.push_back(step.iteration);
    }
    record.iterations.push_back(std::move(step.record));
  }
  record.aborted = driver.aborted();
  record.stop_reason = driver.stop_reason();
  return record;
}

} // namespace wesbench

#pragma once

// Subcommand implementations behind the CLI: reference generation, TICA
// fitting, checkpointed WE runs, the benchmark comparison with report and
// plots, and report pretty-printing. Everything here works through the
// on-disk formats so each stage can be rerun or resumed independently.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wesbench/bench/config.hpp"
#include "wesbench/bench/formats.hpp"
#include "wesbench/bench/plots.hpp"
#include "wesbench/metrics.hpp"
#include "wesbench/msm.hpp"
#include "wesbench/propagate.hpp"
#include "wesbench/tica.hpp"
#include "wesbench/we.hpp"

namespace wesbench {

namespace fs = std::filesystem;

// --- reference ------------------------------------------------------------

namespace detail {

inline fs::path meta_path_for(const fs::path& wetrj) {
  fs::path p = wetrj;
  p.replace_extension();
  p += "_meta.json";
  return p;
}

/// Splits a flattened frame set back into its source trajectories using the
/// sidecar lengths; one trajectory if no sidecar exists.
inline std::vector<std::vector<Conformation>>
split_trajectories(const fs::path& wetrj, std::vector<Conformation> frames) {
  const fs::path meta = meta_path_for(wetrj);
  std::vector<std::vector<Conformation>> out;
  if (!fs::exists(meta)) {
    out.push_back(std::move(frames));
    return out;
  }
  const ordered_json j = read_json(meta);
  const std::vector<std::int64_t> lengths =
      field(j, "trajectory_lengths", meta.string())
          .get<std::vector<std::int64_t>>();
  std::size_t at = 0;
  for (const std::int64_t len : lengths) {
    if (at + static_cast<std::size_t>(len) > frames.size())
      throw IoError(meta.string() + ": lengths exceed frame count");
    out.emplace_back(frames.begin() + static_cast<std::ptrdiff_t>(at),
                     frames.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += static_cast<std::size_t>(len);
  }
  if (at != frames.size())
    throw IoError(meta.string() + ": lengths do not cover all frames");
  return out;
}

inline TicaModel fit_tica_on(const FeatureSpec& features,
                             const std::vector<std::vector<Conformation>>& trajs,
                             int lag, int n_components) {
  std::vector<Eigen::MatrixXd> segments;
  segments.reserve(trajs.size());
  for (const auto& t : trajs)
    segments.push_back(featurize_frames(features, t));
  return fit_tica(segments, lag, n_components, features);
}

} // namespace detail

/// Plain-MD ground truth: independent trajectories from the configured
/// start, flattened into gt.wetrj with uniform weights, plus a sidecar with
/// the trajectory boundaries and the TICA model fitted on the result.
inline void cmd_reference(const BenchmarkConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  const int threads = worker_threads();

  const Conformation start = start_conformation(cfg);
  const std::vector<Conformation> starts(
      static_cast<std::size_t>(cfg.reference.n_starts), start);
  const std::vector<Trajectory> trajs =
      run_reference(cfg.propagator, starts, cfg.reference.segments_each,
                    threads);

  std::vector<Conformation> frames;
  std::vector<std::int64_t> lengths;
  for (const Trajectory& t : trajs) {
    lengths.push_back(static_cast<std::int64_t>(t.frames.size()));
    frames.insert(frames.end(), t.frames.begin(), t.frames.end());
  }
  if (frames.empty())
    throw Error("reference run produced no frames");
  std::vector<double> weights(frames.size(),
                              1.0 / static_cast<double>(frames.size()));
  detail::exact_renormalize(weights);
  write_wetb(dir / "gt.wetrj", frames, weights);

  ordered_json meta;
  meta["kind"] = "gt_meta";
  meta["system"] = to_string(cfg.system.kind);
  meta["temperature"] = cfg.system.temperature;
  meta["dt"] = cfg.propagator.dt;
  meta["save_interval"] = cfg.propagator.save_interval;
  meta["trajectory_lengths"] = lengths;
  detail::write_json(detail::meta_path_for(dir / "gt.wetrj"), meta);

  std::vector<std::vector<Conformation>> traj_frames;
  for (const Trajectory& t : trajs)
    traj_frames.push_back(t.frames);
  const TicaModel model = detail::fit_tica_on(
      cfg.tica.features, traj_frames, cfg.tica.lag, cfg.tica.n_components);
  detail::write_json(dir / "tica_model.json", to_json(model));

  std::string lambdas;
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i)
    lambdas += (i ? ", " : "") + svg::fmt(model.eigenvalues(i));
  std::cout << "[reference] " << frames.size() << " frames ("
            << trajs.size() << " trajectories) -> "
            << (dir / "gt.wetrj").string() << "\n"
            << "[reference] TICA eigenvalues: " << lambdas << " -> "
            << (dir / "tica_model.json").string() << "\n";
}

/// Fits a TICA model on an existing trajectory file (respecting its sidecar
/// boundaries) and writes it to the output directory.
inline void cmd_tica_fit(const BenchmarkConfig& cfg, const fs::path& wetrj) {
  WeightedFrameSet set = read_wetb(wetrj);
  const auto trajs = detail::split_trajectories(wetrj, std::move(set.frames));
  const TicaModel model = detail::fit_tica_on(
      cfg.tica.features, trajs, cfg.tica.lag, cfg.tica.n_components);
  fs::create_directories(cfg.output_dir);
  const fs::path out = fs::path(cfg.output_dir) / "tica_model.json";
  detail::write_json(out, to_json(model));
  std::cout << "[tica-fit] " << model.eigenvalues.size()
            << " components from " << wetrj.string() << " -> " << out.string()
            << "\n";
}

// --- we-run ---------------------------------------------------------------

namespace detail {

struct WePaths {
  fs::path dir, checkpoint, iterations, frames_raw, weights_raw, wetrj,
      record, model_copy;
};

inline WePaths we_paths(const fs::path& dir) {
  return {dir,
          dir / "we_checkpoint.json",
          dir / "we_iterations.jsonl",
          dir / "we_frames.f32",
          dir / "we_weights.f64",
          dir / "we_run.wetrj",
          dir / "we_record.json",
          dir / "tica_model.json"};
}

inline void remove_if_exists(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

inline std::vector<IterationRecord> read_iteration_log(const fs::path& path,
                                                       int limit) {
  std::vector<IterationRecord> out;
  if (!fs::exists(path))
    return out;
  std::ifstream in(path);
  std::string line;
  while (static_cast<int>(out.size()) < limit && std::getline(in, line)) {
    if (line.empty())
      continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError(path.string() + ": corrupt iteration log");
    out.push_back(iteration_from_json(j, path.string()));
  }
  if (static_cast<int>(out.size()) < limit)
    throw IoError(path.string() + ": iteration log shorter than checkpoint");
  return out;
}

inline void rewrite_iteration_log(const fs::path& path,
                                  const std::vector<IterationRecord>& its) {
  std::string data;
  for (const IterationRecord& it : its)
    data += iteration_to_json(it).dump() + "\n";
  spew(path, data);
}

/// Reads the raw frame/weight append logs back into a frame set, truncated
/// to `n_frames` entries (crash-tail tolerant).
inline WeightedFrameSet read_raw_frames(const WePaths& paths,
                                        const PotentialSpec& system,
                                        std::int64_t n_frames) {
  const std::size_t floats_per_frame =
      static_cast<std::size_t>(system.n_particles()) *
      static_cast<std::size_t>(system.dims());
  WeightedFrameSet set;
  set.frames.reserve(static_cast<std::size_t>(n_frames));
  if (n_frames == 0)
    return set;
  const std::string coords = slurp(paths.frames_raw);
  const std::string weights = slurp(paths.weights_raw);
  if (coords.size() < n_frames * floats_per_frame * sizeof(float) ||
      weights.size() < static_cast<std::size_t>(n_frames) * sizeof(double))
    throw IoError("WE raw frame logs are shorter than the checkpoint claims");
  for (std::int64_t i = 0; i < n_frames; ++i) {
    Conformation c;
    c.dims = system.dims();
    c.positions.resize(floats_per_frame);
    std::memcpy(c.positions.data(),
                coords.data() + static_cast<std::size_t>(i) *
                                    floats_per_frame * sizeof(float),
                floats_per_frame * sizeof(float));
    set.frames.push_back(std::move(c));
  }
  set.weights.resize(static_cast<std::size_t>(n_frames));
  std::memcpy(set.weights.data(), weights.data(),
              static_cast<std::size_t>(n_frames) * sizeof(double));
  return set;
}

inline WalkerRow initial_row_of(const TicaModel& model,
                                const Conformation& start, int pcoord_dims) {
  WalkerRow row;
  row.id = 0;
  row.parent_id = -1;
  row.weight = 1.0;
  const Eigen::RowVectorXd pc = project_frame(model, start);
  row.pcoord.assign(pc.data(), pc.data() + pcoord_dims);
  return row;
}

/// Assembles we_run.wetrj and we_record.json from the append logs.
inline void finalize_we(const WePaths& paths, const BenchmarkConfig& cfg,
                        const TicaModel& model, const std::string& model_bytes,
                        std::int64_t n_frames,
                        const std::vector<IterationRecord>& iterations,
                        bool aborted, const std::string& stop_reason) {
  WeightedFrameSet set = read_raw_frames(paths, cfg.system, n_frames);
  write_wetb(paths.wetrj, set.frames, set.weights);

  WeRunRecord record;
  record.initial =
      initial_row_of(model, start_conformation(cfg), cfg.we.pcoord_dims);
  record.iterations = iterations;
  record.aborted = aborted;
  record.stop_reason = stop_reason;
  write_json(paths.record, run_record_to_json(record));
  spew(paths.model_copy, model_bytes);
}

} // namespace detail

/// Checkpointed WE run. Every iteration appends its frames and walker table
/// to on-disk logs and rewrites the checkpoint, so an interrupted run reruns
/// from the last completed iteration — bit-identically to an uninterrupted
/// one, because all randomness is keyed by (seed, walker, iteration).
/// `gt_wetrj` supplies the reference TIC cloud when coverage-based stopping
/// is enabled.
inline void cmd_we(const BenchmarkConfig& cfg, const fs::path& tica_model_path,
                   const std::optional<fs::path>& gt_wetrj = std::nullopt) {
  const detail::WePaths paths = detail::we_paths(cfg.output_dir);
  fs::create_directories(paths.dir);
  const int threads = worker_threads();

  const std::string model_bytes = detail::slurp(tica_model_path);
  const TicaModel model = tica_from_json(detail::read_json(tica_model_path));
  const std::string hash = we_config_hash(cfg, model_bytes);

  WeConfig wcfg;
  wcfg.walkers_per_bin = cfg.we.walkers_per_bin;
  wcfg.max_iterations = cfg.we.max_iterations;
  wcfg.binning.bins_per_dim = cfg.we.bins_per_dim;
  wcfg.binning.n_dims = cfg.we.pcoord_dims;
  wcfg.binning.bottleneck_bins = cfg.we.bottleneck_bins;
  wcfg.pcoord_dims = cfg.we.pcoord_dims;
  wcfg.tica = model;
  wcfg.propagator = cfg.propagator;
  wcfg.initial_state = start_conformation(cfg);
  wcfg.coverage_target = cfg.we.coverage_target;
  wcfg.coverage_check_interval = cfg.we.coverage_check_interval;
  wcfg.coverage_grid = cfg.metrics.coverage_grid;
  if (cfg.we.coverage_target > 0.0) {
    if (!gt_wetrj)
      throw ConfigError(
          "we.coverage_target requires a reference trajectory argument");
    WeightedFrameSet gt = read_wetb(*gt_wetrj);
    const Eigen::MatrixXd tics =
        project(model, featurize_frames(model.features, gt.frames));
    wcfg.coverage_reference =
        tics.leftCols(std::min<Eigen::Index>(2, cfg.we.pcoord_dims));
  }

  // Decide between resuming and starting over.
  std::vector<IterationRecord> iterations;
  std::optional<WeDriver> driver;
  bool resumed = false;
  if (fs::exists(paths.checkpoint)) {
    const WeCheckpoint ck =
        checkpoint_from_json(detail::read_json(paths.checkpoint));
    if (ck.config_hash == hash) {
      iterations = detail::read_iteration_log(paths.iterations,
                                              ck.completed_iterations);
      detail::rewrite_iteration_log(paths.iterations, iterations);
      if (ck.finished || ck.completed_iterations >= cfg.we.max_iterations) {
        // Terminal checkpoint: (re)assemble the outputs and stop.
        detail::finalize_we(paths, cfg, model, model_bytes, ck.frames_written,
                            iterations, ck.aborted, ck.stop_reason);
        std::cout << "[we-run] already complete ("
                  << ck.completed_iterations << " iterations) -> "
                  << paths.wetrj.string() << "\n";
        return;
      }
      const std::size_t floats_per_frame =
          static_cast<std::size_t>(cfg.system.n_particles()) *
          static_cast<std::size_t>(cfg.system.dims());
      fs::resize_file(paths.frames_raw,
                      static_cast<std::uintmax_t>(ck.frames_written) *
                          floats_per_frame * sizeof(float));
      fs::resize_file(paths.weights_raw,
                      static_cast<std::uintmax_t>(ck.frames_written) *
                          sizeof(double));
      const WeightedFrameSet so_far =
          detail::read_raw_frames(paths, cfg.system, ck.frames_written);
      const Eigen::MatrixXd tics =
          project(model, featurize_frames(model.features, so_far.frames));
      std::vector<std::array<double, 2>> seen(
          static_cast<std::size_t>(tics.rows()));
      for (Eigen::Index i = 0; i < tics.rows(); ++i)
        seen[static_cast<std::size_t>(i)] = {
            tics(i, 0), cfg.we.pcoord_dims > 1 ? tics(i, 1) : 0.0};
      Ensemble ensemble;
      ensemble.walkers = ck.ensemble;
      driver.emplace(wcfg, threads, std::move(ensemble), ck.next_id,
                     ck.completed_iterations, ck.frames_written,
                     std::move(seen));
      resumed = true;
      std::cout << "[we-run] resuming after iteration "
                << ck.completed_iterations << "\n";
    }
  }
  if (!driver) {
    for (const fs::path& p :
         {paths.checkpoint, paths.iterations, paths.frames_raw,
          paths.weights_raw, paths.wetrj, paths.record})
      detail::remove_if_exists(p);
    driver.emplace(wcfg, threads);
  }
  if (!resumed) {
    // Create empty logs so a zero-iteration run still finalizes.
    std::ofstream(paths.frames_raw, std::ios::binary);
    std::ofstream(paths.weights_raw, std::ios::binary);
  }

  {
    std::ofstream frames_out(paths.frames_raw,
                             std::ios::binary | std::ios::app);
    std::ofstream weights_out(paths.weights_raw,
                              std::ios::binary | std::ios::app);
    std::ofstream log_out(paths.iterations, std::ios::app);
    while (!driver->done()) {
      WeDriver::StepResult step = driver->step();
      for (const Conformation& frame : step.new_frames)
        frames_out.write(
            reinterpret_cast<const char*>(frame.positions.data()),
            static_cast<std::streamsize>(frame.positions.size() *
                                         sizeof(float)));
      weights_out.write(
          reinterpret_cast<const char*>(step.new_frame_weights.data()),
          static_cast<std::streamsize>(step.new_frame_weights.size() *
                                       sizeof(double)));
      frames_out.flush();
      weights_out.flush();
      if (!frames_out || !weights_out)
        throw IoError("we-run: failed to append frame logs");
      log_out << iteration_to_json(step.record).dump() << "\n";
      log_out.flush();
      iterations.push_back(std::move(step.record));

      WeCheckpoint ck;
      ck.config_hash = hash;
      ck.completed_iterations = driver->iteration();
      ck.next_id = driver->next_id();
      ck.frames_written = driver->frames_recorded();
      // "finished" means terminal regardless of the iteration budget (an
      // abort or a reached coverage target); a budget-exhausted run stays
      // resumable under a raised max_iterations.
      ck.finished = driver->aborted() || !driver->stop_reason().empty();
      ck.stop_reason = driver->stop_reason();
      ck.aborted = driver->aborted();
      ck.ensemble = driver->ensemble().walkers;
      detail::write_json(paths.checkpoint, to_json(ck));
    }
  }

  detail::finalize_we(paths, cfg, model, model_bytes,
                      driver->frames_recorded(), iterations,
                      driver->aborted(), driver->stop_reason());
  std::cout << "[we-run] " << iterations.size() << " iterations, "
            << driver->frames_recorded() << " frames -> "
            << paths.wetrj.string() << "\n";
  if (driver->aborted())
    std::cout << "[we-run] run aborted: " << driver->stop_reason() << "\n";
  else if (!driver->stop_reason().empty())
    std::cout << "[we-run] " << driver->stop_reason() << "\n";
}

// --- benchmark ------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline std::vector<double> expand_weights(const std::vector<double>& per_frame,
                                          int features_per_frame) {
  std::vector<double> out;
  out.reserve(per_frame.size() *
              static_cast<std::size_t>(features_per_frame));
  for (const double w : per_frame)
    for (int k = 0; k < features_per_frame; ++k)
      out.push_back(w);
  return out;
}

inline ordered_json report_to_json(const MetricReport& report) {
  ordered_json j;
  j["kind"] = "metric_report";
  j["weighting"] = report.weighting;
  j["reference"] = report.gt_id;
  j["model"] = report.model_id;
  j["coverage_percent"] = report.coverage_percent;
  if (report.bond_band_fraction >= 0.0)
    j["bond_band_fraction"] = report.bond_band_fraction;
  ordered_json obs = ordered_json::array();
  for (const ObservableMetrics& o : report.observables) {
    ordered_json oj;
    oj["name"] = o.name;
    oj["kl"] = o.kl;
    oj["w1"] = o.w1;
    obs.push_back(std::move(oj));
  }
  j["observables"] = std::move(obs);
  j["contact_map"] = to_json(report.contact_map);
  return j;
}

inline MetricReport report_from_json(const ordered_json& j) {
  const std::string what = "metric_report";
  if (field(j, "kind", what).get<std::string>() != "metric_report")
    throw IoError(what + ": wrong \"kind\"");
  MetricReport report;
  report.weighting = field(j, "weighting", what).get<std::string>();
  report.gt_id = field(j, "reference", what).get<std::string>();
  report.model_id = field(j, "model", what).get<std::string>();
  report.coverage_percent =
      field(j, "coverage_percent", what).get<double>();
  if (j.contains("bond_band_fraction"))
    report.bond_band_fraction = j["bond_band_fraction"].get<double>();
  for (const auto& oj : field(j, "observables", what))
    report.observables.push_back({field(oj, "name", what).get<std::string>(),
                                  field(oj, "kl", what).get<double>(),
                                  field(oj, "w1", what).get<double>()});
  report.contact_map =
      matrix_from_json(field(j, "contact_map", what), what);
  return report;
}

/// Per-walker-segment TIC matrices: each walker's saved points form one
/// continuous sequence, which is what the lagged MSM counts may cross.
inline std::vector<Eigen::MatrixXd>
segment_tics(const Eigen::MatrixXd& tics, const WeRunRecord& record,
             Eigen::Index cols) {
  std::vector<Eigen::MatrixXd> segments;
  for (const IterationRecord& it : record.iterations)
    for (const WalkerRow& row : it.walkers) {
      if (row.frame_count <= 0)
        continue;
      segments.push_back(
          tics.middleRows(row.frame_begin, row.frame_count).leftCols(cols));
    }
  return segments;
}

} // namespace detail

/// Compares a WE run directory against a reference trajectory that shares
/// its TICA model: metric report, MSM and macrostate model files, and the
/// plot set, all under the configured weighting mode.
inline void cmd_benchmark(const BenchmarkConfig& cfg, const fs::path& gt_path,
                          const fs::path& we_path) {
  const fs::path we_dir =
      fs::is_directory(we_path) ? we_path : we_path.parent_path();
  const detail::WePaths paths = detail::we_paths(we_dir);
  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir / "plots");

  const TicaModel model = tica_from_json(detail::read_json(paths.model_copy));
  WeightedFrameSet gt = normalize(read_wetb(gt_path));
  gt.source = WeightSource::RAW_UNWEIGHTED;
  WeightedFrameSet we_raw = read_wetb(paths.wetrj);
  const WeRunRecord record =
      run_record_from_json(detail::read_json(paths.record));

  WeightedFrameSet we_weighted = we_raw;
  we_weighted.source = WeightSource::WE_WEIGHTED;
  we_weighted = normalize(std::move(we_weighted));

  const Eigen::MatrixXd gt_tics =
      project(model, featurize_frames(model.features, gt.frames));
  const Eigen::MatrixXd we_tics =
      project(model, featurize_frames(model.features, we_raw.frames));
  const Eigen::Index tic_dims = std::min<Eigen::Index>(2, gt_tics.cols());

  // MSM over a reference-bounded TIC grid; optional unless the weighting
  // mode requires it.
  std::optional<WeightedFrameSet> msm_weighted;
  std::string msm_failure;
  try {
    RectilinearGrid grid = make_grid(gt_tics.leftCols(tic_dims).eval(),
                                     cfg.msm.grid_n);
    std::vector<std::vector<int>> seqs;
    for (const Eigen::MatrixXd& seg :
         detail::segment_tics(we_tics, record, tic_dims))
      seqs.push_back(assign_bins(grid, seg));
    const MsmModel msm = fit_msm(grid, seqs, cfg.msm.lag);
    const std::vector<int> frame_cells =
        assign_bins(grid, we_tics.leftCols(tic_dims).eval());
    msm_weighted = msm_reweight(msm, frame_cells, we_raw.frames);
    detail::write_json(out_dir / "msm_model.json", to_json(msm));
  } catch (const Error& e) {
    msm_failure = e.what();
  }
  if (!msm_weighted &&
      cfg.metrics.weighting_mode == WeightSource::MSM_REWEIGHTED)
    throw Error("msm reweighting unavailable: " + msm_failure);

  WeightedFrameSet model_set;
  switch (cfg.metrics.weighting_mode) {
  case WeightSource::WE_WEIGHTED:
    model_set = we_weighted;
    break;
  case WeightSource::MSM_REWEIGHTED:
    model_set = *msm_weighted;
    break;
  case WeightSource::RAW_UNWEIGHTED:
    model_set.frames = we_raw.frames;
    model_set.weights.assign(we_raw.frames.size(),
                             1.0 / static_cast<double>(we_raw.frames.size()));
    detail::exact_renormalize(model_set.weights);
    model_set.source = WeightSource::RAW_UNWEIGHTED;
    break;
  }

  ReportConfig rc;
  rc.histogram_bins = cfg.metrics.histogram_bins;
  rc.coverage_grid = cfg.metrics.coverage_grid;
  rc.kl_epsilon = cfg.metrics.kl_epsilon;
  const MetricReport report =
      build_report(gt, model_set, model, rc, gt_path.filename().string(),
                   we_dir.filename().string());
  detail::write_json(out_dir / "report.json", detail::report_to_json(report));

  // Macrostates on the model's TIC cloud (best effort; a tiny aborted run
  // may not support the configured cluster count).
  std::optional<MacrostateModel> macro;
  std::vector<int> frame_macrostate;
  try {
    const auto segments = detail::segment_tics(we_tics, record, tic_dims);
    Eigen::Index total = 0;
    for (const auto& s : segments)
      total += s.rows();
    const int k = std::min<int>(cfg.macrostates.n_clusters,
                                static_cast<int>(total));
    const int m = std::min<int>(cfg.macrostates.n_macrostates, k);
    macro = fit_macrostates(segments, cfg.msm.lag, k, m, cfg.seed);
    frame_macrostate.resize(static_cast<std::size_t>(we_tics.rows()));
    for (Eigen::Index i = 0; i < we_tics.rows(); ++i) {
      Eigen::Index best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < macro->kmeans_centers.rows(); ++c) {
        const double d2 = (we_tics.row(i).leftCols(tic_dims) -
                           macro->kmeans_centers.row(c))
                              .squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      frame_macrostate[static_cast<std::size_t>(i)] =
          macro->assignment[static_cast<std::size_t>(best)];
    }
    detail::write_json(out_dir / "macrostates.json", to_json(*macro));
  } catch (const Error&) {
    macro.reset();
  }

  // Plot set.
  const fs::path plot_dir = out_dir / "plots";
  if (tic_dims >= 2) {
    detail::spew(plot_dir / "tic_density.svg",
                 plots::tic_contour_overlay(
                     gt_tics, detail::to_vector(gt.weights), we_tics,
                     detail::to_vector(model_set.weights)));
    std::vector<std::array<double, 3>> points;
    for (std::size_t i = 0; i < record.iterations.size(); ++i)
      for (const WalkerRow& row : record.iterations[i].walkers)
        points.push_back({row.pcoord[0],
                          row.pcoord.size() > 1 ? row.pcoord[1] : 0.0,
                          static_cast<double>(i)});
    detail::spew(plot_dir / "we_iterations.svg",
                 plots::we_exploration_scatter(
                     points, static_cast<int>(record.iterations.size())));
    if (macro)
      detail::spew(plot_dir / "macrostates.svg",
                   plots::macrostate_scatter(we_tics, frame_macrostate,
                                             macro->n_macrostates));
  }
  if (report.contact_map.rows() >= 2)
    detail::spew(plot_dir / "contact_map.svg",
                 plots::contact_map_heatmap(report.contact_map));

  {
    std::vector<plots::DistributionPanel> panels;
    auto add_panel = [&](const std::string& title,
                         const std::vector<double>& gv,
                         const std::vector<double>& gw,
                         const std::vector<double>& mv,
                         const std::vector<double>& mw) {
      const auto [p, q] =
          paired_histograms(gv, gw, mv, mw, cfg.metrics.histogram_bins);
      panels.push_back({title, p, q});
    };
    auto gyration_of = [](const std::vector<Conformation>& frames) {
      std::vector<double> out;
      out.reserve(frames.size());
      for (const Conformation& f : frames)
        out.push_back(radius_of_gyration(f));
      return out;
    };
    const int n_particles = gt.frames.front().n_particles();
    if (n_particles >= 4) {
      const BadFeatures g = bad_features(gt.frames);
      const BadFeatures m = bad_features(model_set.frames);
      add_panel("Bonds", g.bonds,
                detail::expand_weights(gt.weights, g.features_per_frame_bonds),
                m.bonds,
                detail::expand_weights(model_set.weights,
                                       m.features_per_frame_bonds));
      add_panel("Angles", g.angles,
                detail::expand_weights(gt.weights,
                                       g.features_per_frame_angles),
                m.angles,
                detail::expand_weights(model_set.weights,
                                       m.features_per_frame_angles));
      add_panel("Dihedrals", g.dihedrals,
                detail::expand_weights(gt.weights,
                                       g.features_per_frame_dihedrals),
                m.dihedrals,
                detail::expand_weights(model_set.weights,
                                       m.features_per_frame_dihedrals));
      add_panel("Gyration", gyration_of(gt.frames), gt.weights,
                gyration_of(model_set.frames), model_set.weights);
    } else {
      for (Eigen::Index t = 0; t < std::min<Eigen::Index>(2, gt_tics.cols());
           ++t) {
        std::vector<double> gv(static_cast<std::size_t>(gt_tics.rows()));
        std::vector<double> mv(static_cast<std::size_t>(we_tics.rows()));
        for (Eigen::Index i = 0; i < gt_tics.rows(); ++i)
          gv[static_cast<std::size_t>(i)] = gt_tics(i, t);
        for (Eigen::Index i = 0; i < we_tics.rows(); ++i)
          mv[static_cast<std::size_t>(i)] = we_tics(i, t);
        add_panel("TIC " + std::to_string(t), gv, gt.weights, mv,
                  model_set.weights);
      }
      add_panel("Gyration", gyration_of(gt.frames), gt.weights,
                gyration_of(model_set.frames), model_set.weights);
    }
    detail::spew(plot_dir / "distributions.svg",
                 plots::distribution_panels(panels));
  }

  if (msm_weighted) {
    std::vector<double> tic0(static_cast<std::size_t>(we_tics.rows()));
    for (Eigen::Index i = 0; i < we_tics.rows(); ++i)
      tic0[static_cast<std::size_t>(i)] = we_tics(i, 0);
    detail::spew(plot_dir / "msm_overlay.svg",
                 plots::msm_overlay("TIC 0", tic0, we_weighted.weights,
                                    msm_weighted->weights));
  }

  std::cout << "[benchmark] report (" << report.weighting << ") -> "
            << (out_dir / "report.json").string() << "\n";
  std::printf("[benchmark] coverage %.2f%%", report.coverage_percent);
  if (report.bond_band_fraction >= 0.0)
    std::printf(", bond-band fraction %.4f", report.bond_band_fraction);
  std::printf("\n");
  for (const ObservableMetrics& o : report.observables)
    std::printf("[benchmark] %-10s KL %.4f  W1 %.4f\n", o.name.c_str(), o.kl,
                o.w1);
  if (!msm_weighted)
    std::cout << "[benchmark] msm reweighting skipped: " << msm_failure
              << "\n";
}

/// Pretty-prints an existing report.json.
inline void cmd_report(const fs::path& report_path) {
  const MetricReport report =
      detail::report_from_json(detail::read_json(report_path));
  std::printf("benchmark report: %s\n", report_path.string().c_str());
  std::printf("  weighting:  %s\n", report.weighting.c_str());
  std::printf("  reference:  %s\n", report.gt_id.c_str());
  std::printf("  model:      %s\n", report.model_id.c_str());
  std::printf("  coverage:   %.2f %%\n", report.coverage_percent);
  if (report.bond_band_fraction >= 0.0)
    std::printf("  bond band:  %.4f of bond mass in [3.5, 4.5]\n",
                report.bond_band_fraction);
  std::printf("  %-12s %12s %12s\n", "observable", "KL", "W1");
  for (const ObservableMetrics& o : report.observables)
    std::printf("  %-12s %12.6f %12.6f\n", o.name.c_str(), o.kl, o.w1);
  if (report.contact_map.rows() > 0) {
    double peak = 0.0;
    for (Eigen::Index i = 0; i < report.contact_map.rows(); ++i)
      for (Eigen::Index c = 0; c < report.contact_map.cols(); ++c)
        peak = std::max(peak, std::abs(report.contact_map(i, c)));
    std::printf("  contact map: %dx%d, max |difference| %.6f\n",
                static_cast<int>(report.contact_map.rows()),
                static_cast<int>(report.contact_map.cols()), peak);
  }
}

} // namespace wesbench

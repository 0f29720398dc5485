#pragma once

// On-disk formats for the benchmark pipeline: the WETB weighted-trajectory
// container plus JSON round-trips for fitted models, run records, and
// checkpoints. Doubles go through the JSON library's shortest-round-trip
// formatter, so every serialize/parse cycle is bit-exact.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wesbench/core.hpp"
#include "wesbench/msm.hpp"
#include "wesbench/tica.hpp"
#include "wesbench/we.hpp"

namespace wesbench {

using ordered_json = nlohmann::ordered_json;

// --- WETB: weights + float32 coordinates, little-endian ------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

template <class T>
inline void put_array(std::string& out, const T* data, std::size_t count) {
  const std::size_t bytes = count * sizeof(T);
  const std::size_t at = out.size();
  out.resize(at + bytes);
  std::memcpy(out.data() + at, data, bytes);
}

class ByteReader {
public:
  ByteReader(const std::string& data, const std::string& what)
      : data_(data), what_(what) {}

  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, 4);
    return v;
  }
  template <class T> void array_into(T* dst, std::size_t count) {
    take(dst, count * sizeof(T));
  }
  bool exhausted() const { return pos_ == data_.size(); }

private:
  void take(void* dst, std::size_t bytes) {
    if (pos_ + bytes > data_.size())
      throw IoError(what_ + ": truncated file");
    std::memcpy(dst, data_.data() + pos_, bytes);
    pos_ += bytes;
  }
  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof())
    throw IoError("error reading " + path.string());
  return data;
}

inline void spew(const std::filesystem::path& path, const std::string& data) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out.good())
      throw IoError("error writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

} // namespace detail

inline constexpr std::uint32_t kWetbVersion = 1;

/// Writes frames and their weights as a WETB file: magic "WETB", version,
/// frame/particle/dimension counts, float64 weights, then float32
/// coordinates in frame-major order.
inline void write_wetb(const std::filesystem::path& path,
                       const std::vector<Conformation>& frames,
                       const std::vector<double>& weights) {
  if (frames.size() != weights.size())
    throw Error("write_wetb: frame and weight counts differ");
  std::uint32_t n_particles = 0, dims = 0;
  if (!frames.empty()) {
    n_particles = static_cast<std::uint32_t>(frames[0].n_particles());
    dims = static_cast<std::uint32_t>(frames[0].dims);
  }
  std::string out;
  out.reserve(20 + frames.size() * (8 + n_particles * dims * 4));
  out.append("WETB", 4);
  detail::put_u32(out, kWetbVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(frames.size()));
  detail::put_u32(out, n_particles);
  detail::put_u32(out, dims);
  detail::put_array(out, weights.data(), weights.size());
  for (const Conformation& frame : frames) {
    if (frame.n_particles() != static_cast<int>(n_particles) ||
        frame.dims != static_cast<int>(dims))
      throw Error("write_wetb: frames disagree on shape");
    detail::put_array(out, frame.positions.data(), frame.positions.size());
  }
  detail::spew(path, out);
}

inline WeightedFrameSet read_wetb(const std::filesystem::path& path) {
  const std::string data = detail::slurp(path);
  detail::ByteReader r(data, path.string());
  char magic[4];
  r.array_into(magic, 4);
  if (std::memcmp(magic, "WETB", 4) != 0)
    throw IoError(path.string() + ": not a WETB file");
  const std::uint32_t version = r.u32();
  if (version != kWetbVersion)
    throw IoError(path.string() + ": unsupported WETB version " +
                  std::to_string(version));
  const std::uint32_t n_frames = r.u32();
  const std::uint32_t n_particles = r.u32();
  const std::uint32_t dims = r.u32();
  WeightedFrameSet set;
  set.weights.resize(n_frames);
  r.array_into(set.weights.data(), n_frames);
  set.frames.reserve(n_frames);
  for (std::uint32_t i = 0; i < n_frames; ++i) {
    Conformation frame;
    frame.dims = static_cast<int>(dims);
    frame.positions.resize(std::size_t(n_particles) * dims);
    r.array_into(frame.positions.data(), frame.positions.size());
    set.frames.push_back(std::move(frame));
  }
  if (!r.exhausted())
    throw IoError(path.string() + ": trailing bytes after payload");
  return set;
}

// --- JSON helpers --------------------------------------------------------

namespace detail {

inline ordered_json to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ordered_json to_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const ordered_json& j,
                                        const std::string& what) {
  if (!j.is_array())
    throw IoError(what + ": expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = 0;
  if (rows > 0) {
    if (!j[0].is_array())
      throw IoError(what + ": expected nested arrays");
    cols = static_cast<Eigen::Index>(j[0].size());
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError(what + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const ordered_json& j,
                                        const std::string& what) {
  if (!j.is_array())
    throw IoError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline const ordered_json& field(const ordered_json& j, const char* key,
                                 const std::string& what) {
  auto it = j.find(key);
  if (it == j.end())
    throw IoError(what + ": missing field \"" + key + "\"");
  return *it;
}

inline void write_json(const std::filesystem::path& path,
                       const ordered_json& j) {
  spew(path, j.dump(2) + "\n");
}

inline ordered_json read_json(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  ordered_json j = ordered_json::parse(data, nullptr, false);
  if (j.is_discarded())
    throw IoError(path.string() + ": invalid JSON");
  return j;
}

} // namespace detail

// --- TICA model ----------------------------------------------------------

inline const char* to_string(FeatureKind kind) {
  switch (kind) {
  case FeatureKind::RAW_COORDS_2D:
    return "raw_coords_2d";
  case FeatureKind::PAIRWISE_DISTANCES:
    return "pairwise_distances";
  }
  throw Error("unknown feature kind");
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "raw_coords_2d")
    return FeatureKind::RAW_COORDS_2D;
  if (s == "pairwise_distances")
    return FeatureKind::PAIRWISE_DISTANCES;
  throw IoError("unknown featurization \"" + s + "\"");
}

inline ordered_json to_json(const TicaModel& model) {
  ordered_json j;
  j["kind"] = "tica_model";
  j["featurization"] = to_string(model.features.kind);
  ordered_json pairs = ordered_json::array();
  for (const auto& p : model.features.pair_list)
    pairs.push_back(ordered_json::array({p.first, p.second}));
  j["pair_list"] = std::move(pairs);
  j["lag"] = model.lag;
  j["n_components"] = model.n_components;
  j["mean"] = detail::to_json(model.mean);
  j["whitening"] = detail::to_json(model.whitening);
  j["singular"] = detail::to_json(model.singular);
  j["rotation"] = detail::to_json(model.rotation);
  j["transform"] = detail::to_json(model.transform);
  j["eigenvalues"] = detail::to_json(model.eigenvalues);
  return j;
}

inline TicaModel tica_from_json(const ordered_json& j) {
  const std::string what = "tica_model";
  if (detail::field(j, "kind", what).get<std::string>() != "tica_model")
    throw IoError(what + ": wrong \"kind\"");
  TicaModel model;
  model.features.kind = feature_kind_from_string(
      detail::field(j, "featurization", what).get<std::string>());
  for (const auto& p : detail::field(j, "pair_list", what))
    model.features.pair_list.emplace_back(p.at(0).get<int>(),
                                          p.at(1).get<int>());
  model.lag = detail::field(j, "lag", what).get<int>();
  model.n_components = detail::field(j, "n_components", what).get<int>();
  model.mean = detail::vector_from_json(detail::field(j, "mean", what), what);
  model.whitening =
      detail::matrix_from_json(detail::field(j, "whitening", what), what);
  model.singular =
      detail::vector_from_json(detail::field(j, "singular", what), what);
  model.rotation =
      detail::matrix_from_json(detail::field(j, "rotation", what), what);
  model.transform =
      detail::matrix_from_json(detail::field(j, "transform", what), what);
  model.eigenvalues =
      detail::vector_from_json(detail::field(j, "eigenvalues", what), what);
  return model;
}

// --- MSM model -----------------------------------------------------------

inline ordered_json to_json(const MsmModel& model) {
  ordered_json j;
  j["kind"] = "msm_model";
  j["lag"] = model.lag;
  ordered_json grid;
  grid["n_per_dim"] = model.grid.n_per_dim;
  grid["dims"] = model.grid.dims;
  ordered_json bounds = ordered_json::array();
  for (const auto& b : model.grid.bounds)
    bounds.push_back(ordered_json::array({b[0], b[1]}));
  grid["bounds"] = std::move(bounds);
  j["grid"] = std::move(grid);
  j["states"] = model.states;
  j["kept"] = model.kept;
  ordered_json counts = ordered_json::array();
  for (int k = 0; k < model.counts.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(model.counts, k); it;
         ++it)
      counts.push_back(ordered_json::array(
          {static_cast<int>(it.row()), static_cast<int>(it.col()),
           it.value()}));
  j["counts"] = std::move(counts);
  ordered_json transition = ordered_json::array();
  for (int k = 0; k < model.transition.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(model.transition, k); it;
         ++it)
      transition.push_back(ordered_json::array(
          {static_cast<int>(it.row()), static_cast<int>(it.col()),
           it.value()}));
  j["transition"] = std::move(transition);
  j["stationary"] = detail::to_json(model.stationary);
  return j;
}

inline MsmModel msm_from_json(const ordered_json& j) {
  const std::string what = "msm_model";
  if (detail::field(j, "kind", what).get<std::string>() != "msm_model")
    throw IoError(what + ": wrong \"kind\"");
  MsmModel model;
  model.lag = detail::field(j, "lag", what).get<int>();
  const auto& grid = detail::field(j, "grid", what);
  model.grid.n_per_dim = detail::field(grid, "n_per_dim", what).get<int>();
  model.grid.dims = detail::field(grid, "dims", what).get<int>();
  for (const auto& b : detail::field(grid, "bounds", what))
    model.grid.bounds.push_back({b.at(0).get<double>(),
                                 b.at(1).get<double>()});
  model.states = detail::field(j, "states", what).get<std::vector<int>>();
  model.kept = detail::field(j, "kept", what).get<std::vector<int>>();
  const int n_states = static_cast<int>(model.states.size());
  const int n_kept = static_cast<int>(model.kept.size());
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& t : detail::field(j, "counts", what))
      trip.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(),
                        t.at(2).get<double>());
    model.counts.resize(n_states, n_states);
    model.counts.setFromTriplets(trip.begin(), trip.end());
  }
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& t : detail::field(j, "transition", what))
      trip.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(),
                        t.at(2).get<double>());
    model.transition.resize(n_kept, n_kept);
    model.transition.setFromTriplets(trip.begin(), trip.end());
  }
  model.stationary =
      detail::vector_from_json(detail::field(j, "stationary", what), what);
  return model;
}

// --- Macrostate model ----------------------------------------------------

inline ordered_json to_json(const MacrostateModel& model) {
  ordered_json j;
  j["kind"] = "macrostate_model";
  j["n_macrostates"] = model.n_macrostates;
  j["kmeans_centers"] = detail::to_json(model.kmeans_centers);
  j["kept_clusters"] = model.kept_clusters;
  j["cluster_transition"] = detail::to_json(model.cluster_transition);
  j["memberships"] = detail::to_json(model.memberships);
  j["assignment"] = model.assignment;
  return j;
}

inline MacrostateModel macrostates_from_json(const ordered_json& j) {
  const std::string what = "macrostate_model";
  if (detail::field(j, "kind", what).get<std::string>() != "macrostate_model")
    throw IoError(what + ": wrong \"kind\"");
  MacrostateModel model;
  model.n_macrostates = detail::field(j, "n_macrostates", what).get<int>();
  model.kmeans_centers = detail::matrix_from_json(
      detail::field(j, "kmeans_centers", what), what);
  model.kept_clusters =
      detail::field(j, "kept_clusters", what).get<std::vector<int>>();
  model.cluster_transition = detail::matrix_from_json(
      detail::field(j, "cluster_transition", what), what);
  model.memberships =
      detail::matrix_from_json(detail::field(j, "memberships", what), what);
  model.assignment =
      detail::field(j, "assignment", what).get<std::vector<int>>();
  return model;
}

// --- WE run record -------------------------------------------------------

namespace detail {

inline ordered_json to_json(const WalkerRow& row) {
  ordered_json j;
  j["id"] = row.id;
  j["parent_id"] = row.parent_id;
  j["weight"] = row.weight;
  j["pcoord"] = row.pcoord;
  j["broken"] = row.broken;
  j["frame_begin"] = row.frame_begin;
  j["frame_count"] = row.frame_count;
  return j;
}

inline WalkerRow walker_row_from_json(const ordered_json& j,
                                      const std::string& what) {
  WalkerRow row;
  row.id = field(j, "id", what).get<std::int64_t>();
  row.parent_id = field(j, "parent_id", what).get<std::int64_t>();
  row.weight = field(j, "weight", what).get<double>();
  row.pcoord = field(j, "pcoord", what).get<std::vector<double>>();
  row.broken = field(j, "broken", what).get<bool>();
  row.frame_begin = field(j, "frame_begin", what).get<std::int64_t>();
  row.frame_count = field(j, "frame_count", what).get<int>();
  return row;
}

} // namespace detail

inline ordered_json iteration_to_json(const IterationRecord& it) {
  ordered_json ij;
  ij["total_weight"] = it.total_weight;
  ordered_json edges = ordered_json::array();
  for (const auto& dim_edges : it.bin_edges)
    edges.push_back(dim_edges);
  ij["bin_edges"] = std::move(edges);
  ordered_json walkers = ordered_json::array();
  for (const WalkerRow& row : it.walkers)
    walkers.push_back(detail::to_json(row));
  ij["walkers"] = std::move(walkers);
  return ij;
}

inline IterationRecord iteration_from_json(const ordered_json& ij,
                                           const std::string& what) {
  IterationRecord it;
  it.total_weight = detail::field(ij, "total_weight", what).get<double>();
  for (const auto& e : detail::field(ij, "bin_edges", what))
    it.bin_edges.push_back(e.get<std::vector<double>>());
  for (const auto& wj : detail::field(ij, "walkers", what))
    it.walkers.push_back(detail::walker_row_from_json(wj, what));
  return it;
}

/// The walker tables only; frames and weights live in the companion WETB
/// file, and per-frame iteration indices are reconstructed from the rows.
inline ordered_json run_record_to_json(const WeRunRecord& record) {
  ordered_json j;
  j["kind"] = "we_record";
  j["aborted"] = record.aborted;
  j["stop_reason"] = record.stop_reason;
  j["initial"] = detail::to_json(record.initial);
  ordered_json iterations = ordered_json::array();
  for (const IterationRecord& it : record.iterations)
    iterations.push_back(iteration_to_json(it));
  j["iterations"] = std::move(iterations);
  return j;
}

/// Inverse of run_record_to_json; `frames` may be empty when only the
/// tables are needed.
inline WeRunRecord run_record_from_json(const ordered_json& j,
                                        WeightedFrameSet frames = {}) {
  const std::string what = "we_record";
  if (detail::field(j, "kind", what).get<std::string>() != "we_record")
    throw IoError(what + ": wrong \"kind\"");
  WeRunRecord record;
  record.aborted = detail::field(j, "aborted", what).get<bool>();
  record.stop_reason =
      detail::field(j, "stop_reason", what).get<std::string>();
  record.initial =
      detail::walker_row_from_json(detail::field(j, "initial", what), what);
  for (const auto& ij : detail::field(j, "iterations", what))
    record.iterations.push_back(iteration_from_json(ij, what));
  record.frames = std::move(frames.frames);
  record.frame_weights = std::move(frames.weights);
  if (!record.frames.empty()) {
    record.frame_iteration.assign(record.frames.size(), 0);
    for (std::size_t i = 0; i < record.iterations.size(); ++i)
      for (const WalkerRow& row : record.iterations[i].walkers)
        for (int f = 0; f < row.frame_count; ++f) {
          const std::size_t at = static_cast<std::size_t>(row.frame_begin) + f;
          if (at >= record.frames.size())
            throw IoError(what + ": walker frame range exceeds frame count");
          record.frame_iteration[at] = static_cast<int>(i);
        }
  }
  return record;
}

// --- WE checkpoint -------------------------------------------------------

struct WeCheckpoint {
  std::string config_hash;
  int completed_iterations = 0;
  std::int64_t next_id = 1;
  std::int64_t frames_written = 0;
  bool finished = false;
  std::string stop_reason;
  bool aborted = false;
  std::vector<Walker> ensemble;
};

inline ordered_json to_json(const WeCheckpoint& ck) {
  ordered_json j;
  j["kind"] = "we_checkpoint";
  j["config_hash"] = ck.config_hash;
  j["completed_iterations"] = ck.completed_iterations;
  j["next_id"] = ck.next_id;
  j["frames_written"] = ck.frames_written;
  j["finished"] = ck.finished;
  j["stop_reason"] = ck.stop_reason;
  j["aborted"] = ck.aborted;
  ordered_json walkers = ordered_json::array();
  for (const Walker& w : ck.ensemble) {
    ordered_json wj;
    wj["id"] = w.id;
    wj["parent_id"] = w.parent_id;
    wj["weight"] = w.weight;
    wj["iteration"] = w.iteration;
    wj["pcoord"] = w.pcoord;
    wj["dims"] = w.state.dims;
    // float32 positions survive the double-valued JSON number round trip
    // bit-exactly, so a resumed run continues from identical coordinates.
    ordered_json pos = ordered_json::array();
    for (const float x : w.state.positions)
      pos.push_back(static_cast<double>(x));
    wj["positions"] = std::move(pos);
    walkers.push_back(std::move(wj));
  }
  j["ensemble"] = std::move(walkers);
  return j;
}

inline WeCheckpoint checkpoint_from_json(const ordered_json& j) {
  const std::string what = "we_checkpoint";
  if (detail::field(j, "kind", what).get<std::string>() != "we_checkpoint")
    throw IoError(what + ": wrong \"kind\"");
  WeCheckpoint ck;
  ck.config_hash = detail::field(j, "config_hash", what).get<std::string>();
  ck.completed_iterations =
      detail::field(j, "completed_iterations", what).get<int>();
  ck.next_id = detail::field(j, "next_id", what).get<std::int64_t>();
  ck.frames_written =
      detail::field(j, "frames_written", what).get<std::int64_t>();
  ck.finished = detail::field(j, "finished", what).get<bool>();
  ck.stop_reason = detail::field(j, "stop_reason", what).get<std::string>();
  ck.aborted = detail::field(j, "aborted", what).get<bool>();
  for (const auto& wj : detail::field(j, "ensemble", what)) {
    Walker w;
    w.id = detail::field(wj, "id", what).get<std::int64_t>();
    w.parent_id = detail::field(wj, "parent_id", what).get<std::int64_t>();
    w.weight = detail::field(wj, "weight", what).get<double>();
    w.iteration = detail::field(wj, "iteration", what).get<int>();
    w.pcoord = detail::field(wj, "pcoord", what).get<std::vector<double>>();
    w.state.dims = detail::field(wj, "dims", what).get<int>();
    for (const auto& x : detail::field(wj, "positions", what))
      w.state.positions.push_back(static_cast<float>(x.get<double>()));
    ck.ensemble.push_back(std::move(w));
  }
  return ck;
}

} // namespace wesbench

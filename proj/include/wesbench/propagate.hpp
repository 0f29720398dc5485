#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wesbench/common.hpp"
#include "wesbench/core.hpp"
#include "wesbench/potentials.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// Overdamped Langevin dynamics:
//   x <- x + (dt / gamma) F(x) + sqrt(2 kT dt / gamma) xi,   xi ~ N(0, I)
// Integration runs in double; saved frames are cast to float, and each new
// segment restarts from the float-cast state so a run replays bit-identically
// from its stored trajectory.
// ---------------------------------------------------------------------------

struct PropagatorConfig {
  PotentialSpec potential;
  int steps_per_segment = 1000;
  int save_interval = 100;
  double dt = 0.005;
  double friction = 1.0; // gamma, inverse time
  double kT = 1.0;       // thermal energy driving the noise
  std::uint64_t seed_base = 0;

  /// Saved frames per segment, counting the initial state.
  int saved_points() const { return steps_per_segment / save_interval + 1; }
};

inline void validate(const PropagatorConfig& cfg) {
  validate(cfg.potential);
  if (cfg.steps_per_segment <= 0)
    throw ConfigError("propagator: steps_per_segment must be > 0");
  if (cfg.save_interval <= 0 || cfg.steps_per_segment % cfg.save_interval != 0)
    throw ConfigError("propagator: save_interval must divide steps_per_segment");
  if (!(cfg.dt > 0.0))
    throw ConfigError("propagator: dt must be > 0");
  if (!(cfg.friction > 0.0))
    throw ConfigError("propagator: friction must be > 0");
  if (!(cfg.kT >= 0.0))
    throw ConfigError("propagator: kT must be >= 0");
}

struct SegmentResult {
  Trajectory trajectory;    // saved frames, [0] == input state
  Conformation final_state; // last finite saved frame
  bool broken = false;      // diverged (non-finite or snapped chain bond)
};

namespace detail {

/// A chain has "exploded" when any bond stretches past 100x its rest length;
/// past that point the quartic-free harmonic force grows without bound and
/// the trajectory is numerically meaningless.
inline bool chain_exploded(const PotentialSpec& spec,
                           const std::vector<double>& x) {
  if (spec.kind != PotentialKind::CG_CHAIN_3D)
    return false;
  const double limit = 100.0 * spec.chain.bond_r0;
  for (int i = 0; i + 1 < spec.chain.n_beads; ++i) {
    const Vec3 d = bead(x.data(), i + 1) - bead(x.data(), i);
    if (norm(d) > limit)
      return true;
  }
  return false;
}

inline Conformation to_frame(const std::vector<double>& x, int dims) {
  Conformation c;
  c.dims = dims;
  c.positions.reserve(x.size());
  for (double v : x)
    c.positions.push_back(static_cast<float>(v));
  return c;
}

} // namespace detail

/// Runs one segment. The noise stream is keyed by (seed_base, walker_id,
/// iteration) only, so results do not depend on scheduling or thread count.
inline SegmentResult propagate_segment(const PropagatorConfig& cfg,
                                       const Conformation& start,
                                       std::int64_t walker_id, int iteration) {
  check_shape(cfg.potential, start);
  const int dims = cfg.potential.dims();
  const std::uint64_t sequence =
      (static_cast<std::uint64_t>(walker_id) << 32) |
      static_cast<std::uint32_t>(iteration);
  Rng rng(cfg.seed_base, kStreamPropagate, sequence);

  SegmentResult out;
  out.trajectory.dt = cfg.dt;
  out.trajectory.save_stride = cfg.save_interval;
  out.trajectory.frames.push_back(start);

  std::vector<double> x(start.positions.begin(), start.positions.end());
  std::vector<double> f;
  const double mobility = cfg.dt / cfg.friction;
  const double sigma = std::sqrt(2.0 * cfg.kT * cfg.dt / cfg.friction);

  for (int step = 1; step <= cfg.steps_per_segment; ++step) {
    force_into(cfg.potential, x, f);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] += mobility * f[i] + sigma * rng.normal();
    if (step % cfg.save_interval != 0)
      continue;
    // Judge the frame as stored: a double state that overflows the float
    // cast is just as unusable downstream as an outright NaN.
    Conformation frame = detail::to_frame(x, dims);
    if (!frame.is_finite() || detail::chain_exploded(cfg.potential, x)) {
      out.broken = true;
      break; // keep only frames saved before the divergence
    }
    out.trajectory.frames.push_back(std::move(frame));
  }
  out.final_state = out.trajectory.frames.back();
  return out;
}

/// Plain (unresampled) reference dynamics: each start is extended by
/// `segments_each` consecutive segments into one long trajectory. Segment s
/// of start j uses walker_id = j and iteration = s, so any prefix of a longer
/// run replays exactly. Broken trajectories stop early at the last finite
/// saved frame.
inline std::vector<Trajectory> run_reference(const PropagatorConfig& cfg,
                                             const std::vector<Conformation>& starts,
                                             int segments_each, int threads = 1) {
  validate(cfg);
  if (starts.empty())
    throw Error("run_reference: no starting states");
  if (segments_each <= 0)
    throw Error("run_reference: segments_each must be > 0");

  std::vector<Trajectory> out(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t j) {
    Trajectory& traj = out[j];
    traj.dt = cfg.dt;
    traj.save_stride = cfg.save_interval;
    Conformation state = starts[j];
    for (int s = 0; s < segments_each; ++s) {
      SegmentResult seg =
          propagate_segment(cfg, state, static_cast<std::int64_t>(j), s);
      // A segment's first frame duplicates the previous segment's last.
      const std::size_t skip = (s == 0) ? 0 : 1;
      for (std::size_t k = skip; k < seg.trajectory.frames.size(); ++k)
        traj.frames.push_back(seg.trajectory.frames[k]);
      state = seg.final_state;
      if (seg.broken)
        break;
    }
  });
  return out;
}

} // namespace wesbench

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wesbench/common.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// Shared value types. All of these are plain immutable-by-convention structs;
// weights are double precision throughout (split products shrink geometrically
// over many iterations), coordinates single precision to match the trajectory
// file format.
// ---------------------------------------------------------------------------

/// One saved frame: flat particle coordinates, `dims` values per particle.
struct Conformation {
  std::vector<float> positions;
  int dims = 2;

  int n_particles() const {
    return dims > 0 ? static_cast<int>(positions.size()) / dims : 0;
  }

  float coord(int particle, int d) const {
    return positions[static_cast<std::size_t>(particle) * dims + d];
  }

  /// A non-finite coordinate marks the conformation broken.
  bool is_finite() const {
    for (const float v : positions)
      if (!std::isfinite(v))
        return false;
    return true;
  }
};

/// Ordered saved frames of one continuous run of dynamics.
struct Trajectory {
  std::vector<Conformation> frames;
  int save_stride = 1; // propagation steps between saved frames
  double dt = 0.0;     // time per propagation step
};

/// A trajectory segment head carrying statistical weight and lineage.
struct Walker {
  std::int64_t id = 0;
  Conformation state;
  double weight = 0.0;
  std::int64_t parent_id = -1; // -1: no parent (iteration 0)
  int iteration = 0;
  std::vector<double> pcoord;
  bool broken = false;
};

struct Ensemble {
  std::vector<Walker> walkers;
  int iteration = 0;
};

enum class WeightSource { WE_WEIGHTED, MSM_REWEIGHTED, RAW_UNWEIGHTED };

/// Frames paired with normalized probability masses, tagged by provenance.
struct WeightedFrameSet {
  std::vector<Conformation> frames;
  std::vector<double> weights;
  WeightSource source = WeightSource::RAW_UNWEIGHTED;
};

namespace detail {

// Minimal 3-vector used by the chain force field and the geometric metrics.
struct Vec3 {
  double x = 0, y = 0, z = 0;
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
};
inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 bead(const double* x, int i) {
  return {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
}
inline Vec3 bead(const Conformation& c, int i) {
  return {static_cast<double>(c.coord(i, 0)), static_cast<double>(c.coord(i, 1)),
          static_cast<double>(c.coord(i, 2))};
}

/// Divides by the current sum, then nudges the largest entry until the
/// recomputed sum is exactly 1.0. Caller guarantees sum > 0.
inline void exact_renormalize(std::vector<double>& weights) {
  double sum = 0.0;
  for (const double w : weights)
    sum += w;
  if (sum != 1.0)
    for (double& w : weights)
      w /= sum;
  std::size_t imax = 0;
  for (std::size_t i = 1; i < weights.size(); ++i)
    if (weights[i] > weights[imax])
      imax = i;
  for (int pass = 0; pass < 32; ++pass) {
    double s = 0.0;
    for (const double w : weights)
      s += w;
    const double residual = 1.0 - s;
    if (residual == 0.0)
      break;
    weights[imax] += residual;
  }
}

} // namespace detail

inline double total_weight(const Ensemble& ensemble) {
  if (ensemble.walkers.empty())
    throw EmptyEnsemble("total_weight: ensemble is empty");
  double sum = 0.0;
  for (const Walker& w : ensemble.walkers)
    sum += w.weight;
  return sum;
}

/// Scales weights so they sum to exactly 1.0; frame order is preserved.
/// Idempotent: an input that already sums to 1.0 is returned unchanged.
inline WeightedFrameSet normalize(WeightedFrameSet samples) {
  if (samples.frames.size() != samples.weights.size())
    throw Error("normalize: frames/weights length mismatch");
  double sum = 0.0;
  for (const double w : samples.weights) {
    if (!(w >= 0.0))
      throw Error("normalize: negative or non-finite weight");
    sum += w;
  }
  if (sum == 0.0)
    throw AllZeroWeights("normalize: all weights are zero");
  if (sum == 1.0)
    return samples;
  detail::exact_renormalize(samples.weights);
  return samples;
}

} // namespace wesbench

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "wesbench/core.hpp"

namespace wesbench {

// ---------------------------------------------------------------------------
// Analytic toy landscapes plus a coarse-grained bead chain. Each exposes
// energy and force (-grad E); forces are analytic and checked against finite
// differences in the tests. Evaluation runs in double precision on flat
// coordinate arrays; Conformation overloads upcast.
// ---------------------------------------------------------------------------

enum class PotentialKind { DOUBLE_WELL_2D, MUELLER_BROWN_2D, CG_CHAIN_3D };

struct DoubleWellParams {
  double a = 1.0; // E = a (x^2 - 1)^2 + b y^2
  double b = 2.0;
};

/// Harmonic bonds + harmonic angles + cosine dihedral + r^-12 repulsion.
/// Lengths in Angstrom, energies in units of the reference kT.
struct ChainParams {
  int n_beads = 10;
  double bond_k = 300.0;
  double bond_r0 = 3.8;
  double angle_k = 20.0;
  double angle_theta0 = 2.0 * 3.14159265358979323846 / 3.0; // 120 deg
  double dihedral_k = 1.0; // E = k (1 + cos phi), minimum at trans
  double excluded_epsilon = 1.0;
  double excluded_sigma = 3.2; // repulsion between beads |i-j| >= 3
};

struct PotentialSpec {
  PotentialKind kind = PotentialKind::DOUBLE_WELL_2D;
  double temperature = 1.0; // kT in reduced units
  DoubleWellParams double_well;
  ChainParams chain;

  int dims() const { return kind == PotentialKind::CG_CHAIN_3D ? 3 : 2; }
  int n_particles() const {
    return kind == PotentialKind::CG_CHAIN_3D ? chain.n_beads : 1;
  }
};

inline void validate(const PotentialSpec& spec) {
  if (!(spec.temperature >= 0.0))
    throw ConfigError("potential: temperature must be >= 0");
  if (spec.kind == PotentialKind::DOUBLE_WELL_2D) {
    if (spec.double_well.a <= 0.0 || spec.double_well.b <= 0.0)
      throw ConfigError("potential: double-well constants must be > 0");
  } else if (spec.kind == PotentialKind::CG_CHAIN_3D) {
    const ChainParams& c = spec.chain;
    if (c.n_beads < 2)
      throw ConfigError("potential: chain needs at least 2 beads");
    if (c.bond_k <= 0.0 || c.angle_k <= 0.0 || c.dihedral_k <= 0.0 ||
        c.excluded_epsilon <= 0.0 || c.excluded_sigma <= 0.0)
      throw ConfigError("potential: chain force constants must be > 0");
    if (!(c.bond_r0 > 3.5 && c.bond_r0 < 4.5))
      throw ConfigError("potential: bond_r0 must lie in (3.5, 4.5) Angstrom");
  }
}

namespace detail {

// Four-Gaussian Mueller-Brown surface, standard parameterization.
struct MuellerBrown {
  static constexpr std::array<double, 4> A{-200.0, -100.0, -170.0, 15.0};
  static constexpr std::array<double, 4> a{-1.0, -1.0, -6.5, 0.7};
  static constexpr std::array<double, 4> b{0.0, 0.0, 11.0, 0.6};
  static constexpr std::array<double, 4> c{-10.0, -10.0, -6.5, 0.7};
  static constexpr std::array<double, 4> x0{1.0, 0.0, -0.5, -1.0};
  static constexpr std::array<double, 4> y0{0.0, 0.5, 1.5, 1.0};
};

// Accumulates chain energy and, when g != nullptr, the gradient.
inline double chain_energy_gradient(const ChainParams& p, const double* x,
                                    double* g) {
  const int n = p.n_beads;
  double e = 0.0;
  auto add = [&](int i, const Vec3& v) {
    if (!g)
      return;
    g[3 * i + 0] += v.x;
    g[3 * i + 1] += v.y;
    g[3 * i + 2] += v.z;
  };

  for (int i = 0; i + 1 < n; ++i) {
    const Vec3 d = bead(x, i + 1) - bead(x, i);
    const double r = norm(d);
    const double dr = r - p.bond_r0;
    e += 0.5 * p.bond_k * dr * dr;
    if (r > 1e-12) {
      const Vec3 dEdr1 = d * (p.bond_k * dr / r);
      add(i + 1, dEdr1);
      add(i, -dEdr1);
    }
  }

  for (int i = 1; i + 1 < n; ++i) {
    const Vec3 u = bead(x, i - 1) - bead(x, i);
    const Vec3 v = bead(x, i + 1) - bead(x, i);
    const double nu = norm(u), nv = norm(v);
    if (nu < 1e-12 || nv < 1e-12)
      continue;
    double ct = dot(u, v) / (nu * nv);
    ct = std::max(-1.0, std::min(1.0, ct));
    const double theta = std::acos(ct);
    const double dtheta = theta - p.angle_theta0;
    e += 0.5 * p.angle_k * dtheta * dtheta;
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    if (st < 1e-8)
      continue; // angle force singular at 0/pi; harmonic well keeps us away
    const Vec3 uh = u * (1.0 / nu), vh = v * (1.0 / nv);
    const Vec3 dth_du = (vh - uh * ct) * (-1.0 / (nu * st));
    const Vec3 dth_dv = (uh - vh * ct) * (-1.0 / (nv * st));
    const double dE = p.angle_k * dtheta;
    add(i - 1, dth_du * dE);
    add(i + 1, dth_dv * dE);
    add(i, (dth_du + dth_dv) * (-dE));
  }

  for (int i = 0; i + 3 < n; ++i) {
    const Vec3 b1 = bead(x, i + 1) - bead(x, i);
    const Vec3 b2 = bead(x, i + 2) - bead(x, i + 1);
    const Vec3 b3 = bead(x, i + 3) - bead(x, i + 2);
    const Vec3 n1 = cross(b1, b2), n2 = cross(b2, b3);
    const double n1sq = dot(n1, n1), n2sq = dot(n2, n2);
    const double nb2 = norm(b2);
    if (n1sq < 1e-14 || n2sq < 1e-14 || nb2 < 1e-12)
      continue;
    const double phi =
        std::atan2(dot(cross(n1, n2), b2 * (1.0 / nb2)), dot(n1, n2));
    e += p.dihedral_k * (1.0 + std::cos(phi));
    const double dE = -p.dihedral_k * std::sin(phi); // dE/dphi
    const Vec3 dphi_d1 = n1 * (-nb2 / n1sq);
    const Vec3 dphi_d4 = n2 * (nb2 / n2sq);
    const double c12 = dot(b1, b2) / (nb2 * nb2);
    const double c32 = dot(b3, b2) / (nb2 * nb2);
    const Vec3 dphi_d2 = dphi_d1 * (-1.0 - c12) + dphi_d4 * c32;
    const Vec3 dphi_d3 = -(dphi_d1 + dphi_d2 + dphi_d4);
    add(i, dphi_d1 * dE);
    add(i + 1, dphi_d2 * dE);
    add(i + 2, dphi_d3 * dE);
    add(i + 3, dphi_d4 * dE);
  }

  const double sig = p.excluded_sigma;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 3; j < n; ++j) {
      const Vec3 d = bead(x, j) - bead(x, i);
      const double r2 = dot(d, d);
      if (r2 < 1e-24)
        continue;
      const double s2 = sig * sig / r2;
      const double s12 = s2 * s2 * s2 * s2 * s2 * s2;
      e += p.excluded_epsilon * s12;
      const double dEdr_over_r = -12.0 * p.excluded_epsilon * s12 / r2;
      const Vec3 dEdrj = d * dEdr_over_r;
      add(j, dEdrj);
      add(i, -dEdrj);
    }
  }
  return e;
}

} // namespace detail

inline void check_shape(const PotentialSpec& spec, const Conformation& x) {
  if (x.dims != spec.dims() || x.n_particles() != spec.n_particles())
    throw DimensionMismatch("conformation shape does not match potential");
}

inline void check_size(const PotentialSpec& spec, std::size_t flat_size) {
  if (flat_size != static_cast<std::size_t>(spec.dims()) * spec.n_particles())
    throw DimensionMismatch("coordinate count does not match potential");
}

inline double energy(const PotentialSpec& spec, const std::vector<double>& x) {
  check_size(spec, x.size());
  switch (spec.kind) {
  case PotentialKind::DOUBLE_WELL_2D: {
    const double q = x[0] * x[0] - 1.0;
    return spec.double_well.a * q * q + spec.double_well.b * x[1] * x[1];
  }
  case PotentialKind::MUELLER_BROWN_2D: {
    using MB = detail::MuellerBrown;
    double e = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double dx = x[0] - MB::x0[k], dy = x[1] - MB::y0[k];
      e += MB::A[k] *
           std::exp(MB::a[k] * dx * dx + MB::b[k] * dx * dy + MB::c[k] * dy * dy);
    }
    return e;
  }
  case PotentialKind::CG_CHAIN_3D:
    return detail::chain_energy_gradient(spec.chain, x.data(), nullptr);
  }
  throw Error("unreachable potential kind");
}

inline void force_into(const PotentialSpec& spec, const std::vector<double>& x,
                       std::vector<double>& f) {
  check_size(spec, x.size());
  f.assign(x.size(), 0.0);
  switch (spec.kind) {
  case PotentialKind::DOUBLE_WELL_2D:
    f[0] = -4.0 * spec.double_well.a * x[0] * (x[0] * x[0] - 1.0);
    f[1] = -2.0 * spec.double_well.b * x[1];
    return;
  case PotentialKind::MUELLER_BROWN_2D: {
    using MB = detail::MuellerBrown;
    for (int k = 0; k < 4; ++k) {
      const double dx = x[0] - MB::x0[k], dy = x[1] - MB::y0[k];
      const double g = MB::A[k] * std::exp(MB::a[k] * dx * dx +
                                           MB::b[k] * dx * dy +
                                           MB::c[k] * dy * dy);
      f[0] -= g * (2.0 * MB::a[k] * dx + MB::b[k] * dy);
      f[1] -= g * (MB::b[k] * dx + 2.0 * MB::c[k] * dy);
    }
    return;
  }
  case PotentialKind::CG_CHAIN_3D: {
    std::vector<double> grad(x.size(), 0.0);
    detail::chain_energy_gradient(spec.chain, x.data(), grad.data());
    for (std::size_t i = 0; i < grad.size(); ++i)
      f[i] = -grad[i];
    return;
  }
  }
  throw Error("unreachable potential kind");
}

inline double energy(const PotentialSpec& spec, const Conformation& x) {
  check_shape(spec, x);
  return energy(spec, std::vector<double>(x.positions.begin(), x.positions.end()));
}

inline std::vector<double> force(const PotentialSpec& spec, const Conformation& x) {
  check_shape(spec, x);
  std::vector<double> f;
  force_into(spec, std::vector<double>(x.positions.begin(), x.positions.end()), f);
  return f;
}

/// Canonical starting state: a potential minimum, or for the chain a planar
/// all-trans zigzag with ideal bonds and angles.
inline Conformation default_start(const PotentialSpec& spec) {
  Conformation c;
  c.dims = spec.dims();
  switch (spec.kind) {
  case PotentialKind::DOUBLE_WELL_2D:
    c.positions = {-1.0f, 0.0f};
    break;
  case PotentialKind::MUELLER_BROWN_2D:
    c.positions = {-0.5582f, 1.4417f};
    break;
  case PotentialKind::CG_CHAIN_3D: {
    const ChainParams& p = spec.chain;
    const double alpha = 0.5 * (3.14159265358979323846 - p.angle_theta0);
    double px = 0.0, py = 0.0;
    c.positions.reserve(3 * p.n_beads);
    for (int i = 0; i < p.n_beads; ++i) {
      c.positions.push_back(static_cast<float>(px));
      c.positions.push_back(static_cast<float>(py));
      c.positions.push_back(0.0f);
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      px += p.bond_r0 * std::cos(alpha);
      py += sign * p.bond_r0 * std::sin(alpha);
    }
    break;
  }
  }
  return c;
}

inline std::string to_string(PotentialKind k) {
  switch (k) {
  case PotentialKind::DOUBLE_WELL_2D:
    return "double_well_2d";
  case PotentialKind::MUELLER_BROWN_2D:
    return "mueller_brown_2d";
  case PotentialKind::CG_CHAIN_3D:
    return "cg_chain_3d";
  }
  return "?";
}

} // namespace wesbench

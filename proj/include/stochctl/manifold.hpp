// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "stochctl/error.hpp"
#include "stochctl/random.hpp"

namespace stochctl {

/// Largest ambient dimension supported. Vectors live on the stack.
inline constexpr int kMaxAmbient = 16;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

inline constexpr double kConstraintTol = 1e-9;
/// Any ambient coordinate beyond this magnitude aborts integration.
inline constexpr double kBlowupBound = 1e6;

enum class ManifoldKind { Torus2, Sphere, SpecialLinear2 };

/// Which manifold a point or field lives on.
///
/// Torus2 is the flat chart [0,1)^2 with wrap-around. Sphere(n) is the unit
/// sphere S^n in R^{n+1}. SpecialLinear2 is SL(2,R) flattened row-major into
/// R^4 as (a, b, c, d); it is non-compact and only used for bracket checks.
struct ManifoldId {
  ManifoldKind kind = ManifoldKind::Torus2;
  int n = 2;

  static ManifoldId torus2() { return {ManifoldKind::Torus2, 2}; }
  static ManifoldId sphere(int n) {
    if (n < 1 || n + 1 > kMaxAmbient) {
      throw Error(ErrorCode::BadParams,
                  "sphere dimension must be in [1, " + std::to_string(kMaxAmbient - 1) + "]");
    }
    return {ManifoldKind::Sphere, n};
  }
  static ManifoldId sl2() { return {ManifoldKind::SpecialLinear2, 3}; }

  int ambient_dim() const {
    switch (kind) {
      case ManifoldKind::Torus2: return 2;
      case ManifoldKind::Sphere: return n + 1;
      case ManifoldKind::SpecialLinear2: return 4;
    }
    return 0;
  }

  int dim() const {
    switch (kind) {
      case ManifoldKind::Torus2: return 2;
      case ManifoldKind::Sphere: return n;
      case ManifoldKind::SpecialLinear2: return 3;
    }
    return 0;
  }

  bool compact() const { return kind != ManifoldKind::SpecialLinear2; }

  std::string name() const {
    switch (kind) {
      case ManifoldKind::Torus2: return "torus2";
      case ManifoldKind::Sphere: return "sphere" + std::to_string(n);
      case ManifoldKind::SpecialLinear2: return "sl2";
    }
    return "unknown";
  }

  bool operator==(const ManifoldId&) const = default;
};

inline void require_compact(const ManifoldId& m, const char* what) {
  if (!m.compact()) {
    throw Error(ErrorCode::NonCompactManifold,
                std::string(what) + " is not available on non-compact " + m.name());
  }
}

inline bool all_finite(const Vec& x) { return x.allFinite(); }

inline double sl2_det(const Vec& g) { return g[0] * g[3] - g[1] * g[2]; }

/// Distance of ambient coordinates from the constraint set (0 when on M).
inline double constraint_residual(const ManifoldId& m, const Vec& x) {
  switch (m.kind) {
    case ManifoldKind::Torus2: {
      double r = 0.0;
      for (int i = 0; i < 2; ++i) {
        if (x[i] < 0.0) r = std::max(r, -x[i]);
        if (x[i] >= 1.0) r = std::max(r, x[i] - 1.0 + kConstraintTol * 2);
      }
      return r;
    }
    case ManifoldKind::Sphere: return std::abs(x.squaredNorm() - 1.0);
    case ManifoldKind::SpecialLinear2: return std::abs(sl2_det(x) - 1.0);
  }
  return 0.0;
}

/// A point of M in ambient (or chart) coordinates. Construction validates
/// the constraint residual against kConstraintTol.
class Point {
 public:
  Point(const ManifoldId& m, const Vec& coords) : manifold_(m), coords_(coords) {
    if (coords.size() != m.ambient_dim() || !all_finite(coords)) {
      throw Error(ErrorCode::DegenerateInput, "point has wrong size or non-finite entries");
    }
    if (constraint_residual(m, coords) > kConstraintTol) {
      throw Error(ErrorCode::DegenerateInput, "point is not on " + m.name());
    }
  }

  const ManifoldId& manifold() const { return manifold_; }
  const Vec& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

 private:
  ManifoldId manifold_;
  Vec coords_;
};

struct TangentVector {
  Point base;
  Vec coords;
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  // x slightly below an integer can round to exactly 1.
  return r >= 1.0 ? 0.0 : r;
}

/// Retraction on raw coordinates; the hot-path version of retract().
inline Vec retract_coords(const ManifoldId& m, const Vec& x) {
  if (x.size() != m.ambient_dim() || !all_finite(x)) {
    throw Error(ErrorCode::DegenerateInput, "retract: wrong size or non-finite input");
  }
  switch (m.kind) {
    case ManifoldKind::Torus2: return make_vec({wrap_unit(x[0]), wrap_unit(x[1])});
    case ManifoldKind::Sphere: {
      const double norm = x.norm();
      if (norm <= 1e-12) throw Error(ErrorCode::DegenerateInput, "retract: near-zero vector on sphere");
      return x / norm;
    }
    case ManifoldKind::SpecialLinear2: {
      const double det = sl2_det(x);
      if (!(det > 0.0)) throw Error(ErrorCode::DegenerateInput, "retract: det <= 0 on sl2");
      return x / std::sqrt(det);
    }
  }
  return x;
}

inline Point retract(const ManifoldId& m, const Vec& x) { return Point(m, retract_coords(m, x)); }

/// Outward normal used by the tangent projection. Off the manifold this is
/// a smooth extension (normalized radial direction, gradient of det).
inline Vec normal_direction(const ManifoldId& m, const Vec& x) {
  switch (m.kind) {
    case ManifoldKind::Torus2: return Vec::Zero(2);
    case ManifoldKind::Sphere: {
      const double norm = x.norm();
      return norm > 0.0 ? Vec(x / norm) : Vec(Vec::Zero(x.size()));
    }
    case ManifoldKind::SpecialLinear2: {
      Vec n = make_vec({x[3], -x[2], -x[1], x[0]});
      const double norm = n.norm();
      return norm > 0.0 ? Vec(n / norm) : n;
    }
  }
  return Vec::Zero(x.size());
}

/// Orthogonal projection of an ambient vector onto T_x M, extended smoothly
/// to points near M.
inline Vec tangent_project_coords(const ManifoldId& m, const Vec& x, const Vec& v) {
  if (m.kind == ManifoldKind::Torus2) return v;
  const Vec n = normal_direction(m, x);
  return v - n.dot(v) * n;
}

inline TangentVector tangent_project(const ManifoldId& m, const Point& p, const Vec& v) {
  if (!(p.manifold() == m)) throw Error(ErrorCode::DegenerateInput, "tangent_project: point on another manifold");
  if (v.size() != m.ambient_dim() || !all_finite(v)) {
    throw Error(ErrorCode::DegenerateInput, "tangent_project: wrong size or non-finite vector");
  }
  return {p, tangent_project_coords(m, p.coords(), v)};
}

/// Normal component |<n, v>| of v at p (zero on the torus chart). For sl2
/// this is the trace of adj(g) v, i.e. the first-order change of det.
inline double normal_residual(const Point& p, const Vec& v) {
  const auto& m = p.manifold();
  switch (m.kind) {
    case ManifoldKind::Torus2: return 0.0;
    case ManifoldKind::Sphere: return std::abs(p.coords().dot(v));
    case ManifoldKind::SpecialLinear2: {
      const Vec& g = p.coords();
      return std::abs(g[3] * v[0] - g[2] * v[1] - g[1] * v[2] + g[0] * v[3]);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Equal-measure cell grids.

struct CellId {
  std::size_t flat = 0;
  std::array<int, 2> axes{0, 0};
};

/// Torus: resolution (rx, ry), flat = iy * rx + ix (row-major with rows
/// along y). Sphere S^2: resolution (rz, rphi) with z = x3 binned uniformly
/// in [-1, 1] and phi = atan2(x2, x1) binned uniformly in [0, 2pi);
/// flat = iz * rphi + iphi. Every cell has the same area.
struct CellGrid {
  ManifoldId manifold;
  std::array<int, 2> resolution{1, 1};

  std::size_t cell_count() const {
    return static_cast<std::size_t>(resolution[0]) * static_cast<std::size_t>(resolution[1]);
  }

  bool operator==(const CellGrid&) const = default;
};

inline CellGrid make_grid(const ManifoldId& m, std::array<int, 2> resolution) {
  require_compact(m, "cell grid");
  if (m.kind == ManifoldKind::Sphere && m.n != 2) {
    throw Error(ErrorCode::BadParams, "cell grids are defined for torus2 and sphere2 only");
  }
  if (resolution[0] < 1 || resolution[1] < 1) {
    throw Error(ErrorCode::BadParams, "grid resolution must be positive");
  }
  return CellGrid{m, resolution};
}

inline int clamp_bin(double t, int res) {
  const int i = static_cast<int>(std::floor(t * res));
  return i < 0 ? 0 : (i >= res ? res - 1 : i);
}

inline double sphere_azimuth(const Vec& x) {
  double phi = std::atan2(x[1], x[0]);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  return phi;
}

inline CellId cell_index_coords(const CellGrid& grid, const Vec& x) {
  const auto [r0, r1] = grid.resolution;
  switch (grid.manifold.kind) {
    case ManifoldKind::Torus2: {
      const int ix = clamp_bin(wrap_unit(x[0]), r0);
      const int iy = clamp_bin(wrap_unit(x[1]), r1);
      return {static_cast<std::size_t>(iy) * r0 + ix, {ix, iy}};
    }
    case ManifoldKind::Sphere: {
      const double z = std::clamp(x[2], -1.0, 1.0);
      const int iz = clamp_bin((z + 1.0) / 2.0, r0);
      const int iphi = clamp_bin(sphere_azimuth(x) / (2.0 * std::numbers::pi), r1);
      return {static_cast<std::size_t>(iz) * r1 + iphi, {iz, iphi}};
    }
    case ManifoldKind::SpecialLinear2: break;
  }
  throw Error(ErrorCode::NonCompactManifold, "cell_index on non-compact manifold");
}

inline CellId cell_index(const CellGrid& grid, const Point& p) {
  require_compact(p.manifold(), "cell_index");
  if (!(p.manifold() == grid.manifold)) {
    throw Error(ErrorCode::DegenerateInput, "cell_index: point on another manifold");
  }
  return cell_index_coords(grid, p.coords());
}

/// Riemannian measure of one cell.
inline double cell_measure(const CellGrid& grid) {
  const double total = grid.manifold.kind == ManifoldKind::Torus2 ? 1.0 : 4.0 * std::numbers::pi;
  return total / static_cast<double>(grid.cell_count());
}

inline Point cell_center(const CellGrid& grid, std::size_t flat) {
  const auto [r0, r1] = grid.resolution;
  if (grid.manifold.kind == ManifoldKind::Torus2) {
    const int ix = static_cast<int>(flat % r0);
    const int iy = static_cast<int>(flat / r0);
    return Point(grid.manifold, make_vec({(ix + 0.5) / r0, (iy + 0.5) / r1}));
  }
  const int iz = static_cast<int>(flat / r1);
  const int iphi = static_cast<int>(flat % r1);
  const double z = -1.0 + 2.0 * (iz + 0.5) / r0;
  const double phi = 2.0 * std::numbers::pi * (iphi + 0.5) / r1;
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return retract(grid.manifold, make_vec({s * std::cos(phi), s * std::sin(phi), z}));
}

// ---------------------------------------------------------------------------
// Sampling.

/// Uniform point w.r.t. Riemannian volume: uniform chart on the torus,
/// normalized Gaussian vector on the sphere.
inline Point random_point(const ManifoldId& m, RandomStream& rng) {
  require_compact(m, "random_point");
  if (m.kind == ManifoldKind::Torus2) {
    const double x = rng.uniform();
    const double y = rng.uniform();
    return Point(m, make_vec({x, y}));
  }
  Vec g(m.ambient_dim());
  do {
    for (int i = 0; i < g.size(); ++i) g[i] = rng.normal();
  } while (g.norm() <= 1e-12);
  return retract(m, g);
}

/// Group element with all entries in [-bound, bound] and det = 1: draws
/// a, b, c uniformly, sets d = (1 + bc) / a, and rejects until |d| <= bound.
inline Point random_group_point(RandomStream& rng, double bound = 2.0) {
  const ManifoldId m = ManifoldId::sl2();
  for (;;) {
    const double a = rng.uniform(-bound, bound);
    const double b = rng.uniform(-bound, bound);
    const double c = rng.uniform(-bound, bound);
    if (std::abs(a) < 1e-3) continue;
    const double d = (1.0 + b * c) / a;
    if (std::abs(d) > bound) continue;
    return Point(m, make_vec({a, b, c, d}));
  }
}

}  // namespace stochctl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stochctl/histogram.hpp"
#include "stochctl/lie.hpp"
#include "stochctl/manifold.hpp"
#include "stochctl/parallel.hpp"
#include "stochctl/random.hpp"
#include "stochctl/scalar_field.hpp"
#include "stochctl/vector_field.hpp"

namespace stochctl {

using ControlBox = std::vector<std::pair<double, double>>;

/// p' = X0(p) + sum_i u_i(t) X_i(p) with u_i(t) in [lo_i, hi_i].
struct ControlSystem {
  FieldFamily family;
  ControlBox box;

  ControlSystem(FieldFamily f, ControlBox b) : family(std::move(f)), box(std::move(b)) {
    if (family.fields.empty()) throw Error(ErrorCode::BadParams, "control system needs at least one control field");
    if (box.size() != family.fields.size()) throw Error(ErrorCode::BadParams, "control box size must match fields");
    for (const auto& [lo, hi] : box) {
      if (!(lo <= hi)) throw Error(ErrorCode::BadParams, "control box needs lo <= hi");
    }
  }
};

struct ControlSegment {
  double duration = 0.0;
  std::vector<double> values;
};

/// Piecewise-constant control.
struct ControlSignal {
  std::vector<ControlSegment> segments;

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }
};

/// dp = X0(p) dt + sum_i X_i(p) o dB^i (Stratonovich). When `frame` is set
/// the noise fields are the columns of its projector, evaluated together.
struct SDESystem {
  FieldFamily family;
  std::shared_ptr<const FoliatedFrame> frame;

  explicit SDESystem(FieldFamily f, std::shared_ptr<const FoliatedFrame> fr = nullptr)
      : family(std::move(f)), frame(std::move(fr)) {
    if (family.fields.empty()) throw Error(ErrorCode::BadParams, "SDE needs at least one noise field");
  }

  std::size_t noise_count() const { return family.fields.size(); }
  const ManifoldId& manifold() const { return family.manifold; }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> points;
  int record_stride = 1;
};

namespace detail {

inline void guard_blowup(const Vec& x) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowupBound) {
    throw Error(ErrorCode::NumericalBlowup, "integration left the bounded region (|coord| > 1e6 or non-finite)");
  }
}

inline std::size_t step_count(double T, double dt) {
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

/// Drift at x (zero when absent).
inline Vec drift_at(const SDESystem& sys, const Vec& x) {
  if (sys.family.drift) return sys.family.drift->eval_ambient(x);
  return Vec::Zero(x.size());
}

/// sum_i X_i(x) dW_i; reports the frame rank through `rank` when framed.
inline Vec noise_increment(const SDESystem& sys, const Vec& x, std::span<const double> dw, int* rank) {
  if (sys.frame) {
    const FrameEvaluation fe = sys.frame->evaluate(x);
    if (rank) *rank = fe.rank;
    Vec w(x.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = dw[static_cast<std::size_t>(i)];
    return fe.projector * w;
  }
  Vec out = Vec::Zero(x.size());
  for (std::size_t i = 0; i < sys.family.fields.size(); ++i) {
    if (dw[i] != 0.0) out += sys.family.fields[i].eval_ambient(x) * dw[i];
  }
  return out;
}

/// One Stratonovich Heun step on raw coordinates.
inline Vec heun_step(const SDESystem& sys, const Vec& x, double dt, std::span<const double> dw) {
  const ManifoldId& m = sys.manifold();
  int rank_p = -1;
  int rank_q = -1;
  const Vec a_p = drift_at(sys, x);
  const Vec b_p = noise_increment(sys, x, dw, &rank_p);
  const Vec inc_p = a_p * dt + b_p;
  // Zero increment: predictor and corrector both sit at p.
  if ((inc_p.array() == 0.0).all()) return x;
  const Vec q = retract_coords(m, x + inc_p);
  guard_blowup(q);
  const Vec a_q = drift_at(sys, q);
  const Vec b_q = noise_increment(sys, q, dw, &rank_q);
  if (sys.frame && rank_p != rank_q) {
    throw Error(ErrorCode::RankCollapse, "distribution rank changed within one step (" + std::to_string(rank_p) +
                                             " -> " + std::to_string(rank_q) + ")");
  }
  const Vec next = retract_coords(m, x + 0.5 * (a_p + a_q) * dt + 0.5 * (b_p + b_q));
  guard_blowup(next);
  return next;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Control paths.

/// Classical RK4 on the frozen field X0 + sum u_i X_i inside each segment,
/// retracting after every stage and step. Each segment is split into
/// ceil(duration / dt) equal steps. The visitor sees (t, x) for the initial
/// point and after every step.
template <class Visitor>
void integrate_control_visit(const ControlSystem& sys, const Vec& x0, const ControlSignal& u, double dt,
                             Visitor&& visit) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadParams, "dt must be positive");
  const ManifoldId& m = sys.family.manifold;
  const std::size_t k = sys.family.fields.size();
  Vec x = x0;
  double t = 0.0;
  visit(t, x);
  for (const auto& seg : u.segments) {
    if (seg.values.size() != k) throw Error(ErrorCode::BadParams, "control values do not match channel count");
    if (!(seg.duration > 0.0)) throw Error(ErrorCode::BadParams, "segment durations must be positive");
    const auto field = [&](const Vec& y) {
      Vec v = sys.family.drift ? sys.family.drift->eval_ambient(y) : Vec(Vec::Zero(y.size()));
      for (std::size_t i = 0; i < k; ++i) {
        if (seg.values[i] != 0.0) v += seg.values[i] * sys.family.fields[i].eval_ambient(y);
      }
      return v;
    };
    const std::size_t steps = std::max<std::size_t>(1, detail::step_count(seg.duration, dt));
    const double h = seg.duration / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const Vec k1 = field(x);
      const Vec k2 = field(retract_coords(m, x + 0.5 * h * k1));
      const Vec k3 = field(retract_coords(m, x + 0.5 * h * k2));
      const Vec k4 = field(retract_coords(m, x + h * k3));
      const Vec inc = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!(inc.array() == 0.0).all()) x = retract_coords(m, x + inc);
      detail::guard_blowup(x);
      t += h;
      visit(t, x);
    }
  }
}

inline Trajectory integrate_control(const ControlSystem& sys, const Point& p0, const ControlSignal& u, double dt,
                                    int record_stride = 1) {
  if (record_stride < 1) throw Error(ErrorCode::BadParams, "record_stride must be >= 1");
  Trajectory traj;
  traj.record_stride = record_stride;
  std::size_t step = 0;
  integrate_control_visit(sys, p0.coords(), u, dt, [&](double t, const Vec& x) {
    if (step++ % static_cast<std::size_t>(record_stride) == 0) {
      traj.times.push_back(t);
      traj.points.emplace_back(sys.family.manifold, x);
    }
  });
  return traj;
}

/// n_segments segments of equal duration with values i.i.d. uniform in the box.
inline ControlSignal random_signal(std::size_t k, const ControlBox& box, int n_segments, double seg_duration,
                                   RandomStream& rng) {
  if (n_segments < 1) throw Error(ErrorCode::BadParams, "n_segments must be >= 1");
  if (!(seg_duration > 0.0)) throw Error(ErrorCode::BadParams, "seg_duration must be positive");
  if (box.size() != k) throw Error(ErrorCode::BadParams, "box size must equal k");
  ControlSignal u;
  u.segments.reserve(static_cast<std::size_t>(n_segments));
  for (int s = 0; s < n_segments; ++s) {
    ControlSegment seg{seg_duration, std::vector<double>(k)};
    for (std::size_t i = 0; i < k; ++i) {
      const auto [lo, hi] = box[i];
      seg.values[i] = lo == hi ? lo : rng.uniform(lo, hi);
    }
    u.segments.push_back(std::move(seg));
  }
  return u;
}

struct ReachOptions {
  double seg_duration = 1.0;
  Exec exec{};
};

/// Cells visited by n_paths random-signal control paths of length `horizon`.
/// Path j draws its signal from rng.child(j); every integration step is binned.
inline OccupationHistogram reach_sample(const ControlSystem& sys, const Point& p0, int n_paths, double horizon,
                                        double dt, const CellGrid& grid, const RandomStream& rng,
                                        ReachOptions opts = {}) {
  require_compact(sys.family.manifold, "reach_sample");
  if (n_paths < 1) throw Error(ErrorCode::BadParams, "n_paths must be >= 1");
  if (!(horizon > 0.0)) throw Error(ErrorCode::BadParams, "horizon must be positive");
  const int n_segments = std::max(1, static_cast<int>(std::ceil(horizon / opts.seg_duration - 1e-9)));
  std::vector<OccupationHistogram> per_path(static_cast<std::size_t>(n_paths), OccupationHistogram(grid));
  parallel_for(static_cast<std::size_t>(n_paths), opts.exec, [&](std::size_t j) {
    RandomStream path_rng = rng.child(j);
    const ControlSignal u =
        random_signal(sys.family.fields.size(), sys.box, n_segments, opts.seg_duration, path_rng);
    auto& hist = per_path[j];
    integrate_control_visit(sys, p0.coords(), u, dt, [&](double, const Vec& x) { hist.add_coords(x); });
  });
  OccupationHistogram out(grid);
  for (const auto& h : per_path) out.merge(h);
  return out;
}

// ---------------------------------------------------------------------------
// Stratonovich SDE paths.

/// Heun predictor-corrector:
///   q    = R(p + X0(p) dt + sum X_i(p) dW_i)
///   next = R(p + (X0(p) + X0(q)) dt / 2 + sum (X_i(p) + X_i(q)) dW_i / 2)
/// with R the retraction. For framed systems a rank change between p and q
/// raises RankCollapse.
inline Point sde_step_heun(const SDESystem& sys, const Point& p, double dt, std::span<const double> dw) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadParams, "dt must be positive");
  const std::size_t k = sys.frame ? static_cast<std::size_t>(sys.manifold().ambient_dim()) : sys.noise_count();
  if (dw.size() != k) throw Error(ErrorCode::BadParams, "dW size must equal the noise channel count");
  return Point(sys.manifold(), detail::heun_step(sys, p.coords(), dt, dw));
}

/// ceil(T / dt) Heun steps with dW_i ~ Normal(0, dt). The visitor sees
/// (step_index, x) for step 0 (the start) through the final step.
template <class Visitor>
void simulate_sde_visit(const SDESystem& sys, const Vec& x0, double T, double dt, RandomStream& rng,
                        Visitor&& visit) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadParams, "dt must be positive");
  if (T < dt) throw Error(ErrorCode::BadParams, "T must be >= dt");
  const std::size_t steps = detail::step_count(T, dt);
  const std::size_t k = sys.noise_count();
  const double sq = std::sqrt(dt);
  std::vector<double> dw(k);
  Vec x = x0;
  visit(std::size_t{0}, x);
  for (std::size_t s = 1; s <= steps; ++s) {
    for (auto& w : dw) w = sq * rng.normal();
    x = detail::heun_step(sys, x, dt, dw);
    visit(s, x);
  }
}

inline Trajectory simulate_sde(const SDESystem& sys, const Point& p0, double T, double dt, RandomStream& rng,
                               int record_stride = 1) {
  if (record_stride < 1) throw Error(ErrorCode::BadParams, "record_stride must be >= 1");
  if (!(p0.manifold() == sys.manifold())) throw Error(ErrorCode::BadParams, "start point on another manifold");
  Trajectory traj;
  traj.record_stride = record_stride;
  simulate_sde_visit(sys, p0.coords(), T, dt, rng, [&](std::size_t s, const Vec& x) {
    if (s % static_cast<std::size_t>(record_stride) == 0) {
      traj.times.push_back(static_cast<double>(s) * dt);
      traj.points.emplace_back(sys.manifold(), x);
    }
  });
  return traj;
}

// ---------------------------------------------------------------------------
// Generator.

namespace detail {

inline double derivative_along(const ManifoldId& m, const VectorField& field, const ScalarField& f, const Vec& x,
                               double h) {
  const Vec v = field.eval_ambient(x);
  const double fp = f.value(retract_coords(m, x + h * v));
  const double fm = f.value(retract_coords(m, x - h * v));
  return (fp - fm) / (2.0 * h);
}

inline double second_derivative_along(const ManifoldId& m, const VectorField& field, const ScalarField& f,
                                      const Vec& x, double h) {
  const Vec v = field.eval_ambient(x);
  const Vec xp = retract_coords(m, x + h * v);
  const Vec xm = retract_coords(m, x - h * v);
  return (derivative_along(m, field, f, xp, h) - derivative_along(m, field, f, xm, h)) / (2.0 * h);
}

}  // namespace detail

/// (L f)(p) = (X0 f)(p) + 1/2 sum_i (X_i^2 f)(p) by nested central
/// differences along retracted field lines.
inline double generator_apply(const SDESystem& sys, const ScalarField& f, const Point& p, double h = kDefaultFdStep) {
  check_fd_step(h);
  const ManifoldId& m = sys.manifold();
  if (!(p.manifold() == m)) throw Error(ErrorCode::BadParams, "point on another manifold");
  const Vec& x = p.coords();
  double out = 0.0;
  if (sys.family.drift) out += detail::derivative_along(m, *sys.family.drift, f, x, h);
  double second = 0.0;
  for (const auto& field : sys.family.fields) second += detail::second_derivative_along(m, field, f, x, h);
  return out + 0.5 * second;
}

// ---------------------------------------------------------------------------
// Canonical diffusions.

/// Brownian motion with generator 1/2 Laplacian: coordinate projections
/// e_i - x_i x on the sphere, dx and dy on the torus; zero drift.
inline SDESystem brownian_motion(const ManifoldId& m) {
  require_compact(m, "brownian_motion");
  std::vector<VectorField> fields;
  if (m.kind == ManifoldKind::Torus2) {
    fields.push_back(VectorField::torus("1*dx"));
    fields.push_back(VectorField::torus("1*dy"));
  } else {
    for (int i = 0; i <= m.n; ++i) fields.push_back(VectorField::sphere_coord_projection(m.n, i));
  }
  return SDESystem(FieldFamily(m, std::nullopt, std::move(fields)));
}

/// Leafwise Brownian motion dx = sum_i X_i(x) o dB^i driven by the foliated
/// frame of F.
inline SDESystem foliated_bm(const FieldFamily& family, int depth = kDefaultBracketDepth) {
  require_compact(family.manifold, "foliated_bm");
  auto frame = make_foliated_frame(family, depth);
  return SDESystem(foliated_frame(frame), frame);
}

}  // namespace stochctl

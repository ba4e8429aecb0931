// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "stochctl/dynamics.hpp"
#include "stochctl/histogram.hpp"
#include "stochctl/manifold.hpp"
#include "stochctl/parallel.hpp"
#include "stochctl/scalar_field.hpp"

namespace stochctl {

inline double default_burn_in(double T) { return 0.1 * T; }

// ---------------------------------------------------------------------------
// Occupation measures and supports.

/// Cesaro-in-time estimate of mu_p: one path, every step binned once the
/// time reaches burn_in.
inline OccupationHistogram occupation_measure(const SDESystem& sys, const Point& p0, double T, double dt,
                                              double burn_in, const CellGrid& grid, RandomStream& rng) {
  require_compact(sys.manifold(), "occupation_measure");
  if (!(burn_in >= 0.0 && burn_in < T)) throw Error(ErrorCode::BadParams, "burn_in must lie in [0, T)");
  OccupationHistogram hist(grid);
  simulate_sde_visit(sys, p0.coords(), T, dt, rng, [&](std::size_t s, const Vec& x) {
    if (static_cast<double>(s) * dt < burn_in) {
      ++hist.burn_in_discarded;
      return;
    }
    hist.add_coords(x);
  });
  return hist;
}

/// Fraction of post-burn-in samples of one path satisfying `inside`.
inline double occupation_fraction(const SDESystem& sys, const Point& p0, double T, double dt, double burn_in,
                                  const std::function<bool(const Vec&)>& inside, RandomStream& rng) {
  if (!(burn_in >= 0.0 && burn_in < T)) throw Error(ErrorCode::BadParams, "burn_in must lie in [0, T)");
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  simulate_sde_visit(sys, p0.coords(), T, dt, rng, [&](std::size_t s, const Vec& x) {
    if (static_cast<double>(s) * dt < burn_in) return;
    ++total;
    if (inside(x)) ++hits;
  });
  return static_cast<double>(hits) / static_cast<double>(total);
}

struct SupportEstimate {
  std::vector<std::size_t> occupied_cells;  // ascending
  double coverage_fraction = 0.0;
  std::uint64_t min_count = 1;
};

inline SupportEstimate support_estimate(const OccupationHistogram& hist, std::uint64_t min_count = 1) {
  if (min_count < 1) throw Error(ErrorCode::BadParams, "min_count must be >= 1");
  SupportEstimate out;
  out.min_count = min_count;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    if (hist.counts[i] >= min_count) out.occupied_cells.push_back(i);
  }
  out.coverage_fraction =
      static_cast<double>(out.occupied_cells.size()) / static_cast<double>(hist.grid.cell_count());
  return out;
}

/// Threshold of the robust support variant: 0.1 x the uniform expectation.
inline std::uint64_t robust_min_count(const OccupationHistogram& hist) {
  const double expectation = static_cast<double>(hist.total_samples) / static_cast<double>(hist.grid.cell_count());
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(0.1 * expectation)));
}

inline double jaccard(const SupportEstimate& a, const SupportEstimate& b) {
  std::vector<std::size_t> inter;
  std::vector<std::size_t> uni;
  std::set_intersection(a.occupied_cells.begin(), a.occupied_cells.end(), b.occupied_cells.begin(),
                        b.occupied_cells.end(), std::back_inserter(inter));
  std::set_union(a.occupied_cells.begin(), a.occupied_cells.end(), b.occupied_cells.begin(),
                 b.occupied_cells.end(), std::back_inserter(uni));
  return uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

// ---------------------------------------------------------------------------
// Invariance by quadrature.

/// Values of a function at the cell centers of a grid.
struct GridFunction {
  CellGrid grid;
  std::vector<double> values;
};

inline GridFunction sample_on_grid(const ScalarField& f, const CellGrid& grid) {
  GridFunction g{grid, std::vector<double>(grid.cell_count())};
  for (std::size_t c = 0; c < grid.cell_count(); ++c) g.values[c] = f.value(cell_center(grid, c).coords());
  return g;
}

inline GridFunction uniform_density(const CellGrid& grid) { return {grid, std::vector<double>(grid.cell_count(), 1.0)}; }

struct InvarianceReport {
  std::vector<std::string> functions;
  std::vector<double> residuals;
  double max_abs_residual = 0.0;
};

/// r_f = sum_cells (L f)(center) * rho(cell) * |cell| with rho normalized to
/// unit mass. On the torus the cell-center rule is the periodic trapezoid
/// rule, exact for trigonometric polynomials below the grid frequency.
inline InvarianceReport check_invariance(const GridFunction& density, const SDESystem& sys,
                                         const std::vector<ScalarField>& fns, double h = kDefaultFdStep) {
  const CellGrid& grid = density.grid;
  if (!(grid.manifold == sys.manifold())) throw Error(ErrorCode::BadParams, "density grid on another manifold");
  if (density.values.size() != grid.cell_count()) throw Error(ErrorCode::BadParams, "density size mismatch");
  const double measure = cell_measure(grid);
  double mass = 0.0;
  for (double v : density.values) {
    if (!(v >= 0.0)) throw Error(ErrorCode::BadParams, "density must be nonnegative");
    mass += v * measure;
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::BadParams, "density has zero mass");

  InvarianceReport report;
  report.residuals.assign(fns.size(), 0.0);
  for (const auto& f : fns) report.functions.push_back(f.describe());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const double w = density.values[c] / mass * measure;
    if (w == 0.0) continue;
    const Point center = cell_center(grid, c);
    for (std::size_t i = 0; i < fns.size(); ++i) report.residuals[i] += generator_apply(sys, fns[i], center, h) * w;
  }
  for (double r : report.residuals) report.max_abs_residual = std::max(report.max_abs_residual, std::abs(r));
  return report;
}

// ---------------------------------------------------------------------------
// Ergodic averages.

/// Time averages of every f along one path, over recorded samples
/// (every `stride`-th step) whose time is >= burn_in. Running means are
/// updated incrementally so a constant function averages to itself exactly.
inline std::vector<double> ergodic_time_averages(const SDESystem& sys, const std::vector<ScalarField>& fns,
                                                 const Point& p0, double T, double dt, double burn_in,
                                                 RandomStream& rng, int stride = 1) {
  require_compact(sys.manifold(), "ergodic averages");
  if (!(burn_in >= 0.0 && burn_in < T)) throw Error(ErrorCode::BadParams, "burn_in must lie in [0, T)");
  if (stride < 1) throw Error(ErrorCode::BadParams, "stride must be >= 1");
  std::vector<double> means(fns.size(), 0.0);
  std::uint64_t n = 0;
  simulate_sde_visit(sys, p0.coords(), T, dt, rng, [&](std::size_t s, const Vec& x) {
    if (s % static_cast<std::size_t>(stride) != 0 || static_cast<double>(s) * dt < burn_in) return;
    ++n;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < fns.size(); ++i) means[i] += (fns[i].value(x) - means[i]) * inv;
  });
  return means;
}

inline double ergodic_average(const SDESystem& sys, const ScalarField& f, const Point& p0, double T, double dt,
                              double burn_in, RandomStream& rng, int stride = 1) {
  return ergodic_time_averages(sys, {f}, p0, T, dt, burn_in, rng, stride).front();
}

inline constexpr double kNotDenseFactor = 5.0;
inline constexpr double kDenseFactor = 2.0;
/// Lower bound on the standard error used by the verdict, so that
/// roundoff-level scatter does not count as a gap.
inline constexpr double kStandardErrorFloor = 1e-9;

struct ErgodicOptions {
  double T = 1e4;
  double dt = 1e-2;
  double burn_in = -1.0;  // negative: 10% of T
  int replicas = 16;
  int stride = 1;
  Exec exec{};
};

/// Start dependence of time averages.
///
/// For each function, pooled_se is the pooled within-start standard
/// deviation of the replica time averages, i.e. the Monte-Carlo error of a
/// single time average. gap is the largest difference between two per-start
/// means. Verdict: NotDense if some gap > 5 se, Dense if every gap < 2 se,
/// Inconclusive otherwise (se floored at kStandardErrorFloor).
struct ErgodicReport {
  std::vector<Point> starts;
  std::vector<std::string> functions;
  int replicas = 0;
  std::vector<std::vector<std::vector<double>>> averages;  // [start][function][replica]
  std::vector<std::vector<double>> start_means;            // [start][function]
  std::vector<double> pooled_se;                           // [function]
  std::vector<double> max_gap;                             // [function]
  double max_gap_ratio = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

inline Verdict gap_verdict(const std::vector<double>& gaps, const std::vector<double>& ses, double* max_ratio) {
  bool any_large = false;
  bool all_small = true;
  double ratio = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double se = std::max(ses[i], kStandardErrorFloor);
    ratio = std::max(ratio, gaps[i] / se);
    if (gaps[i] > kNotDenseFactor * se) any_large = true;
    if (!(gaps[i] < kDenseFactor * se)) all_small = false;
  }
  if (max_ratio) *max_ratio = ratio;
  if (any_large) return Verdict::NotDense;
  if (all_small) return Verdict::Dense;
  return Verdict::Inconclusive;
}

/// Path (start s, replica r) draws from rng.child(s * replicas + r).
inline ErgodicReport ergodic_constancy_test(const SDESystem& sys, const std::vector<ScalarField>& fns,
                                            const std::vector<Point>& starts, const ErgodicOptions& opts,
                                            const RandomStream& rng) {
  if (starts.size() < 2) throw Error(ErrorCode::BadParams, "ergodic_constancy_test needs >= 2 starts");
  if (opts.replicas < 2) throw Error(ErrorCode::BadParams, "ergodic_constancy_test needs >= 2 replicas");
  if (fns.empty()) throw Error(ErrorCode::BadParams, "ergodic_constancy_test needs test functions");
  const std::size_t S = starts.size();
  const std::size_t R = static_cast<std::size_t>(opts.replicas);
  const std::size_t F = fns.size();
  const double burn_in = opts.burn_in < 0.0 ? default_burn_in(opts.T) : opts.burn_in;

  std::vector<std::vector<double>> flat(S * R);
  parallel_for(S * R, opts.exec, [&](std::size_t idx) {
    RandomStream path_rng = rng.child(idx);
    flat[idx] = ergodic_time_averages(sys, fns, starts[idx / R], opts.T, opts.dt, burn_in, path_rng, opts.stride);
  });

  ErgodicReport rep;
  rep.starts = starts;
  rep.replicas = opts.replicas;
  for (const auto& f : fns) rep.functions.push_back(f.describe());
  rep.averages.assign(S, std::vector<std::vector<double>>(F, std::vector<double>(R)));
  rep.start_means.assign(S, std::vector<double>(F, 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t f = 0; f < F; ++f) rep.averages[s][f][r] = flat[s * R + r][f];
    }
    for (std::size_t f = 0; f < F; ++f) {
      double m = 0.0;
      for (std::size_t r = 0; r < R; ++r) m += rep.averages[s][f][r];
      rep.start_means[s][f] = m / static_cast<double>(R);
    }
  }
  rep.pooled_se.assign(F, 0.0);
  rep.max_gap.assign(F, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    double ss = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t r = 0; r < R; ++r) {
        const double d = rep.averages[s][f][r] - rep.start_means[s][f];
        ss += d * d;
      }
    }
    rep.pooled_se[f] = std::sqrt(ss / static_cast<double>(S * (R - 1)));
    for (std::size_t a = 0; a < S; ++a) {
      for (std::size_t b = a + 1; b < S; ++b) {
        rep.max_gap[f] = std::max(rep.max_gap[f], std::abs(rep.start_means[a][f] - rep.start_means[b][f]));
      }
    }
  }
  rep.verdict = gap_verdict(rep.max_gap, rep.pooled_se, &rep.max_gap_ratio);
  return rep;
}

// ---------------------------------------------------------------------------
// Reach / occupation agreement.

struct ConsistencyBudgets {
  int n_paths = 200;
  double horizon = 100.0;
  double seg_duration = 1.0;
  double control_dt = 1e-2;
  double T = 2e4;
  double dt = 1e-2;
  double burn_in = 0.0;
  Exec exec{};
};

struct ConsistencyReport {
  double jaccard = 0.0;
  double reach_coverage = 0.0;
  double occupation_coverage = 0.0;
};

/// Jaccard index between cells reached by random controls (rng.child(0))
/// and cells occupied by the diffusion (rng.child(1)) started at p0.
inline ConsistencyReport support_consistency_test(const ControlSystem& csys, const SDESystem& dsys, const Point& p0,
                                                  const CellGrid& grid, const ConsistencyBudgets& b,
                                                  const RandomStream& rng) {
  if (!(csys.family.manifold == dsys.manifold())) {
    throw Error(ErrorCode::BadParams, "control and diffusion systems live on different manifolds");
  }
  const auto reach = reach_sample(csys, p0, b.n_paths, b.horizon, b.control_dt, grid, rng.child(0),
                                  ReachOptions{b.seg_duration, b.exec});
  RandomStream occ_rng = rng.child(1);
  const auto occ = occupation_measure(dsys, p0, b.T, b.dt, b.burn_in, grid, occ_rng);
  const auto rs = support_estimate(reach);
  const auto os = support_estimate(occ);
  return {jaccard(rs, os), rs.coverage_fraction, os.coverage_fraction};
}

/// Coverage thresholds used by the reach and support verdicts.
inline constexpr double kDenseCoverage = 0.9;
inline constexpr double kSparseCoverage = 0.5;

inline Verdict coverage_verdict(double coverage) {
  if (coverage >= kDenseCoverage) return Verdict::Dense;
  if (coverage <= kSparseCoverage) return Verdict::NotDense;
  return Verdict::Inconclusive;
}

}  // namespace stochctl

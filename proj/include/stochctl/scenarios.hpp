// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stochctl/dynamics.hpp"
#include "stochctl/histogram.hpp"
#include "stochctl/lie.hpp"
#include "stochctl/manifold.hpp"
#include "stochctl/scalar_field.hpp"
#include "stochctl/vector_field.hpp"

namespace stochctl {

/// Recommended run sizes for one scenario.
struct Budgets {
  // occupation / support
  double T = 5e4;
  double dt = 1e-2;
  double burn_in = 5e3;
  std::array<int, 2> grid{32, 32};
  // reachability
  int n_paths = 200;
  double horizon = 100.0;
  double seg_duration = 1.0;
  double control_dt = 1e-2;
  // brackets
  int depth = 2;
  int rank_samples = 1000;
  // ergodic constancy
  int replicas = 16;
  double ergodic_T = 4e3;
  double ergodic_dt = 1e-2;
  int ergodic_stride = 10;

  bool operator==(const Budgets&) const = default;
};

struct ExpectedVerdicts {
  std::optional<Verdict> reach;
  std::optional<Verdict> support;
  std::optional<Verdict> constancy;
};

struct ScenarioParams {
  std::optional<double> a;       // torus_line slope
  std::optional<int> m;          // torus_line numerator
  std::optional<int> n;          // torus_line denominator, or sphere dimension
  std::optional<bool> rational;  // torus_line consistency flag

  bool operator==(const ScenarioParams&) const = default;
};

/// A ready-to-run configuration of one of the worked examples.
struct Scenario {
  std::string name;
  std::string description;
  ManifoldId manifold;
  FieldFamily family;
  ControlBox box;
  SDESystem sde;
  Budgets budgets;
  ExpectedVerdicts expected;
  std::optional<int> expected_rank;
  std::optional<std::array<int, 2>> rational_slope;  // (m, n) with a = m / n
  std::optional<ScalarField> invariant_density;
  std::optional<ScalarField> harmonic_witness;
  std::vector<Point> s_markers;
  std::vector<Point> starts;
  std::vector<ScalarField> battery;
  std::vector<std::pair<std::string, VectorField>> named_fields;
  bool bracket_only = false;

  ControlSystem control_system() const { return ControlSystem(family, box); }
  CellGrid grid() const { return make_grid(manifold, budgets.grid); }
};

struct CatalogEntry {
  std::string name;
  std::string params;
  std::string description;
};

inline std::vector<CatalogEntry> list_scenarios() {
  return {
      {"torus_line", "a: real slope (default 0.5); m, n: optional integers with a = m/n; rational: optional bool",
       "Torus line field X = dx + a dy as control and noise field; rational a gives closed leaves and the "
       "invariant density sin^2(2 pi (m x - n y)), irrational a gives dense leaves."},
      {"torus_pair", "none", "Torus coordinate frame {dx, dy}; full rank, every leaf is the torus."},
      {"torus_bracket", "none",
       "Torus family {dx, sin(2 pi x) dy}; rank 1 at x = 0, 1/2 but bracket-generating at depth 2, "
       "diffusion is the foliated Brownian motion of the family."},
      {"sphere_height", "n: sphere dimension (default 2)",
       "Gradient of the height x1 on S^n as the single field; leaves are meridians, the diffusion "
       "concentrates at the poles, f = 1 - x1^2 is a nonconstant witness with L f = 0 at the poles."},
      {"sphere_bm", "n: sphere dimension (default 2)",
       "Brownian motion on S^n driven by the projected coordinate fields e_i - x_i x."},
      {"sl2_frame", "none",
       "Left-invariant fields X = e, H = -h/2, Y = f/2 on SL(2,R) with [X,H] = X, [X,Y] = -H, [H,Y] = Y; "
       "non-compact, bracket-check only (no reach, occupation or ergodic runs)."},
  };
}

namespace detail {

inline std::optional<std::array<int, 2>> detect_rational(double a, int max_den = 1000) {
  for (int den = 1; den <= max_den; ++den) {
    const double num = std::round(a * den);
    if (std::abs(a * den - num) <= 1e-9 * den) return std::array<int, 2>{static_cast<int>(num), den};
  }
  return std::nullopt;
}

inline Vec unit(int dim, int i, double s = 1.0) {
  Vec v = Vec::Zero(dim);
  v[i] = s;
  return v;
}

inline std::vector<Point> torus_starts() {
  return {Point(ManifoldId::torus2(), make_vec({0.0, 0.0})), Point(ManifoldId::torus2(), make_vec({0.25, 0.0}))};
}

inline std::vector<Point> sphere_equator_starts(int n) {
  const ManifoldId m = ManifoldId::sphere(n);
  if (n == 1) return {Point(m, make_vec({0.0, 1.0})), Point(m, make_vec({0.0, -1.0}))};
  return {Point(m, unit(n + 1, 1)), Point(m, unit(n + 1, 2))};
}

inline ControlBox unit_box(std::size_t k) { return ControlBox(k, {-1.0, 1.0}); }

inline Scenario torus_line(const ScenarioParams& params) {
  const double a = params.a.value_or(0.5);
  if (!std::isfinite(a)) throw Error(ErrorCode::BadParams, "torus_line: slope must be finite");
  std::optional<std::array<int, 2>> ratio;
  if (params.m || params.n) {
    if (!params.m || !params.n) throw Error(ErrorCode::BadParams, "torus_line: give both m and n");
    if (*params.n <= 0) throw Error(ErrorCode::BadParams, "torus_line: n must be positive");
    if (std::abs(a - static_cast<double>(*params.m) / *params.n) > 1e-12) {
      throw Error(ErrorCode::BadParams, "torus_line: a is not equal to m/n");
    }
    const int g = std::gcd(*params.m, *params.n);
    ratio = std::array<int, 2>{*params.m / g, *params.n / g};
  } else {
    ratio = detect_rational(a);
  }
  if (params.rational && *params.rational != ratio.has_value()) {
    throw Error(ErrorCode::BadParams, "torus_line: rational flag inconsistent with a");
  }
  const ManifoldId m = ManifoldId::torus2();
  const VectorField x = VectorField::torus("1*dx + " + format_double(a) + "*dy");
  FieldFamily family(m, std::nullopt, {x});
  Scenario s{
      .name = "torus_line",
      .description = list_scenarios()[0].description,
      .manifold = m,
      .family = family,
      .box = unit_box(1),
      .sde = SDESystem(family),
  };
  s.expected_rank = 1;
  s.starts = torus_starts();
  s.battery = torus_battery(3);
  s.named_fields = {{"X", x}};
  if (ratio) {
    const auto [p, q] = *ratio;
    s.rational_slope = ratio;
    // sin^2(2 pi (p x - q y)) = 1/2 - 1/2 cos(2 pi (2p x - 2q y))
    s.invariant_density = ScalarField::combo(
        {{0.5, ScalarField::constant(1.0)}, {-0.5, ScalarField::torus_trig(2 * p, -2 * q, Trig::Cos)}});
    s.harmonic_witness = ScalarField::torus_trig(p, -q, Trig::Sin);
    s.expected = {Verdict::NotDense, Verdict::NotDense, Verdict::NotDense};
  } else {
    s.expected = {Verdict::Dense, Verdict::Dense, Verdict::Dense};
  }
  return s;
}

inline Scenario torus_pair() {
  const ManifoldId m = ManifoldId::torus2();
  const VectorField dx = VectorField::torus("1*dx");
  const VectorField dy = VectorField::torus("1*dy");
  FieldFamily family(m, std::nullopt, {dx, dy});
  Scenario s{
      .name = "torus_pair",
      .description = list_scenarios()[1].description,
      .manifold = m,
      .family = family,
      .box = unit_box(2),
      .sde = SDESystem(family),
  };
  s.expected_rank = 2;
  s.expected = {Verdict::Dense, Verdict::Dense, Verdict::Dense};
  s.starts = torus_starts();
  s.battery = torus_battery(3);
  s.named_fields = {{"dx", dx}, {"dy", dy}};
  return s;
}

inline Scenario torus_bracket() {
  const ManifoldId m = ManifoldId::torus2();
  const VectorField dx = VectorField::torus("1*dx");
  const VectorField sy = VectorField::torus("sin(1,0)*dy");
  FieldFamily family(m, std::nullopt, {dx, sy});
  Scenario s{
      .name = "torus_bracket",
      .description = list_scenarios()[2].description,
      .manifold = m,
      .family = family,
      .box = unit_box(2),
      .sde = foliated_bm(family, 2),
  };
  s.expected_rank = 2;
  s.expected = {Verdict::Dense, Verdict::Dense, Verdict::Dense};
  s.starts = torus_starts();
  s.battery = torus_battery(3);
  s.named_fields = {{"dx", dx}, {"sin(2pi x) dy", sy}};
  // The framed diffusion costs a bracket evaluation per stage.
  s.budgets.T = 5e3;
  s.budgets.burn_in = 5e2;
  s.budgets.ergodic_T = 5e2;
  s.budgets.replicas = 8;
  return s;
}

inline Scenario sphere_height(const ScenarioParams& params) {
  const int n = params.n.value_or(2);
  const ManifoldId m = ManifoldId::sphere(n);
  const VectorField v = VectorField::sphere_height_gradient(n);
  FieldFamily family(m, std::nullopt, {v});
  Scenario s{
      .name = "sphere_height",
      .description = list_scenarios()[3].description,
      .manifold = m,
      .family = family,
      .box = unit_box(1),
      .sde = SDESystem(family),
  };
  s.expected_rank = 1;
  s.expected.reach = Verdict::NotDense;
  s.expected.support = Verdict::NotDense;
  s.harmonic_witness = one_minus_x1_squared();
  s.s_markers = {Point(m, unit(n + 1, 0)), Point(m, unit(n + 1, 0, -1.0))};
  s.starts = sphere_equator_starts(n);
  s.battery = sphere_battery(n);
  s.named_fields = {{"V", v}};
  s.budgets.grid = {16, 32};
  s.budgets.T = 1e4;
  s.budgets.dt = 1e-3;
  s.budgets.burn_in = 1e3;
  s.budgets.ergodic_T = 1e3;
  s.budgets.ergodic_dt = 1e-3;
  s.budgets.replicas = 4;
  return s;
}

inline Scenario sphere_bm(const ScenarioParams& params) {
  const int n = params.n.value_or(2);
  const ManifoldId m = ManifoldId::sphere(n);
  SDESystem sde = brownian_motion(m);
  Scenario s{
      .name = "sphere_bm",
      .description = list_scenarios()[4].description,
      .manifold = m,
      .family = sde.family,
      .box = unit_box(sde.family.fields.size()),
      .sde = sde,
  };
  s.expected_rank = n;
  s.expected = {Verdict::Dense, Verdict::Dense, Verdict::Dense};
  s.starts = sphere_equator_starts(n);
  s.battery = sphere_battery(n);
  for (int i = 0; i <= n; ++i) s.named_fields.push_back({"X" + std::to_string(i + 1), sde.family.fields[i]});
  s.budgets.grid = {16, 32};
  s.budgets.T = 2e3;
  s.budgets.burn_in = 2e2;
  s.budgets.n_paths = 100;
  s.budgets.horizon = 50.0;
  s.budgets.ergodic_T = 5e2;
  s.budgets.replicas = 8;
  return s;
}

/// sl2 basis in the convention [X,H] = X, [X,Y] = -H, [H,Y] = Y.
inline Eigen::Matrix2d sl2_x() { return (Eigen::Matrix2d() << 0, 1, 0, 0).finished(); }
inline Eigen::Matrix2d sl2_h() { return (Eigen::Matrix2d() << -0.5, 0, 0, 0.5).finished(); }
inline Eigen::Matrix2d sl2_y() { return (Eigen::Matrix2d() << 0, 0, 0.5, 0).finished(); }

inline Scenario sl2_frame() {
  const ManifoldId m = ManifoldId::sl2();
  const VectorField x = VectorField::sl2_left_invariant(sl2_x());
  const VectorField h = VectorField::sl2_left_invariant(sl2_h());
  const VectorField y = VectorField::sl2_left_invariant(sl2_y());
  FieldFamily family(m, std::nullopt, {x, h});
  Scenario s{
      .name = "sl2_frame",
      .description = list_scenarios()[5].description,
      .manifold = m,
      .family = family,
      .box = unit_box(2),
      .sde = SDESystem(family),
  };
  s.bracket_only = true;
  s.expected_rank = 2;
  s.named_fields = {{"X", x}, {"H", h}, {"Y", y}};
  return s;
}

}  // namespace detail

inline Scenario build_scenario(std::string_view name, const ScenarioParams& params = {}) {
  const bool uses_slope = params.a || params.m || params.rational;
  const auto reject_params = [&](bool bad) {
    if (bad) throw Error(ErrorCode::BadParams, std::string(name) + ": unexpected parameters");
  };
  if (name == "torus_line") return detail::torus_line(params);
  if (name == "torus_pair") {
    reject_params(uses_slope || params.n);
    return detail::torus_pair();
  }
  if (name == "torus_bracket") {
    reject_params(uses_slope || params.n);
    return detail::torus_bracket();
  }
  if (name == "sphere_height") {
    reject_params(uses_slope);
    return detail::sphere_height(params);
  }
  if (name == "sphere_bm") {
    reject_params(uses_slope);
    return detail::sphere_bm(params);
  }
  if (name == "sl2_frame") {
    reject_params(uses_slope || params.n);
    return detail::sl2_frame();
  }
  throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + std::string(name) + "'");
}

}  // namespace stochctl

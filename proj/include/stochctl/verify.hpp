// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>
#include <optional>

#include "stochctl/measure.hpp"
#include "stochctl/parallel.hpp"
#include "stochctl/scenarios.hpp"

namespace stochctl {

struct VerifyConfig {
  Budgets budgets;
  Exec exec{};
};

/// Verdicts for the three equivalent density assertions: dense accessible
/// sets (reach), full support of the occupation measure (support), and
/// start-independent ergodic averages (constancy).
struct EquivalenceReport {
  Verdict reach_verdict = Verdict::Inconclusive;
  Verdict support_verdict = Verdict::Inconclusive;
  Verdict constancy_verdict = Verdict::Inconclusive;
  bool consistent = false;
  double reach_coverage = 0.0;
  double support_coverage = 0.0;
  double robust_support_coverage = 0.0;
  ErgodicReport ergodic;
};

/// True iff no two non-Inconclusive verdicts disagree.
inline bool verdicts_consistent(std::initializer_list<Verdict> vs) {
  std::optional<Verdict> seen;
  for (Verdict v : vs) {
    if (v == Verdict::Inconclusive) continue;
    if (seen && *seen != v) return false;
    seen = v;
  }
  return true;
}

/// Runs reach_sample (rng.child(1)), occupation_measure (rng.child(2)) and
/// ergodic_constancy_test (rng.child(3)) from the scenario's first start.
inline EquivalenceReport verify_equivalence(const Scenario& scenario, const VerifyConfig& cfg,
                                            const RandomStream& rng) {
  require_compact(scenario.manifold, "verify_equivalence");
  if (scenario.bracket_only) {
    throw Error(ErrorCode::NonCompactManifold, scenario.name + " is bracket-check only");
  }
  const Budgets& b = cfg.budgets;
  const CellGrid grid = make_grid(scenario.manifold, b.grid);
  const Point& p0 = scenario.starts.front();
  EquivalenceReport rep;

  const auto reach = reach_sample(scenario.control_system(), p0, b.n_paths, b.horizon, b.control_dt, grid,
                                  rng.child(1), ReachOptions{b.seg_duration, cfg.exec});
  rep.reach_coverage = support_estimate(reach).coverage_fraction;
  rep.reach_verdict = coverage_verdict(rep.reach_coverage);

  RandomStream occ_rng = rng.child(2);
  const auto occ = occupation_measure(scenario.sde, p0, b.T, b.dt, b.burn_in, grid, occ_rng);
  rep.support_coverage = support_estimate(occ).coverage_fraction;
  rep.robust_support_coverage = support_estimate(occ, robust_min_count(occ)).coverage_fraction;
  rep.support_verdict = coverage_verdict(rep.support_coverage);

  ErgodicOptions eo;
  eo.T = b.ergodic_T;
  eo.dt = b.ergodic_dt;
  eo.replicas = b.replicas;
  eo.stride = b.ergodic_stride;
  eo.exec = cfg.exec;
  rep.ergodic = ergodic_constancy_test(scenario.sde, scenario.battery, scenario.starts, eo, rng.child(3));
  rep.constancy_verdict = rep.ergodic.verdict;

  rep.consistent = verdicts_consistent({rep.reach_verdict, rep.support_verdict, rep.constancy_verdict});
  return rep;
}

}  // namespace stochctl

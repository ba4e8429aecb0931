// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "stochctl/dynamics.hpp"
#include "stochctl/histogram.hpp"
#include "stochctl/lie.hpp"
#include "stochctl/measure.hpp"
#include "stochctl/scenarios.hpp"
#include "stochctl/verify.hpp"

// JSON views of the report types. Field names are stable; see README.

namespace stochctl {

using json = nlohmann::ordered_json;

inline json coords_json(const Vec& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

inline json to_json(const Point& p) { return coords_json(p.coords()); }

inline json to_json(const ManifoldId& m) {
  json j;
  switch (m.kind) {
    case ManifoldKind::Torus2: j["manifold"] = "torus2"; break;
    case ManifoldKind::Sphere: j["manifold"] = "sphere"; j["n"] = m.n; break;
    case ManifoldKind::SpecialLinear2: j["manifold"] = "sl2"; break;
  }
  return j;
}

inline json verdict_json(Verdict v) { return std::string(to_string(v)); }

inline json optional_verdict_json(const std::optional<Verdict>& v) { return v ? verdict_json(*v) : json(nullptr); }

inline json to_json(const RankReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back(to_json(p));
  return {{"samples", r.samples},         {"depth", r.depth},
          {"min_rank", r.min_rank},       {"max_rank", r.max_rank},
          {"full_rank_everywhere", r.full_rank_everywhere},
          {"ranks", r.ranks},             {"points", pts}};
}

inline json to_json(const SupportEstimate& s) {
  return {{"occupied_cells", s.occupied_cells},
          {"occupied_count", s.occupied_cells.size()},
          {"coverage_fraction", s.coverage_fraction},
          {"min_count", s.min_count}};
}

/// Summary of a histogram; the per-cell counts go to the CSV export.
inline json histogram_summary(const OccupationHistogram& h) {
  return {{"grid", {h.grid.resolution[0], h.grid.resolution[1]}},
          {"cell_count", h.grid.cell_count()},
          {"total_samples", h.total_samples},
          {"burn_in_discarded", h.burn_in_discarded}};
}

inline json to_json(const InvarianceReport& r) {
  return {{"functions", r.functions}, {"residuals", r.residuals}, {"max_abs_residual", r.max_abs_residual}};
}

inline json to_json(const ErgodicReport& r) {
  json starts = json::array();
  for (const auto& p : r.starts) starts.push_back(to_json(p));
  return {{"starts", starts},
          {"functions", r.functions},
          {"replicas", r.replicas},
          {"averages", r.averages},
          {"start_means", r.start_means},
          {"pooled_se", r.pooled_se},
          {"max_gap", r.max_gap},
          {"max_gap_ratio", r.max_gap_ratio},
          {"verdict", verdict_json(r.verdict)}};
}

inline json to_json(const EquivalenceReport& r) {
  return {{"reach_verdict", verdict_json(r.reach_verdict)},
          {"support_verdict", verdict_json(r.support_verdict)},
          {"constancy_verdict", verdict_json(r.constancy_verdict)},
          {"consistent", r.consistent},
          {"reach_coverage", r.reach_coverage},
          {"support_coverage", r.support_coverage},
          {"robust_support_coverage", r.robust_support_coverage},
          {"ergodic", to_json(r.ergodic)}};
}

inline json to_json(const Trajectory& t) {
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back(to_json(p));
  return {{"record_stride", t.record_stride}, {"times", t.times}, {"points", pts}};
}

inline json to_json(const ConsistencyReport& r) {
  return {{"jaccard", r.jaccard}, {"reach_coverage", r.reach_coverage},
          {"occupation_coverage", r.occupation_coverage}};
}

inline json to_json(const Scenario& s) {
  json fields = json::array();
  for (const auto& [name, f] : s.named_fields) fields.push_back({{"name", name}, {"field", f.describe()}});
  json starts = json::array();
  for (const auto& p : s.starts) starts.push_back(to_json(p));
  json markers = json::array();
  for (const auto& p : s.s_markers) markers.push_back(to_json(p));
  json j{{"name", s.name}, {"description", s.description}};
  j.update(to_json(s.manifold));
  j["fields"] = fields;
  j["bracket_only"] = s.bracket_only;
  j["expected"] = {{"reach", optional_verdict_json(s.expected.reach)},
                   {"support", optional_verdict_json(s.expected.support)},
                   {"constancy", optional_verdict_json(s.expected.constancy)}};
  j["expected_rank"] = s.expected_rank ? json(*s.expected_rank) : json(nullptr);
  j["rational_slope"] = s.rational_slope ? json(*s.rational_slope) : json(nullptr);
  j["invariant_density"] = s.invariant_density ? json(s.invariant_density->describe()) : json(nullptr);
  j["harmonic_witness"] = s.harmonic_witness ? json(s.harmonic_witness->describe()) : json(nullptr);
  j["s_markers"] = markers;
  j["starts"] = starts;
  return j;
}

}  // namespace stochctl

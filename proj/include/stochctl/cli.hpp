// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stochctl/dynamics.hpp"
#include "stochctl/error.hpp"
#include "stochctl/histogram.hpp"
#include "stochctl/lie.hpp"
#include "stochctl/measure.hpp"
#include "stochctl/report_json.hpp"
#include "stochctl/scenarios.hpp"
#include "stochctl/verify.hpp"

namespace stochctl::cli {

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"rank",       "reach",    "sde",    "occupation",
                                          "invariance", "harmonic", "verify", "list-scenarios"};
  return c;
}

/// Fully resolved run configuration. Every field is explicit after
/// resolution, so dump_config followed by parse_config is the identity.
struct RunConfig {
  std::string command;
  std::string scenario;
  ScenarioParams params;
  std::uint64_t seed = 0;
  Budgets budgets;
  int record_stride = 1;  // sde
  int quad_res = 256;     // invariance
  double fd_step = kDefaultFdStep;
  int battery_kmax = 3;  // torus batteries only
  std::string out;
  std::string hist;
  std::string heatmap;
  bool strict = false;
  unsigned threads = 0;
  bool quiet = false;

  bool operator==(const RunConfig&) const = default;
};

inline constexpr double kDefaultSdeHorizon = 10.0;

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error("config key '" + key + "': " + e.what());
  }
}

template <class T>
void read_opt(const json& obj, const std::string& key, std::optional<T>& dst) {
  if (!obj.contains(key) || obj.at(key).is_null()) {
    dst.reset();
    return;
  }
  dst = get_as<T>(obj, key);
}

template <class T>
void read_if(const json& obj, const std::string& key, T& dst) {
  if (obj.contains(key)) dst = get_as<T>(obj, key);
}

inline void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      config_error("unknown key '" + k + "' in " + where);
    }
  }
}

inline void validate(const RunConfig& c) {
  const Budgets& b = c.budgets;
  const auto need = [](bool ok, const char* msg) {
    if (!ok) config_error(msg);
  };
  need(b.T > 0.0, "T must be positive");
  need(b.dt > 0.0, "dt must be positive");
  need(b.burn_in >= 0.0 && b.burn_in < b.T, "burn_in must lie in [0, T)");
  need(b.grid[0] >= 1 && b.grid[1] >= 1, "grid resolution must be positive");
  need(b.n_paths >= 1, "paths must be >= 1");
  need(b.horizon > 0.0, "horizon must be positive");
  need(b.seg_duration > 0.0, "seg_duration must be positive");
  need(b.control_dt > 0.0, "control_dt must be positive");
  need(b.depth >= 1, "depth must be >= 1");
  need(b.rank_samples >= 1, "samples must be >= 1");
  need(b.replicas >= 2, "replicas must be >= 2");
  need(b.ergodic_T > 0.0, "ergodic_T must be positive");
  need(b.ergodic_dt > 0.0, "ergodic_dt must be positive");
  need(b.ergodic_stride >= 1, "ergodic_stride must be >= 1");
  need(c.record_stride >= 1, "record_stride must be >= 1");
  need(c.quad_res >= 2, "quad_res must be >= 2");
  need(c.fd_step > 0.0 && c.fd_step <= 1e-2, "fd_step must lie in (0, 1e-2]");
  need(c.battery_kmax >= 1 && c.battery_kmax <= 8, "battery_kmax must lie in [1, 8]");
}

inline void check_manifold(const json& cfg, const ManifoldId& m) {
  if (!cfg.contains("manifold")) {
    if (cfg.contains("n")) config_error("key 'n' is only meaningful next to 'manifold'");
    return;
  }
  const auto name = get_as<std::string>(cfg, "manifold");
  const json expected = to_json(m);
  if (name != expected["manifold"].get<std::string>()) {
    config_error("manifold '" + name + "' does not match scenario manifold '" +
                 expected["manifold"].get<std::string>() + "'");
  }
  if (m.kind == ManifoldKind::Sphere && cfg.contains("n") && get_as<int>(cfg, "n") != m.n) {
    config_error("manifold dimension does not match scenario");
  }
  if (m.kind != ManifoldKind::Sphere && cfg.contains("n")) config_error("key 'n' is only valid for spheres");
}

}  // namespace detail

/// Builds a RunConfig from a JSON object. Missing budget keys take the
/// scenario's recommended values; if T is given without burn_in, burn_in is
/// 10% of T; the sde command defaults to T = 10.
inline RunConfig parse_config(const json& cfg) {
  using namespace detail;
  check_keys(cfg, {"command", "scenario", "params", "manifold", "n", "seed", "budgets", "record_stride", "quad_res",
                   "fd_step", "battery_kmax", "outputs", "strict", "threads", "quiet"},
             "config");
  RunConfig c;
  c.command = cfg.contains("command") ? get_as<std::string>(cfg, "command") : "";
  if (std::find(commands().begin(), commands().end(), c.command) == commands().end()) {
    config_error("unknown or missing command '" + c.command + "'");
  }
  read_if(cfg, "strict", c.strict);
  read_if(cfg, "threads", c.threads);
  read_if(cfg, "quiet", c.quiet);
  if (cfg.contains("outputs")) {
    const json& o = cfg.at("outputs");
    check_keys(o, {"out", "hist", "heatmap"}, "outputs");
    read_if(o, "out", c.out);
    read_if(o, "hist", c.hist);
    read_if(o, "heatmap", c.heatmap);
  }
  if (c.command == "list-scenarios") return c;

  if (!cfg.contains("scenario")) config_error("missing scenario");
  c.scenario = get_as<std::string>(cfg, "scenario");
  if (cfg.contains("params") && !cfg.at("params").is_null()) {
    const json& p = cfg.at("params");
    check_keys(p, {"a", "m", "n", "rational"}, "params");
    read_opt(p, "a", c.params.a);
    read_opt(p, "m", c.params.m);
    read_opt(p, "n", c.params.n);
    read_opt(p, "rational", c.params.rational);
  }
  if (!cfg.contains("seed") || cfg.at("seed").is_null()) config_error("missing seed (no default seed)");
  if (!cfg.at("seed").is_number_integer()) config_error("seed must be a nonnegative integer");
  if (cfg.at("seed").is_number_unsigned()) {
    c.seed = cfg.at("seed").get<std::uint64_t>();
  } else {
    const auto s = cfg.at("seed").get<std::int64_t>();
    if (s < 0) config_error("seed must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(s);
  }

  const Scenario scenario = build_scenario(c.scenario, c.params);
  check_manifold(cfg, scenario.manifold);

  Budgets& b = c.budgets;
  b = scenario.budgets;
  if (c.command == "sde") b.T = kDefaultSdeHorizon;
  bool t_given = false;
  bool burn_given = false;
  if (cfg.contains("budgets")) {
    const json& j = cfg.at("budgets");
    check_keys(j, {"T", "dt", "burn_in", "grid", "paths", "horizon", "seg_duration", "control_dt", "depth",
                   "samples", "replicas", "ergodic_T", "ergodic_dt", "ergodic_stride"},
               "budgets");
    t_given = j.contains("T");
    burn_given = j.contains("burn_in");
    read_if(j, "T", b.T);
    read_if(j, "dt", b.dt);
    read_if(j, "burn_in", b.burn_in);
    read_if(j, "grid", b.grid);
    read_if(j, "paths", b.n_paths);
    read_if(j, "horizon", b.horizon);
    read_if(j, "seg_duration", b.seg_duration);
    read_if(j, "control_dt", b.control_dt);
    read_if(j, "depth", b.depth);
    read_if(j, "samples", b.rank_samples);
    read_if(j, "replicas", b.replicas);
    read_if(j, "ergodic_T", b.ergodic_T);
    read_if(j, "ergodic_dt", b.ergodic_dt);
    read_if(j, "ergodic_stride", b.ergodic_stride);
  }
  if (!burn_given && (t_given || c.command == "sde")) b.burn_in = default_burn_in(b.T);
  read_if(cfg, "record_stride", c.record_stride);
  read_if(cfg, "quad_res", c.quad_res);
  read_if(cfg, "fd_step", c.fd_step);
  read_if(cfg, "battery_kmax", c.battery_kmax);
  validate(c);
  return c;
}

inline json dump_config(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.command != "list-scenarios") {
    j["scenario"] = c.scenario;
    const Scenario s = build_scenario(c.scenario, c.params);
    j.update(to_json(s.manifold));
    const auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
    j["params"] = {{"a", opt(c.params.a)}, {"m", opt(c.params.m)}, {"n", opt(c.params.n)},
                   {"rational", opt(c.params.rational)}};
    j["seed"] = c.seed;
    const Budgets& b = c.budgets;
    j["budgets"] = {{"T", b.T},
                    {"dt", b.dt},
                    {"burn_in", b.burn_in},
                    {"grid", b.grid},
                    {"paths", b.n_paths},
                    {"horizon", b.horizon},
                    {"seg_duration", b.seg_duration},
                    {"control_dt", b.control_dt},
                    {"depth", b.depth},
                    {"samples", b.rank_samples},
                    {"replicas", b.replicas},
                    {"ergodic_T", b.ergodic_T},
                    {"ergodic_dt", b.ergodic_dt},
                    {"ergodic_stride", b.ergodic_stride}};
    j["record_stride"] = c.record_stride;
    j["quad_res"] = c.quad_res;
    j["fd_step"] = c.fd_step;
    j["battery_kmax"] = c.battery_kmax;
  }
  j["outputs"] = {{"out", c.out}, {"hist", c.hist}, {"heatmap", c.heatmap}};
  j["strict"] = c.strict;
  j["threads"] = c.threads;
  j["quiet"] = c.quiet;
  return j;
}

inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankCollapse:
    case ErrorCode::NumericalBlowup:
    case ErrorCode::DegenerateInput: return 2;
    default: return 1;
  }
}

inline void diagnostic(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

namespace detail {

struct Outcome {
  json report;
  std::vector<Verdict> verdicts;
};

inline void progress(const RunConfig& c, std::ostream& err, const std::string& step) {
  if (!c.quiet) err << "stochctl: " << step << '\n';
}

inline std::vector<ScalarField> battery_for(const Scenario& s, const RunConfig& c) {
  if (s.manifold.kind == ManifoldKind::Torus2) return torus_battery(c.battery_kmax);
  return s.battery;
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) config_error("cannot open '" + path + "' for writing");
  f << data;
  if (!f) config_error("failed writing '" + path + "'");
}

inline void export_histogram(const RunConfig& c, const OccupationHistogram& h) {
  if (!c.hist.empty()) {
    std::ostringstream os;
    write_histogram_csv(os, h);
    write_file(c.hist, os.str());
  }
  if (!c.heatmap.empty()) {
    std::ostringstream os;
    write_heatmap_pgm(os, h);
    write_file(c.heatmap, os.str());
  }
}

inline Outcome run_rank(const RunConfig& c, const Scenario& s, RandomStream& rng) {
  const Budgets& b = c.budgets;
  RankReport rep;
  json extra;
  if (s.manifold.compact()) {
    rep = krener_rank_test(s.family, b.rank_samples, b.depth, rng, kDefaultRankTol, c.fd_step);
  } else {
    // Non-compact group: sample near the identity instead of uniformly.
    rep.samples = b.rank_samples;
    rep.depth = b.depth;
    rep.min_rank = s.manifold.dim();
    for (int i = 0; i < b.rank_samples; ++i) {
      Point p = random_group_point(rng);
      const int r = distribution_rank(s.family, p, b.depth, kDefaultRankTol, c.fd_step);
      rep.ranks.push_back(r);
      rep.points.push_back(std::move(p));
      rep.min_rank = std::min(rep.min_rank, r);
      rep.max_rank = std::max(rep.max_rank, r);
    }
    rep.full_rank_everywhere = rep.min_rank == s.manifold.dim();
  }
  json report = to_json(rep);
  report["expected_rank"] = s.expected_rank ? json(*s.expected_rank) : json(nullptr);
  if (s.bracket_only && s.named_fields.size() == 3) {
    // [X,H] = X, [X,Y] = -H, [H,Y] = Y at every sampled point.
    const VectorField& x = s.named_fields[0].second;
    const VectorField& h = s.named_fields[1].second;
    const VectorField& y = s.named_fields[2].second;
    double worst = 0.0;
    for (const auto& p : rep.points) {
      const Vec e1 = lie_bracket(x, h, p, c.fd_step).coords - x.eval(p).coords;
      const Vec e2 = lie_bracket(x, y, p, c.fd_step).coords + h.eval(p).coords;
      const Vec e3 = lie_bracket(h, y, p, c.fd_step).coords - y.eval(p).coords;
      worst = std::max({worst, e1.cwiseAbs().maxCoeff(), e2.cwiseAbs().maxCoeff(), e3.cwiseAbs().maxCoeff()});
    }
    report["bracket_relation_max_error"] = worst;
  }
  return {report, {}};
}

inline Outcome run_reach(const RunConfig& c, const Scenario& s, const RandomStream& rng) {
  const Budgets& b = c.budgets;
  if (s.bracket_only) throw Error(ErrorCode::NonCompactManifold, s.name + " is bracket-check only");
  const CellGrid grid = make_grid(s.manifold, b.grid);
  const auto hist = reach_sample(s.control_system(), s.starts.front(), b.n_paths, b.horizon, b.control_dt, grid,
                                 rng, ReachOptions{b.seg_duration, Exec{c.threads}});
  export_histogram(c, hist);
  const auto sup = support_estimate(hist);
  const Verdict v = coverage_verdict(sup.coverage_fraction);
  json report{{"histogram", histogram_summary(hist)}, {"support", to_json(sup)}, {"verdict", verdict_json(v)}};
  return {report, {v}};
}

inline Outcome run_sde(const RunConfig& c, const Scenario& s, RandomStream& rng) {
  if (s.bracket_only) throw Error(ErrorCode::NonCompactManifold, s.name + " is bracket-check only");
  const Budgets& b = c.budgets;
  const Trajectory traj = simulate_sde(s.sde, s.starts.front(), b.T, b.dt, rng, c.record_stride);
  json report{{"T", b.T}, {"dt", b.dt}, {"trajectory", to_json(traj)}};
  return {report, {}};
}

inline Outcome run_occupation(const RunConfig& c, const Scenario& s, RandomStream& rng) {
  if (s.bracket_only) throw Error(ErrorCode::NonCompactManifold, s.name + " is bracket-check only");
  const Budgets& b = c.budgets;
  const CellGrid grid = make_grid(s.manifold, b.grid);
  const auto hist = occupation_measure(s.sde, s.starts.front(), b.T, b.dt, b.burn_in, grid, rng);
  export_histogram(c, hist);
  const auto sup = support_estimate(hist);
  const auto robust = support_estimate(hist, robust_min_count(hist));
  const Verdict v = coverage_verdict(sup.coverage_fraction);
  json report{{"histogram", histogram_summary(hist)},
              {"support", to_json(sup)},
              {"robust_support", to_json(robust)},
              {"verdict", verdict_json(v)}};
  return {report, {v}};
}

inline Outcome run_invariance(const RunConfig& c, const Scenario& s) {
  if (s.bracket_only) throw Error(ErrorCode::NonCompactManifold, s.name + " is bracket-check only");
  const std::array<int, 2> res = s.manifold.kind == ManifoldKind::Torus2
                                     ? std::array<int, 2>{c.quad_res, c.quad_res}
                                     : std::array<int, 2>{std::max(1, c.quad_res / 2), c.quad_res};
  const CellGrid grid = make_grid(s.manifold, res);
  const GridFunction density =
      s.invariant_density ? sample_on_grid(*s.invariant_density, grid) : uniform_density(grid);
  const auto rep = check_invariance(density, s.sde, battery_for(s, c), c.fd_step);
  json report = to_json(rep);
  report["density"] = s.invariant_density ? s.invariant_density->describe() : "uniform";
  report["quad_res"] = res;
  return {report, {}};
}

inline Outcome run_harmonic(const RunConfig& c, const Scenario& s, const RandomStream& rng) {
  if (s.bracket_only) throw Error(ErrorCode::NonCompactManifold, s.name + " is bracket-check only");
  const Budgets& b = c.budgets;
  std::vector<ScalarField> fns = battery_for(s, c);
  ErgodicOptions eo;
  eo.T = b.ergodic_T;
  eo.dt = b.ergodic_dt;
  eo.replicas = b.replicas;
  eo.stride = b.ergodic_stride;
  eo.exec = Exec{c.threads};
  const auto rep = ergodic_constancy_test(s.sde, fns, s.starts, eo, rng);
  json report{{"ergodic", to_json(rep)}};
  if (s.harmonic_witness) {
    json values = json::array();
    std::vector<Point> pts = s.s_markers;
    pts.insert(pts.end(), s.starts.begin(), s.starts.end());
    for (const auto& p : pts) {
      values.push_back({{"point", to_json(p)}, {"generator", generator_apply(s.sde, *s.harmonic_witness, p, c.fd_step)}});
    }
    report["witness"] = {{"function", s.harmonic_witness->describe()}, {"values", values}};
  }
  return {report, {rep.verdict}};
}

inline Outcome run_verify(const RunConfig& c, const Scenario& s, const RandomStream& rng) {
  Scenario run = s;
  run.battery = battery_for(s, c);
  const auto rep = verify_equivalence(run, VerifyConfig{c.budgets, Exec{c.threads}}, rng);
  json report = to_json(rep);
  report["expected"] = {{"reach", optional_verdict_json(s.expected.reach)},
                        {"support", optional_verdict_json(s.expected.support)},
                        {"constancy", optional_verdict_json(s.expected.constancy)}};
  return {report, {rep.reach_verdict, rep.support_verdict, rep.constancy_verdict}};
}

inline json catalog_json() {
  json a = json::array();
  for (const auto& e : list_scenarios()) {
    a.push_back({{"name", e.name}, {"params", e.params}, {"description", e.description}});
  }
  return {{"scenarios", a}};
}

inline json report_header(const RunConfig& c) {
  return {{"command", c.command}, {"scenario", c.scenario}, {"seed", c.seed}};
}

}  // namespace detail

/// Executes a resolved configuration; returns the process exit code.
inline int execute(const RunConfig& c, std::ostream& out, std::ostream& err) {
  using namespace detail;
  json report;
  std::vector<Verdict> verdicts;
  if (c.command == "list-scenarios") {
    report = catalog_json();
  } else {
    const Scenario s = build_scenario(c.scenario, c.params);
    RandomStream rng(c.seed);
    progress(c, err, c.command + " " + c.scenario);
    Outcome o;
    if (c.command == "rank") o = run_rank(c, s, rng);
    else if (c.command == "reach") o = run_reach(c, s, rng);
    else if (c.command == "sde") o = run_sde(c, s, rng);
    else if (c.command == "occupation") o = run_occupation(c, s, rng);
    else if (c.command == "invariance") o = run_invariance(c, s);
    else if (c.command == "harmonic") o = run_harmonic(c, s, rng);
    else o = run_verify(c, s, rng);
    if ((!c.hist.empty() || !c.heatmap.empty()) && c.command != "reach" && c.command != "occupation") {
      config_error("--hist and --heatmap apply to reach and occupation only");
    }
    report = report_header(c);
    report["report"] = std::move(o.report);
    verdicts = std::move(o.verdicts);
    progress(c, err, "done");
  }
  const std::string text = report.dump(2) + "\n";
  if (c.out.empty()) {
    out << text;
  } else {
    write_file(c.out, text);
  }
  if (c.strict) {
    for (Verdict v : verdicts) {
      if (v == Verdict::Inconclusive) return 3;
    }
  }
  return 0;
}

/// Parses argv (argv[0] is the program name), runs, and maps errors to
/// exit codes with a one-line JSON diagnostic on `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Control systems and Stratonovich diffusions on compact manifolds", "stochctl"};
  std::string command;
  std::string config_path;
  json flags = json::object();
  json budgets = json::object();
  json params = json::object();
  json outputs = json::object();
  bool dump = false;

  app.add_option("command", command, "rank | reach | sde | occupation | invariance | harmonic | verify | list-scenarios");
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  app.add_flag("--dump-config", dump, "print the resolved config as JSON and exit");

  std::string scenario;
  std::optional<double> a;
  std::optional<int> m;
  std::optional<int> n;
  std::optional<bool> rational;
  std::optional<std::uint64_t> seed;
  app.add_option("--scenario", scenario, "scenario name (see list-scenarios)");
  app.add_option("--a", a, "torus_line slope");
  app.add_option("--m", m, "torus_line numerator");
  app.add_option("--n", n, "torus_line denominator, or sphere dimension");
  app.add_option("--rational", rational, "torus_line rational flag (true/false)");
  app.add_option("--seed", seed, "master seed (required)");

  std::optional<double> T, dt, burn_in, horizon, seg_duration, control_dt, ergodic_T, ergodic_dt, fd_step;
  std::optional<int> paths, depth, samples, replicas, ergodic_stride, record_stride, quad_res, kmax;
  std::vector<int> grid;
  app.add_option("--T", T, "simulation horizon");
  app.add_option("--dt", dt, "SDE time step");
  app.add_option("--burn-in", burn_in, "burn-in time (default 10% of T)");
  app.add_option("--grid", grid, "grid resolution: two integers")->expected(2);
  app.add_option("--paths", paths, "number of control paths");
  app.add_option("--horizon", horizon, "control path length");
  app.add_option("--seg-duration", seg_duration, "control segment duration");
  app.add_option("--control-dt", control_dt, "RK4 step for control paths");
  app.add_option("--depth", depth, "bracket depth");
  app.add_option("--samples", samples, "rank test sample count");
  app.add_option("--replicas", replicas, "ergodic replicas per start");
  app.add_option("--ergodic-T", ergodic_T, "ergodic path horizon");
  app.add_option("--ergodic-dt", ergodic_dt, "ergodic path time step");
  app.add_option("--ergodic-stride", ergodic_stride, "ergodic sampling stride");
  app.add_option("--record-stride", record_stride, "sde trajectory recording stride");
  app.add_option("--quad-res", quad_res, "invariance quadrature resolution");
  app.add_option("--fd-step", fd_step, "finite-difference step");
  app.add_option("--kmax", kmax, "torus battery frequency bound");

  std::optional<std::string> out_path, hist_path, heatmap_path;
  std::optional<unsigned> threads;
  bool strict = false;
  bool quiet = false;
  app.add_option("--out", out_path, "write the JSON report here instead of stdout");
  app.add_option("--hist", hist_path, "histogram CSV path");
  app.add_option("--heatmap", heatmap_path, "torus heatmap PGM path");
  app.add_flag("--strict", strict, "exit 3 if any verdict is Inconclusive");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");
  app.add_flag("--quiet", quiet, "suppress progress lines on stderr");

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    diagnostic(err, "ConfigError", e.what());
    return 1;
  }

  try {
    json cfg = json::object();
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) detail::config_error("cannot read config '" + config_path + "'");
      try {
        cfg = json::parse(f);
      } catch (const nlohmann::json::parse_error& e) {
        detail::config_error(std::string("invalid JSON config: ") + e.what());
      }
      if (!cfg.is_object()) detail::config_error("config must be a JSON object");
    }
    if (!command.empty()) cfg["command"] = command;
    if (!scenario.empty()) cfg["scenario"] = scenario;
    if (seed) cfg["seed"] = *seed;
    const auto set = [](json& obj, const char* key, const auto& v) {
      if (v) obj[key] = *v;
    };
    if (a || m || n || rational) {
      json& p = cfg["params"];
      if (p.is_null()) p = json::object();
      set(p, "a", a);
      set(p, "m", m);
      set(p, "n", n);
      set(p, "rational", rational);
    }
    if (T || dt || burn_in || !grid.empty() || paths || horizon || seg_duration || control_dt || depth || samples ||
        replicas || ergodic_T || ergodic_dt || ergodic_stride) {
      json& b = cfg["budgets"];
      if (b.is_null()) b = json::object();
      set(b, "T", T);
      set(b, "dt", dt);
      set(b, "burn_in", burn_in);
      if (!grid.empty()) b["grid"] = grid;
      set(b, "paths", paths);
      set(b, "horizon", horizon);
      set(b, "seg_duration", seg_duration);
      set(b, "control_dt", control_dt);
      set(b, "depth", depth);
      set(b, "samples", samples);
      set(b, "replicas", replicas);
      set(b, "ergodic_T", ergodic_T);
      set(b, "ergodic_dt", ergodic_dt);
      set(b, "ergodic_stride", ergodic_stride);
      // A new horizon without a burn-in re-derives the default burn-in.
      if (T && !burn_in) b.erase("burn_in");
    }
    set(cfg, "record_stride", record_stride);
    set(cfg, "quad_res", quad_res);
    set(cfg, "fd_step", fd_step);
    set(cfg, "battery_kmax", kmax);
    if (out_path || hist_path || heatmap_path) {
      json& o = cfg["outputs"];
      if (o.is_null()) o = json::object();
      set(o, "out", out_path);
      set(o, "hist", hist_path);
      set(o, "heatmap", heatmap_path);
    }
    if (strict) cfg["strict"] = true;
    if (quiet) cfg["quiet"] = true;
    set(cfg, "threads", threads);

    const RunConfig c = parse_config(cfg);
    if (dump) {
      out << dump_config(c).dump(2) << '\n';
      return 0;
    }
    return execute(c, out, err);
  } catch (const Error& e) {
    diagnostic(err, to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    diagnostic(err, "InternalError", e.what());
    return 2;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace stochctl::cli

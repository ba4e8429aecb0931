#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "stochctl/dynamics.hpp"

namespace stochctl {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const ManifoldId kTorus = ManifoldId::torus2();
const ManifoldId kS2 = ManifoldId::sphere(2);

Point torus_pt(double x, double y) { return Point(kTorus, make_vec({x, y})); }

using test::circle_dist;

ControlSystem single_control(const VectorField& x, double lo = 1.0, double hi = 1.0) {
  return ControlSystem(FieldFamily(x.manifold(), std::nullopt, {x}), {{lo, hi}});
}

ControlSignal constant_signal(double duration, std::vector<double> values) {
  return ControlSignal{{ControlSegment{duration, std::move(values)}}};
}

// ---------------------------------------------------------------------------
// Control paths

TEST(IntegrateControl, TranslationAlongDx) {
  const auto sys = single_control(VectorField::torus("1*dx"));
  const Trajectory t = integrate_control(sys, torus_pt(0, 0), constant_signal(0.25, {1.0}), 0.01);
  EXPECT_NEAR(t.points.back()[0], 0.25, 1e-12);
  EXPECT_NEAR(t.points.back()[1], 0.0, 1e-12);
  EXPECT_EQ(t.points.size(), 26u);
  EXPECT_NEAR(t.times.back(), 0.25, 1e-12);
}

TEST(IntegrateControl, SlopeHalfLeafCloses) {
  const auto sys = single_control(VectorField::torus("1*dx + 0.5*dy"));
  const Trajectory t = integrate_control(sys, torus_pt(0, 0), constant_signal(2.0, {1.0}), 0.01);
  EXPECT_LE(circle_dist(t.points.back()[0], 0.0), 1e-9);
  EXPECT_LE(circle_dist(t.points.back()[1], 0.0), 1e-9);
}

ControlSystem height_flow() {
  // V as drift; the single control channel is the zero field.
  return ControlSystem(FieldFamily(kS2, VectorField::sphere_height_gradient(2), {VectorField::zero(kS2)}),
                       {{0.0, 0.0}});
}

TEST(IntegrateControl, HeightGradientFlowApproachesPole) {
  const Trajectory t =
      integrate_control(height_flow(), Point(kS2, make_vec({0, 1, 0})), constant_signal(10.0, {0.0}), 0.01);
  for (std::size_t i = 1; i < t.points.size(); ++i) ASSERT_GE(t.points[i][0], t.points[i - 1][0]);
  EXPECT_GT(t.points.back()[0], 0.99);
  for (std::size_t i = 0; i < t.points.size(); i += 100) {
    EXPECT_NEAR(t.points[i][0], std::tanh(t.times[i]), 1e-8);
  }
}

TEST(IntegrateControl, Rk4FourthOrder) {
  // x1' = 1 - x1^2 with x1(0) = 0 has x1(t) = tanh(t).
  const Point p0(kS2, make_vec({0, 1, 0}));
  std::vector<double> errors;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    const Trajectory t = integrate_control(height_flow(), p0, constant_signal(2.0, {0.0}), dt);
    errors.push_back(std::abs(t.points.back()[0] - std::tanh(2.0)));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) EXPECT_GE(errors[i - 1] / errors[i], 12.0) << "halving " << i;
}

TEST(IntegrateControl, RecordStrideAndValidation) {
  const auto sys = single_control(VectorField::torus("1*dx"));
  const Trajectory t = integrate_control(sys, torus_pt(0, 0), constant_signal(1.0, {1.0}), 0.1, 5);
  ASSERT_EQ(t.points.size(), 3u);
  EXPECT_NEAR(t.times[1], 0.5, 1e-12);
  EXPECT_THROW((void)integrate_control(sys, torus_pt(0, 0), constant_signal(1.0, {1.0}), 0.0), Error);
  EXPECT_THROW((void)integrate_control(sys, torus_pt(0, 0), constant_signal(1.0, {1.0, 2.0}), 0.1), Error);
}

TEST(IntegrateControl, BlowupOnNonCompactGroup) {
  const auto a = VectorField::sl2_left_invariant((Eigen::Matrix2d() << 1, 0, 0, -1).finished());
  const auto sys = single_control(a);
  const Point id(ManifoldId::sl2(), make_vec({1, 0, 0, 1}));
  try {
    (void)integrate_control(sys, id, constant_signal(20.0, {1.0}), 0.01);
    FAIL() << "expected blowup";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalBlowup);
  }
}

TEST(ControlSystem, Validation) {
  const VectorField x = VectorField::torus("1*dx");
  EXPECT_THROW(ControlSystem(FieldFamily(kTorus, std::nullopt, {}), {}), Error);
  EXPECT_THROW(ControlSystem(FieldFamily(kTorus, std::nullopt, {x}), {{1.0, -1.0}}), Error);
  EXPECT_THROW(ControlSystem(FieldFamily(kTorus, std::nullopt, {x}), {{0, 1}, {0, 1}}), Error);
}

TEST(RandomSignal, DegenerateBoxIsConstant) {
  RandomStream rng(1);
  const ControlSignal u = random_signal(1, {{1.0, 1.0}}, 5, 0.3, rng);
  for (const auto& s : u.segments) EXPECT_EQ(s.values[0], 1.0);
}

TEST(RandomSignal, UniformChannelMeans) {
  RandomStream rng(2);
  const ControlSignal u = random_signal(2, {{-1, 1}, {-1, 1}}, 100000, 1.0, rng);
  double m0 = 0.0;
  double m1 = 0.0;
  for (const auto& s : u.segments) {
    ASSERT_GE(s.values[0], -1.0);
    ASSERT_LT(s.values[0], 1.0);
    m0 += s.values[0];
    m1 += s.values[1];
  }
  EXPECT_NEAR(m0 / 1e5, 0.0, 0.02);
  EXPECT_NEAR(m1 / 1e5, 0.0, 0.02);
}

TEST(RandomSignal, TotalDuration) {
  RandomStream rng(3);
  EXPECT_DOUBLE_EQ(random_signal(2, {{-1, 1}, {-1, 1}}, 3, 0.5, rng).total_duration(), 1.5);
  EXPECT_THROW((void)random_signal(1, {{0, 1}}, 0, 0.5, rng), Error);
}

// ---------------------------------------------------------------------------
// Reachability sampling

TEST(ReachSample, ZeroBoxStaysInStartCell) {
  const auto sys = single_control(VectorField::torus("1*dx + 1*dy"), 0.0, 0.0);
  const CellGrid grid = make_grid(kTorus, {32, 32});
  const auto h = reach_sample(sys, torus_pt(0.51, 0.52), 10, 5.0, 0.01, grid, RandomStream(1));
  const std::size_t start = cell_index(grid, torus_pt(0.51, 0.52)).flat;
  EXPECT_EQ(h.counts[start], h.total_samples);
}

TEST(ReachSample, CoordinateFrameCoversTorus) {
  ControlSystem sys(FieldFamily(kTorus, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("1*dy")}),
                    {{-1, 1}, {-1, 1}});
  const CellGrid grid = make_grid(kTorus, {32, 32});
  const auto h = reach_sample(sys, torus_pt(0, 0), 200, 100.0, 0.01, grid, RandomStream(5));
  std::size_t occupied = 0;
  for (auto c : h.counts) occupied += c > 0;
  EXPECT_GE(static_cast<double>(occupied) / grid.cell_count(), 0.99);
}

TEST(ReachSample, SlopeHalfStaysOnLeafCells) {
  const auto sys = single_control(VectorField::torus("1*dx + 0.5*dy"), -1.0, 1.0);
  const CellGrid grid = make_grid(kTorus, {32, 32});
  const auto h = reach_sample(sys, torus_pt(0.25, 0.0), 50, 20.0, 0.01, grid, RandomStream(7));
  const auto leaf = test::leaf_cells(32, 1, 2, 0.25);
  for (std::size_t c = 0; c < h.counts.size(); ++c) {
    if (h.counts[c] > 0) {
      EXPECT_TRUE(leaf[c]) << "cell " << c;
    }
  }
}

TEST(ReachSample, MoreSamplesNeverRemoveCells) {
  ControlSystem sys(FieldFamily(kTorus, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("1*dy")}),
                    {{-1, 1}, {-1, 1}});
  const CellGrid grid = make_grid(kTorus, {16, 16});
  const RandomStream rng(3);
  const auto small = reach_sample(sys, torus_pt(0, 0), 5, 3.0, 0.01, grid, rng);
  const auto large = reach_sample(sys, torus_pt(0, 0), 20, 3.0, 0.01, grid, rng);
  for (std::size_t c = 0; c < small.counts.size(); ++c) EXPECT_LE(small.counts[c], large.counts[c]);
}

TEST(ReachSample, ThreadCountDoesNotChangeCounts) {
  ControlSystem sys(FieldFamily(kTorus, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("1*dy")}),
                    {{-1, 1}, {-1, 1}});
  const CellGrid grid = make_grid(kTorus, {16, 16});
  const RandomStream rng(9);
  const auto a = reach_sample(sys, torus_pt(0, 0), 17, 3.0, 0.01, grid, rng, {1.0, Exec{1}});
  const auto b = reach_sample(sys, torus_pt(0, 0), 17, 3.0, 0.01, grid, rng, {1.0, Exec{5}});
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.total_samples, b.total_samples);
  std::uint64_t sum = 0;
  for (auto c : a.counts) sum += c;
  EXPECT_EQ(sum, a.total_samples);
}

TEST(ReachSample, NonCompactRejected) {
  const auto a = VectorField::sl2_left_invariant(Eigen::Matrix2d::Zero());
  EXPECT_THROW((void)make_grid(ManifoldId::sl2(), {4, 4}), Error);
  const auto sys = single_control(a);
  const CellGrid fake{ManifoldId::sl2(), {4, 4}};
  EXPECT_THROW(
      (void)reach_sample(sys, Point(ManifoldId::sl2(), make_vec({1, 0, 0, 1})), 1, 1.0, 0.1, fake, RandomStream(1)),
      Error);
}

// ---------------------------------------------------------------------------
// Heun steps and paths

SDESystem single_noise(const VectorField& x) { return SDESystem(FieldFamily(x.manifold(), std::nullopt, {x})); }

TEST(HeunStep, ZeroFieldsIdentity) {
  const SDESystem sys = single_noise(VectorField::zero(kS2));
  const Point p = Point(kS2, make_vec({0.6, 0.8, 0}));
  const double dw[] = {0.7};
  EXPECT_EQ(sde_step_heun(sys, p, 0.01, dw).coords(), p.coords());
}

TEST(HeunStep, ConstantFieldIsExact) {
  const SDESystem sys = single_noise(VectorField::torus("1*dx"));
  const double dw[] = {0.3};
  const Point q = sde_step_heun(sys, torus_pt(0.8, 0.4), 0.01, dw);
  EXPECT_NEAR(q[0], 0.1, 1e-15);
  EXPECT_EQ(q[1], 0.4);
}

TEST(HeunStep, SphereStaysOnSphere) {
  const SDESystem sys = brownian_motion(kS2);
  RandomStream rng(4);
  for (int k = 0; k < 1000; ++k) {
    const Point p = random_point(kS2, rng);
    const double dw[] = {rng.normal(), rng.normal(), rng.normal()};
    EXPECT_LE(std::abs(sde_step_heun(sys, p, 0.1, dw).coords().squaredNorm() - 1.0), 1e-12);
  }
}

TEST(HeunStep, RankChangeRaisesRankCollapse) {
  // The frame of sin(2 pi x) dx vanishes exactly at x = 0; the predictor
  // from x = 0.75 with increment 0.25 lands there.
  FieldFamily f(kTorus, std::nullopt, {VectorField::torus("sin(1,0)*dx")});
  const SDESystem sys = foliated_bm(f, 1);
  const double dw[] = {0.25, 0.0};
  try {
    (void)sde_step_heun(sys, torus_pt(0.75, 0.3), 0.01, dw);
    FAIL() << "expected RankCollapse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankCollapse);
  }
}

TEST(HeunStep, ValidatesNoiseSize) {
  const SDESystem sys = brownian_motion(kS2);
  const double dw[] = {0.1};
  EXPECT_THROW((void)sde_step_heun(sys, Point(kS2, make_vec({1, 0, 0})), 0.01, dw), Error);
}

TEST(SimulateSde, SingleStepZeroFields) {
  const SDESystem sys = single_noise(VectorField::zero(kTorus));
  RandomStream rng(1);
  const Trajectory t = simulate_sde(sys, torus_pt(0.3, 0.3), 0.01, 0.01, rng);
  ASSERT_EQ(t.points.size(), 2u);
  EXPECT_EQ(t.points[0].coords(), t.points[1].coords());
}

TEST(SimulateSde, SlopeHalfConservesLeafInvariant) {
  const SDESystem sys = single_noise(VectorField::torus("1*dx + 0.5*dy"));
  RandomStream rng(8);
  const Point p0 = torus_pt(0.1, 0.7);
  const double c0 = p0[0] - 2 * p0[1];
  double worst = 0.0;
  simulate_sde_visit(sys, p0.coords(), 1e4, 1e-2, rng,
                     [&](std::size_t, const Vec& x) { worst = std::max(worst, circle_dist(x[0] - 2 * x[1], c0)); });
  EXPECT_LE(worst, 1e-9);
}

TEST(SimulateSde, SphereBrownianMeanDecay) {
  // E[x1(t)] = exp(-t) x1(0) for Brownian motion on S^2.
  const SDESystem sys = brownian_motion(kS2);
  const RandomStream root(2024);
  const int paths = 10000;
  const std::vector<double> ts = {0.5, 1.0, 2.0};
  std::vector<std::vector<double>> vals(ts.size(), std::vector<double>(paths));
  parallel_for(paths, Exec{}, [&](std::size_t j) {
    RandomStream rng = root.child(j);
    simulate_sde_visit(sys, make_vec({1, 0, 0}), 2.0, 1e-3, rng, [&](std::size_t s, const Vec& x) {
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (s == static_cast<std::size_t>(std::lround(ts[k] / 1e-3))) vals[k][j] = x[0];
      }
    });
  });
  for (std::size_t k = 0; k < ts.size(); ++k) {
    double m = 0.0;
    double m2 = 0.0;
    for (double v : vals[k]) {
      m += v;
      m2 += v * v;
    }
    m /= paths;
    const double se = std::sqrt((m2 / paths - m * m) / (paths - 1));
    EXPECT_LE(std::abs(m - std::exp(-ts[k])), 3 * se) << "t = " << ts[k];
  }
}

TEST(SimulateSde, ConstraintHeldOverLongPath) {
  const SDESystem sys = brownian_motion(kS2);
  RandomStream rng(6);
  double worst = 0.0;
  simulate_sde_visit(sys, make_vec({0, 0, 1}), 1e4, 1e-3, rng, [&](std::size_t, const Vec& x) {
    worst = std::max(worst, std::abs(x.squaredNorm() - 1.0));
  });
  EXPECT_LE(worst, 1e-9);
}

TEST(SimulateSde, BitDeterministic) {
  const SDESystem sys = brownian_motion(kS2);
  RandomStream a(77, 4);
  RandomStream b(77, 4);
  const Trajectory ta = simulate_sde(sys, Point(kS2, make_vec({1, 0, 0})), 1.0, 1e-3, a, 10);
  const Trajectory tb = simulate_sde(sys, Point(kS2, make_vec({1, 0, 0})), 1.0, 1e-3, b, 10);
  ASSERT_EQ(ta.points.size(), 101u);
  for (std::size_t i = 0; i < ta.points.size(); ++i) {
    ASSERT_EQ(ta.points[i].coords(), tb.points[i].coords());
    ASSERT_EQ(ta.times[i], tb.times[i]);
  }
}

TEST(SimulateSde, Validation) {
  const SDESystem sys = brownian_motion(kS2);
  RandomStream rng(1);
  EXPECT_THROW((void)simulate_sde(sys, Point(kS2, make_vec({1, 0, 0})), 1e-4, 1e-3, rng), Error);
  EXPECT_THROW((void)simulate_sde(sys, Point(kS2, make_vec({1, 0, 0})), 1.0, 1e-3, rng, 0), Error);
  EXPECT_THROW((void)simulate_sde(sys, torus_pt(0, 0), 1.0, 1e-3, rng), Error);
}

// ---------------------------------------------------------------------------
// Generator

TEST(Generator, ConstantGivesZero) {
  const SDESystem sys = brownian_motion(kS2);
  EXPECT_EQ(generator_apply(sys, ScalarField::constant(3.0), Point(kS2, make_vec({0, 0.6, 0.8}))), 0.0);
}

TEST(Generator, SlopeHalfLeafFunction) {
  const SDESystem sys = single_noise(VectorField::torus("1*dx + 0.5*dy"));
  const ScalarField f = ScalarField::torus_trig(1, -2, Trig::Sin);
  // f is constant along the flow, so only roundoff remains: about eps / h^2.
  RandomStream rng(3);
  for (int k = 0; k < 100; ++k) {
    EXPECT_NEAR(generator_apply(sys, f, random_point(kTorus, rng), 1e-3), 0.0, 1e-8);
  }
}

TEST(Generator, HeightDiffusionWitness) {
  const SDESystem sys = single_noise(VectorField::sphere_height_gradient(2));
  const ScalarField f = one_minus_x1_squared();
  EXPECT_NEAR(generator_apply(sys, f, Point(kS2, make_vec({1, 0, 0}))), 0.0, 1e-6);
  EXPECT_NEAR(generator_apply(sys, f, Point(kS2, make_vec({-1, 0, 0}))), 0.0, 1e-6);
  EXPECT_NEAR(generator_apply(sys, f, Point(kS2, make_vec({0, 1, 0}))), -1.0, 1e-4);
  // 1/2 V^2 f = 1/2 (-2 + 6 x1^2)(1 - x1^2) along the meridian.
  const double x1 = 0.6;
  const Point p(kS2, make_vec({x1, 0, 0.8}));
  EXPECT_NEAR(generator_apply(sys, f, p), 0.5 * (-2 + 6 * x1 * x1) * (1 - x1 * x1), 1e-4);
}

TEST(Generator, SphereBrownianIsHalfLaplacian) {
  const SDESystem sys = brownian_motion(kS2);
  const ScalarField x1 = ScalarField::coordinate(0);
  EXPECT_NEAR(generator_apply(sys, x1, Point(kS2, make_vec({0, 1, 0}))), 0.0, 1e-6);
  EXPECT_NEAR(generator_apply(sys, x1, Point(kS2, make_vec({1, 0, 0}))), -1.0, 1e-4);
  RandomStream rng(12);
  for (int k = 0; k < 100; ++k) {
    const Point p = random_point(kS2, rng);
    Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
    for (const auto& x : sys.family.fields) {
      const Vec v = x.eval(p).coords;
      sum += v * v.transpose();
    }
    const Eigen::Matrix3d expect = Eigen::Matrix3d::Identity() - p.coords() * p.coords().transpose();
    EXPECT_LE((sum - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Generator, TorusBrownianIsHalfLaplacian) {
  const SDESystem sys = brownian_motion(kTorus);
  const ScalarField f = ScalarField::torus_trig(1, 0, Trig::Sin);
  RandomStream rng(13);
  for (int k = 0; k < 50; ++k) {
    const Point p = random_point(kTorus, rng);
    EXPECT_NEAR(generator_apply(sys, f, p), -2 * std::numbers::pi * std::numbers::pi * std::sin(kTwoPi * p[0]),
                1e-4);
  }
}

TEST(Generator, DriftIsFirstOrder) {
  const SDESystem sys(FieldFamily(kTorus, VectorField::torus("2*dx"), {VectorField::zero(kTorus)}));
  const ScalarField f = ScalarField::torus_trig(1, 0, Trig::Sin);
  const Point p = torus_pt(0.1, 0.2);
  EXPECT_NEAR(generator_apply(sys, f, p), 2 * kTwoPi * std::cos(kTwoPi * 0.1), 1e-5);
}

// ---------------------------------------------------------------------------
// Foliated Brownian motion

TEST(FoliatedBm, TorusLineConservesLeaf) {
  FieldFamily f(kTorus, std::nullopt, {VectorField::torus("1*dx + 0.5*dy")});
  const SDESystem sys = foliated_bm(f, 2);
  RandomStream rng(14);
  const Point p0 = torus_pt(0.3, 0.45);
  const double c0 = p0[0] - 2 * p0[1];
  double worst = 0.0;
  simulate_sde_visit(sys, p0.coords(), 1e4, 1e-2, rng,
                     [&](std::size_t, const Vec& x) { worst = std::max(worst, circle_dist(x[0] - 2 * x[1], c0)); });
  EXPECT_LE(worst, 1e-9);
}

TEST(FoliatedBm, FullSphereFamilyMatchesBrownianMotion) {
  std::vector<VectorField> fs;
  for (int i = 0; i < 3; ++i) fs.push_back(VectorField::sphere_coord_projection(2, i));
  const SDESystem fol = foliated_bm(FieldFamily(kS2, std::nullopt, fs), 1);
  const SDESystem bm = brownian_motion(kS2);
  RandomStream rng(15);
  for (int k = 0; k < 20; ++k) {
    const Point p = random_point(kS2, rng);
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE((fol.family.fields[i].eval(p).coords - bm.family.fields[i].eval(p).coords).norm(), 1e-10);
    }
    const ScalarField f = ScalarField::monomial({1, 1, 0});
    EXPECT_NEAR(generator_apply(fol, f, p), generator_apply(bm, f, p), 1e-6);
  }
}

TEST(FoliatedBm, TorusCoordinateFrameGenerator) {
  FieldFamily f(kTorus, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("1*dy")});
  const SDESystem sys = foliated_bm(f, 2);
  const Point p = torus_pt(0.2, 0.9);
  EXPECT_LE((sys.family.fields[0].eval(p).coords - make_vec({1, 0})).norm(), 1e-12);
  EXPECT_LE((sys.family.fields[1].eval(p).coords - make_vec({0, 1})).norm(), 1e-12);
  const ScalarField g = ScalarField::torus_trig(1, 1, Trig::Cos);
  // 1/2 (dxx + dyy) cos(2 pi (x + y)) = -4 pi^2 cos(2 pi (x + y)).
  EXPECT_NEAR(generator_apply(sys, g, p), -4 * std::numbers::pi * std::numbers::pi * std::cos(kTwoPi * 1.1), 1e-4);
}

TEST(FoliatedBm, NonCompactRejected) {
  FieldFamily f(ManifoldId::sl2(), std::nullopt, {VectorField::sl2_left_invariant(Eigen::Matrix2d::Identity())});
  EXPECT_THROW((void)foliated_bm(f, 1), Error);
  EXPECT_THROW((void)brownian_motion(ManifoldId::sl2()), Error);
}

}  // namespace
}  // namespace stochctl

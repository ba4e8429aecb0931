#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stochctl/lie.hpp"
#include "stochctl/scalar_field.hpp"
#include "stochctl/torus_expr.hpp"
#include "stochctl/vector_field.hpp"

namespace stochctl {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point torus_pt(double x, double y) { return Point(ManifoldId::torus2(), make_vec({x, y})); }

// ---------------------------------------------------------------------------
// Parser

TEST(TorusExprParse, ConstantField) {
  const TorusExpr e = parse_torus_expr("1*dx + 0.5*dy");
  ASSERT_EQ(e.terms.size(), 2u);
  const Vec v = e.evaluate(make_vec({0.3, 0.8}));
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.5);
}

TEST(TorusExprParse, TrigWithoutCoefficient) {
  const TorusExpr e = parse_torus_expr("sin(1,0)*dy");
  ASSERT_EQ(e.terms.size(), 1u);
  EXPECT_EQ(e.terms[0].coeff, 1.0);
  const Vec v = e.evaluate(make_vec({0.125, 0.0}));
  EXPECT_EQ(v[0], 0.0);
  EXPECT_NEAR(v[1], std::sin(kTwoPi * 0.125), 1e-15);
}

TEST(TorusExprParse, WhitespaceAndSigns) {
  const TorusExpr e = parse_torus_expr("  2.5 * cos( -1 , 2 ) * dx-1e-1*dy + -3*dy ");
  const Vec x = make_vec({0.1, 0.2});
  const Vec v = e.evaluate(x);
  EXPECT_NEAR(v[0], 2.5 * std::cos(kTwoPi * (-0.1 + 0.4)), 1e-14);
  EXPECT_NEAR(v[1], -0.1 - 3.0, 1e-15);
}

TEST(TorusExprParse, ErrorsReportPositionAndExpectation) {
  struct Case {
    const char* src;
    std::size_t pos;
    const char* expected;
  };
  const Case cases[] = {
      {"1*dz", 2, "coefficient, 'sin', 'cos', 'dx' or 'dy'"},
      {"1*dx +", 6, "coefficient, 'sin', 'cos', 'dx' or 'dy'"},
      {"sin(1)*dx", 5, "','"},
      {"sin(1,a)*dx", 6, "integer"},
      {"1*dx 2*dy", 5, "'+', '-' or end of input"},
      {"1 dx", 2, "'*'"},
      {"sin(1,0)*tan", 9, "'dx' or 'dy'"},
      {"", 0, "coefficient, 'sin', 'cos', 'dx' or 'dy'"},
  };
  for (const auto& c : cases) {
    try {
      (void)parse_torus_expr(c.src);
      ADD_FAILURE() << "accepted: " << c.src;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
      EXPECT_EQ(e.position(), c.pos) << c.src;
      EXPECT_EQ(e.expected(), c.expected) << c.src;
    }
  }
}

TEST(TorusExprParse, FieldConstructionSurfacesParseErrors) {
  EXPECT_THROW((void)VectorField::torus("1*dq"), ParseError);
}

// ---------------------------------------------------------------------------
// Scalar fields

TEST(ScalarField, ValuesAndAnalyticGradients) {
  RandomStream rng(31);
  const std::vector<ScalarField> fns = {ScalarField::torus_trig(2, -1, Trig::Sin),
                                        ScalarField::torus_trig(0, 3, Trig::Cos)};
  for (const auto& f : fns) {
    for (int k = 0; k < 20; ++k) {
      const Vec x = make_vec({rng.uniform(), rng.uniform()});
      const Vec g = f.gradient(x);
      for (int i = 0; i < 2; ++i) {
        Vec xp = x;
        Vec xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        EXPECT_NEAR(g[i], (f.value(xp) - f.value(xm)) / 2e-6, 1e-6 * 40);
      }
    }
  }
  const ScalarField mono = ScalarField::monomial({1, 0, 2});
  const Vec x = make_vec({0.3, -0.4, 0.5});
  EXPECT_DOUBLE_EQ(mono.value(x), 0.3 * 0.25);
  const Vec g = mono.gradient(x);
  EXPECT_DOUBLE_EQ(g[0], 0.25);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  EXPECT_DOUBLE_EQ(g[2], 2 * 0.3 * 0.5);
  const ScalarField w = one_minus_x1_squared();
  EXPECT_DOUBLE_EQ(w.value(x), 1 - 0.09);
  EXPECT_DOUBLE_EQ(w.gradient(x)[0], -0.6);
}

TEST(ScalarField, Batteries) {
  EXPECT_EQ(torus_battery(3).size(), 48u);
  EXPECT_EQ(torus_battery(1).size(), 8u);
  // x_i (3), x_i x_j (6), 1 - x1^2.
  EXPECT_EQ(sphere_battery(2).size(), 10u);
}

// ---------------------------------------------------------------------------
// Vector fields

TEST(VectorField, HeightGradientExamples) {
  const VectorField v = VectorField::sphere_height_gradient(2);
  const ManifoldId s2 = ManifoldId::sphere(2);
  EXPECT_EQ(v.eval(Point(s2, make_vec({1, 0, 0}))).coords, make_vec({0, 0, 0}));
  EXPECT_EQ(v.eval(Point(s2, make_vec({0, 1, 0}))).coords, make_vec({1, 0, 0}));
}

TEST(VectorField, TorusConstantEverywhere) {
  const VectorField x = VectorField::torus("1*dx + 0.5*dy");
  RandomStream rng(2);
  for (int k = 0; k < 10; ++k) {
    const Point p = random_point(ManifoldId::torus2(), rng);
    EXPECT_EQ(x.eval(p).coords, make_vec({1, 0.5}));
  }
}

TEST(VectorField, EvalIsTangentOnEveryVariant) {
  RandomStream rng(9);
  const ManifoldId s3 = ManifoldId::sphere(3);
  const Eigen::Matrix2d a = (Eigen::Matrix2d() << 0.3, -1.2, 0.7, -0.3).finished();
  for (int k = 0; k < 100; ++k) {
    const Point p = random_point(s3, rng);
    EXPECT_LE(normal_residual(p, VectorField::sphere_height_gradient(3).eval(p).coords), 1e-12);
    for (int i = 0; i < 4; ++i) {
      EXPECT_LE(normal_residual(p, VectorField::sphere_coord_projection(3, i).eval(p).coords), 1e-12);
    }
    const Point g = random_group_point(rng);
    EXPECT_LE(normal_residual(g, VectorField::sl2_left_invariant(a).eval(g).coords), 1e-9);
  }
}

TEST(VectorField, ScaledAndSum) {
  const VectorField x = VectorField::torus("1*dx");
  const VectorField y = VectorField::torus("sin(1,0)*dy");
  const VectorField s = x.scaled(2.0) + y;
  const Point p = torus_pt(0.25, 0.1);
  const Vec v = s.eval(p).coords;
  EXPECT_DOUBLE_EQ(v[0], 2.0);
  EXPECT_NEAR(v[1], 1.0, 1e-15);
  EXPECT_THROW((void)(x + VectorField::sphere_height_gradient(2)), Error);
}

TEST(FieldFamily, RejectsMixedManifolds) {
  EXPECT_THROW(FieldFamily(ManifoldId::torus2(), std::nullopt, {VectorField::sphere_height_gradient(2)}), Error);
}

// ---------------------------------------------------------------------------
// Brackets

TEST(LieBracket, ConstantFieldsCommute) {
  const Vec b = lie_bracket(VectorField::torus("1*dx"), VectorField::torus("1*dy"), torus_pt(0.3, 0.4)).coords;
  EXPECT_EQ(b, make_vec({0, 0}));
}

TEST(LieBracket, TorusSymbolicOracle) {
  // [dx, sin(2 pi x) dy] = 2 pi cos(2 pi x) dy.
  const VectorField x = VectorField::torus("1*dx");
  const VectorField y = VectorField::torus("sin(1,0)*dy");
  for (double py : {0.0, 0.37, 0.81}) {
    const Vec b = lie_bracket(x, y, torus_pt(0.0, py), 1e-4).coords;
    EXPECT_NEAR(b[0], 0.0, 1e-6);
    EXPECT_NEAR(b[1], kTwoPi, 1e-6);
  }
  RandomStream rng(4);
  for (int k = 0; k < 50; ++k) {
    const double px = rng.uniform();
    const Vec b = lie_bracket(x, y, torus_pt(px, 0.5), 1e-4).coords;
    EXPECT_NEAR(b[1], kTwoPi * std::cos(kTwoPi * px), 1e-6);
  }
}

TEST(LieBracket, ExactAntisymmetryAndBilinearity) {
  RandomStream rng(6);
  const VectorField a = VectorField::torus("cos(1,2)*dx + 0.3*dy");
  const VectorField b = VectorField::torus("sin(2,-1)*dy + sin(0,1)*dx");
  const VectorField c = VectorField::torus("cos(3,1)*dy");
  for (int k = 0; k < 50; ++k) {
    const Point p = random_point(ManifoldId::torus2(), rng);
    const Vec ab = lie_bracket(a, b, p).coords;
    EXPECT_EQ(ab, Vec(-lie_bracket(b, a, p).coords));
    const Vec lin = lie_bracket(a, b.scaled(2.0) + c.scaled(-0.5), p).coords;
    const Vec sep = 2.0 * ab - 0.5 * lie_bracket(a, c, p).coords;
    EXPECT_LE((lin - sep).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + sep.norm()));
  }
}

TEST(LieBracket, Sl2Relations) {
  const auto x = VectorField::sl2_left_invariant((Eigen::Matrix2d() << 0, 1, 0, 0).finished());
  const auto h = VectorField::sl2_left_invariant((Eigen::Matrix2d() << -0.5, 0, 0, 0.5).finished());
  const auto y = VectorField::sl2_left_invariant((Eigen::Matrix2d() << 0, 0, 0.5, 0).finished());
  RandomStream rng(10);
  for (int k = 0; k < 100; ++k) {
    const Point g = random_group_point(rng);
    EXPECT_LE((lie_bracket(x, h, g).coords - x.eval(g).coords).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LE((lie_bracket(x, y, g).coords + h.eval(g).coords).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LE((lie_bracket(h, y, g).coords - y.eval(g).coords).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(LieBracket, StepValidation) {
  const VectorField x = VectorField::torus("1*dx");
  EXPECT_THROW((void)lie_bracket(x, x, torus_pt(0, 0), 0.0), Error);
  EXPECT_THROW((void)lie_bracket(x, x, torus_pt(0, 0), 0.02), Error);
}

TEST(BracketWords, BreadthFirstOrder) {
  const auto labels = bracket_word_labels(2, 3);
  const std::vector<std::string> expect = {"X0",          "X1",          "[X0,X0]",     "[X0,X1]",
                                           "[X1,X0]",     "[X1,X1]",     "[X0,[X0,X0]]", "[X0,[X0,X1]]",
                                           "[X0,[X1,X0]]", "[X0,[X1,X1]]", "[X1,[X0,X0]]", "[X1,[X0,X1]]",
                                           "[X1,[X1,X0]]", "[X1,[X1,X1]]"};
  EXPECT_EQ(labels, expect);
}

TEST(LieAlgebraBasis, SingleConstantField) {
  FieldFamily f(ManifoldId::torus2(), std::nullopt, {VectorField::torus("1*dx")});
  const auto basis = lie_algebra_basis(f, torus_pt(0.2, 0.6), 3);
  ASSERT_EQ(basis.size(), 3u);
  EXPECT_EQ(basis[0].coords, make_vec({1, 0}));
  EXPECT_EQ(basis[1].coords, make_vec({0, 0}));
  EXPECT_EQ(basis[2].coords, make_vec({0, 0}));
}

TEST(LieAlgebraBasis, TorusBracketFamily) {
  FieldFamily f(ManifoldId::torus2(), std::nullopt,
                {VectorField::torus("1*dx"), VectorField::torus("sin(1,0)*dy")});
  const auto basis = lie_algebra_basis(f, torus_pt(0.0, 0.3), 2);
  ASSERT_EQ(basis.size(), 6u);
  const auto near = [](const Vec& v, double a, double b) {
    return std::abs(v[0] - a) < 1e-6 && std::abs(v[1] - b) < 1e-6;
  };
  EXPECT_TRUE(near(basis[0].coords, 1, 0));
  EXPECT_TRUE(near(basis[1].coords, 0, 0));
  EXPECT_TRUE(near(basis[3].coords, 0, kTwoPi));   // [dx, sin dy]
  EXPECT_TRUE(near(basis[4].coords, 0, -kTwoPi));  // [sin dy, dx]
}

TEST(LieAlgebraBasis, Sl2SubalgebraSpan) {
  const auto x = VectorField::sl2_left_invariant((Eigen::Matrix2d() << 0, 1, 0, 0).finished());
  const auto h = VectorField::sl2_left_invariant((Eigen::Matrix2d() << -0.5, 0, 0, 0.5).finished());
  FieldFamily f(ManifoldId::sl2(), std::nullopt, {x, h});
  RandomStream rng(3);
  for (int k = 0; k < 20; ++k) {
    const Point g = random_group_point(rng);
    EXPECT_EQ(distribution_rank(f, g, 2), 2);
    EXPECT_EQ(distribution_rank(f, g, 1), 2);
  }
}

TEST(DistributionRank, Examples) {
  const ManifoldId t = ManifoldId::torus2();
  FieldFamily single(t, std::nullopt, {VectorField::torus("1*dx")});
  FieldFamily pair(t, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("1*dy")});
  FieldFamily brk(t, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("sin(1,0)*dy")});
  for (int depth = 1; depth <= 3; ++depth) EXPECT_EQ(distribution_rank(single, torus_pt(0.4, 0.1), depth), 1);
  EXPECT_EQ(distribution_rank(brk, torus_pt(0.0, 0.7), 1), 1);
  EXPECT_EQ(distribution_rank(brk, torus_pt(0.0, 0.7), 2), 2);
  RandomStream rng(1);
  for (int k = 0; k < 50; ++k) EXPECT_EQ(distribution_rank(pair, random_point(t, rng), 2), 2);
  FieldFamily zero(t, std::nullopt, {VectorField::zero(t)});
  EXPECT_EQ(distribution_rank(zero, torus_pt(0.1, 0.1), 3), 0);
}

TEST(DistributionRank, InvariantUnderPositiveScaling) {
  RandomStream rng(77);
  const VectorField a = VectorField::torus("1*dx");
  const VectorField b = VectorField::torus("sin(1,0)*dy");
  for (int k = 0; k < 100; ++k) {
    const Point p = random_point(ManifoldId::torus2(), rng);
    FieldFamily base(ManifoldId::torus2(), std::nullopt, {a, b});
    FieldFamily scaled(ManifoldId::torus2(), std::nullopt,
                       {a.scaled(rng.uniform(0.01, 100.0)), b.scaled(rng.uniform(0.01, 100.0))});
    EXPECT_EQ(distribution_rank(base, p, 2), distribution_rank(scaled, p, 2));
  }
}

TEST(KrenerRankTest, Examples) {
  const ManifoldId t = ManifoldId::torus2();
  RandomStream rng(1);
  FieldFamily pair(t, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("1*dy")});
  const RankReport r1 = krener_rank_test(pair, 100, 3, rng);
  EXPECT_EQ(r1.min_rank, 2);
  EXPECT_EQ(r1.max_rank, 2);
  EXPECT_TRUE(r1.full_rank_everywhere);
  EXPECT_EQ(r1.ranks.size(), 100u);

  FieldFamily brk(t, std::nullopt, {VectorField::torus("1*dx"), VectorField::torus("sin(1,0)*dy")});
  const RankReport r2 = krener_rank_test(brk, 1000, 2, rng);
  EXPECT_EQ(r2.min_rank, 2);
  EXPECT_TRUE(r2.full_rank_everywhere);

  FieldFamily line(t, std::nullopt, {VectorField::torus("1*dx + 0.5*dy")});
  const RankReport r3 = krener_rank_test(line, 100, 3, rng);
  EXPECT_EQ(r3.min_rank, 1);
  EXPECT_EQ(r3.max_rank, 1);
  EXPECT_FALSE(r3.full_rank_everywhere);

  FieldFamily sl(ManifoldId::sl2(), std::nullopt,
                 {VectorField::sl2_left_invariant(Eigen::Matrix2d::Identity() * 0.0)});
  EXPECT_THROW((void)krener_rank_test(sl, 10, 2, rng), Error);
}

// ---------------------------------------------------------------------------
// Foliated frame

FieldFamily sphere_full_family() {
  std::vector<VectorField> fs;
  for (int i = 0; i < 3; ++i) fs.push_back(VectorField::sphere_coord_projection(2, i));
  return FieldFamily(ManifoldId::sphere(2), std::nullopt, std::move(fs));
}

TEST(FoliatedFrame, SphereFullRankIsTangentProjection) {
  const FieldFamily frame = foliated_frame(sphere_full_family(), 2);
  ASSERT_EQ(frame.fields.size(), 3u);
  EXPECT_FALSE(frame.drift.has_value());
  RandomStream rng(5);
  for (int k = 0; k < 20; ++k) {
    const Point p = random_point(ManifoldId::sphere(2), rng);
    for (int i = 0; i < 3; ++i) {
      Vec expect = -p[i] * p.coords();
      expect[i] += 1.0;
      EXPECT_LE((frame.fields[i].eval(p).coords - expect).norm(), 1e-10);
    }
  }
}

TEST(FoliatedFrame, SpherePole) {
  const FieldFamily frame = foliated_frame(sphere_full_family(), 1);
  const Point e1(ManifoldId::sphere(2), make_vec({1, 0, 0}));
  EXPECT_LE(frame.fields[0].eval(e1).coords.norm(), 1e-12);
  EXPECT_LE((frame.fields[1].eval(e1).coords - make_vec({0, 1, 0})).norm(), 1e-12);
  EXPECT_LE((frame.fields[2].eval(e1).coords - make_vec({0, 0, 1})).norm(), 1e-12);
}

TEST(FoliatedFrame, TorusLineProjection) {
  const double a = 0.5;
  FieldFamily line(ManifoldId::torus2(), std::nullopt, {VectorField::torus("1*dx + 0.5*dy")});
  const FieldFamily frame = foliated_frame(line, 3);
  const Point p = torus_pt(0.3, 0.6);
  const Vec f0 = frame.fields[0].eval(p).coords;
  const Vec f1 = frame.fields[1].eval(p).coords;
  const double d = 1 + a * a;
  EXPECT_NEAR(f0[0], 1 / d, 1e-12);
  EXPECT_NEAR(f0[1], a / d, 1e-12);
  EXPECT_NEAR(f1[0], a / d, 1e-12);
  EXPECT_NEAR(f1[1], a * a / d, 1e-12);
}

TEST(FoliatedFrame, GradientIdentity) {
  // sum_i (X_i f) X_i = Pi_D grad f and sum_i (X_i f)^2 = |Pi_D grad f|^2.
  const FieldFamily frame = foliated_frame(sphere_full_family(), 2);
  const std::vector<ScalarField> fns = {ScalarField::coordinate(0), ScalarField::monomial({0, 1, 1}),
                                        ScalarField::monomial({2, 0, 0})};
  RandomStream rng(23);
  for (int k = 0; k < 100; ++k) {
    const Point p = random_point(ManifoldId::sphere(2), rng);
    for (const auto& f : fns) {
      const Vec grad = f.gradient(p.coords());
      const Vec proj = tangent_project(ManifoldId::sphere(2), p, grad).coords;
      Vec sum = Vec::Zero(3);
      double sq = 0.0;
      for (const auto& x : frame.fields) {
        const Vec xi = x.eval(p).coords;
        const double xf = f.directional(p.coords(), xi);
        sum += xf * xi;
        sq += xf * xf;
      }
      EXPECT_LE((sum - proj).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_NEAR(sq, proj.squaredNorm(), 1e-10);
    }
  }
}

}  // namespace
}  // namespace stochctl

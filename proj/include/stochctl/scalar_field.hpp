// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stochctl/manifold.hpp"

namespace stochctl {

enum class Trig { Sin, Cos };

inline double apply_trig(Trig t, double theta) { return t == Trig::Sin ? std::sin(theta) : std::cos(theta); }
inline double apply_trig_derivative(Trig t, double theta) {
  return t == Trig::Sin ? std::cos(theta) : -std::sin(theta);
}

/// 2 pi (k1 x + k2 y), reduced to [-pi, pi] before scaling.
inline double torus_phase(int k1, int k2, double x, double y) {
  double turns = k1 * x + k2 * y;
  turns -= std::nearbyint(turns);
  return 2.0 * std::numbers::pi * turns;
}

/// Smooth test function with closed-form value and ambient gradient.
class ScalarField {
 public:
  struct TorusTrig {
    int k1;
    int k2;
    Trig trig;
  };
  struct Monomial {
    std::vector<int> exponents;  // one per ambient coordinate, trailing zeros optional
  };
  struct Constant {
    double c;
  };
  struct LinearCombo {
    std::vector<std::pair<double, ScalarField>> terms;
  };
  using Node = std::variant<TorusTrig, Monomial, Constant, LinearCombo>;

  /// trig(2 pi (k1 x + k2 y)) on the torus chart.
  static ScalarField torus_trig(int k1, int k2, Trig trig) { return ScalarField(TorusTrig{k1, k2, trig}); }
  static ScalarField monomial(std::vector<int> exponents) { return ScalarField(Monomial{std::move(exponents)}); }
  /// x_i, zero-based.
  static ScalarField coordinate(int i) {
    std::vector<int> e(static_cast<std::size_t>(i) + 1, 0);
    e.back() = 1;
    return monomial(std::move(e));
  }
  static ScalarField constant(double c) { return ScalarField(Constant{c}); }
  static ScalarField combo(std::vector<std::pair<double, ScalarField>> terms) {
    return ScalarField(LinearCombo{std::move(terms)});
  }

  double value(const Vec& x) const {
    return std::visit([&](const auto& n) { return value_of(n, x); }, *node_);
  }

  Vec gradient(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    std::visit([&](const auto& n) { add_gradient(n, x, 1.0, g); }, *node_);
    return g;
  }

  /// (X f)(x) = <grad f(x), v> for a tangent vector v at x.
  double directional(const Vec& x, const Vec& v) const { return gradient(x).dot(v); }

  std::string describe() const {
    return std::visit([](const auto& n) { return describe_node(n); }, *node_);
  }

  const Node& node() const { return *node_; }

 private:
  explicit ScalarField(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

  static double phase(const TorusTrig& t, const Vec& x) {
    return torus_phase(t.k1, t.k2, x[0], x[1]);
  }

  static double value_of(const TorusTrig& t, const Vec& x) { return apply_trig(t.trig, phase(t, x)); }
  static double value_of(const Monomial& m, const Vec& x) {
    double v = 1.0;
    for (std::size_t i = 0; i < m.exponents.size(); ++i) {
      for (int e = 0; e < m.exponents[i]; ++e) v *= x[static_cast<Eigen::Index>(i)];
    }
    return v;
  }
  static double value_of(const Constant& c, const Vec&) { return c.c; }
  static double value_of(const LinearCombo& l, const Vec& x) {
    double v = 0.0;
    for (const auto& [w, f] : l.terms) v += w * f.value(x);
    return v;
  }

  static void add_gradient(const TorusTrig& t, const Vec& x, double w, Vec& g) {
    const double d = w * 2.0 * std::numbers::pi * apply_trig_derivative(t.trig, phase(t, x));
    g[0] += d * t.k1;
    g[1] += d * t.k2;
  }
  static void add_gradient(const Monomial& m, const Vec& x, double w, Vec& g) {
    for (std::size_t j = 0; j < m.exponents.size(); ++j) {
      if (m.exponents[j] == 0) continue;
      double d = w * m.exponents[j];
      for (std::size_t i = 0; i < m.exponents.size(); ++i) {
        const int e = m.exponents[i] - (i == j ? 1 : 0);
        for (int k = 0; k < e; ++k) d *= x[static_cast<Eigen::Index>(i)];
      }
      g[static_cast<Eigen::Index>(j)] += d;
    }
  }
  static void add_gradient(const Constant&, const Vec&, double, Vec&) {}
  static void add_gradient(const LinearCombo& l, const Vec& x, double w, Vec& g) {
    for (const auto& [c, f] : l.terms) {
      std::visit([&](const auto& n) { add_gradient(n, x, w * c, g); }, f.node());
    }
  }

  static std::string describe_node(const TorusTrig& t) {
    return std::string(t.trig == Trig::Sin ? "sin" : "cos") + "(" + std::to_string(t.k1) + "," +
           std::to_string(t.k2) + ")";
  }
  static std::string describe_node(const Monomial& m) {
    std::string s;
    for (std::size_t i = 0; i < m.exponents.size(); ++i) {
      if (m.exponents[i] == 0) continue;
      if (!s.empty()) s += "*";
      s += "x" + std::to_string(i + 1);
      if (m.exponents[i] > 1) s += "^" + std::to_string(m.exponents[i]);
    }
    return s.empty() ? "1" : s;
  }
  static std::string describe_node(const Constant& c) {
    std::ostringstream os;
    os << c.c;
    return os.str();
  }
  static std::string describe_node(const LinearCombo& l) {
    std::ostringstream os;
    for (std::size_t i = 0; i < l.terms.size(); ++i) {
      if (i > 0) os << " + ";
      os << l.terms[i].first << "*" << l.terms[i].second.describe();
    }
    return os.str();
  }

  std::shared_ptr<const Node> node_;
};

/// Torus test functions trig(2 pi (k1 x + k2 y)) for |k1|, |k2| <= kmax,
/// sin and cos, one representative per +-k pair, constant mode excluded.
inline std::vector<ScalarField> torus_battery(int kmax = 3) {
  std::vector<ScalarField> out;
  for (int k1 = 0; k1 <= kmax; ++k1) {
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      out.push_back(ScalarField::torus_trig(k1, k2, Trig::Sin));
      out.push_back(ScalarField::torus_trig(k1, k2, Trig::Cos));
    }
  }
  return out;
}

/// f = 1 - x1^2, the height-diffusion witness.
inline ScalarField one_minus_x1_squared() {
  return ScalarField::combo({{1.0, ScalarField::constant(1.0)}, {-1.0, ScalarField::monomial({2})}});
}

/// Sphere test functions: x_i, x_i x_j (i <= j) and 1 - x1^2.
inline std::vector<ScalarField> sphere_battery(int n) {
  const int dim = n + 1;
  std::vector<ScalarField> out;
  for (int i = 0; i < dim; ++i) out.push_back(ScalarField::coordinate(i));
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      std::vector<int> e(static_cast<std::size_t>(dim), 0);
      e[static_cast<std::size_t>(i)] += 1;
      e[static_cast<std::size_t>(j)] += 1;
      out.push_back(ScalarField::monomial(std::move(e)));
    }
  }
  out.push_back(one_minus_x1_squared());
  return out;
}

}  // namespace stochctl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "stochctl/manifold.hpp"
#include "stochctl/torus_expr.hpp"

namespace stochctl {

/// Source of projected frame fields. Implemented by FoliatedFrame.
class FrameProvider {
 public:
  virtual ~FrameProvider() = default;
  /// Column i of the projector onto the distribution at x.
  virtual Vec frame_column(const Vec& x, int i) const = 0;
  virtual std::string describe() const = 0;
};

/// Immutable, cheaply copyable vector field on one manifold.
///
/// eval_ambient() works on raw coordinates and accepts points slightly off
/// the manifold (finite-difference stencils need that); it returns the
/// closed-form ambient extension of the field.
class VectorField {
 public:
  struct TorusExprField {
    TorusExpr expr;
  };
  /// V(x) = e1 - x1 x, gradient of the height x1 on S^n.
  struct SphereHeightGradient {};
  /// X_i(x) = e_i - x_i x, zero-based i.
  struct SphereCoordProjection {
    int i;
  };
  /// X_A(g) = g A with g flattened row-major.
  struct SL2LeftInvariant {
    Eigen::Matrix2d a;
  };
  struct FoliatedFrameField {
    std::shared_ptr<const FrameProvider> frame;
    int i;
  };
  struct Scaled {
    double c;
    std::shared_ptr<const VectorField> field;
  };
  struct Sum {
    std::vector<VectorField> fields;
  };
  using Node = std::variant<TorusExprField, SphereHeightGradient, SphereCoordProjection, SL2LeftInvariant,
                            FoliatedFrameField, Scaled, Sum>;

  static VectorField torus(std::string_view expr) {
    return VectorField(ManifoldId::torus2(), TorusExprField{parse_torus_expr(expr)});
  }
  static VectorField torus(TorusExpr expr) { return VectorField(ManifoldId::torus2(), TorusExprField{std::move(expr)}); }
  static VectorField sphere_height_gradient(int n) {
    return VectorField(ManifoldId::sphere(n), SphereHeightGradient{});
  }
  static VectorField sphere_coord_projection(int n, int i) {
    if (i < 0 || i > n) throw Error(ErrorCode::BadParams, "sphere coordinate index out of range");
    return VectorField(ManifoldId::sphere(n), SphereCoordProjection{i});
  }
  static VectorField sl2_left_invariant(const Eigen::Matrix2d& a) {
    return VectorField(ManifoldId::sl2(), SL2LeftInvariant{a});
  }
  static VectorField foliated(const ManifoldId& m, std::shared_ptr<const FrameProvider> frame, int i) {
    return VectorField(m, FoliatedFrameField{std::move(frame), i});
  }
  static VectorField zero(const ManifoldId& m) { return VectorField(m, Sum{}); }

  VectorField scaled(double c) const {
    return VectorField(manifold_, Scaled{c, std::make_shared<const VectorField>(*this)});
  }
  VectorField operator+(const VectorField& other) const {
    if (!(other.manifold_ == manifold_)) throw Error(ErrorCode::BadParams, "sum of fields on different manifolds");
    return VectorField(manifold_, Sum{{*this, other}});
  }

  const ManifoldId& manifold() const { return manifold_; }
  const Node& node() const { return *node_; }

  Vec eval_ambient(const Vec& x) const {
    return std::visit([&](const auto& n) { return eval_node(n, x); }, *node_);
  }

  TangentVector eval(const Point& p) const {
    if (!(p.manifold() == manifold_)) throw Error(ErrorCode::DegenerateInput, "field evaluated on another manifold");
    return {p, eval_ambient(p.coords())};
  }

  std::string describe() const {
    return std::visit([&](const auto& n) { return describe_node(n); }, *node_);
  }

 private:
  VectorField(const ManifoldId& m, Node node) : manifold_(m), node_(std::make_shared<const Node>(std::move(node))) {}

  Vec eval_node(const TorusExprField& f, const Vec& x) const { return f.expr.evaluate(x); }
  Vec eval_node(const SphereHeightGradient&, const Vec& x) const {
    Vec v = -x[0] * x;
    v[0] += 1.0;
    return v;
  }
  Vec eval_node(const SphereCoordProjection& f, const Vec& x) const {
    Vec v = -x[f.i] * x;
    v[f.i] += 1.0;
    return v;
  }
  Vec eval_node(const SL2LeftInvariant& f, const Vec& x) const {
    Eigen::Matrix2d g;
    g << x[0], x[1], x[2], x[3];
    const Eigen::Matrix2d v = g * f.a;
    return make_vec({v(0, 0), v(0, 1), v(1, 0), v(1, 1)});
  }
  Vec eval_node(const FoliatedFrameField& f, const Vec& x) const { return f.frame->frame_column(x, f.i); }
  Vec eval_node(const Scaled& f, const Vec& x) const { return f.c * f.field->eval_ambient(x); }
  Vec eval_node(const Sum& f, const Vec& x) const {
    Vec v = Vec::Zero(manifold_.ambient_dim());
    for (const auto& g : f.fields) v += g.eval_ambient(x);
    return v;
  }

  std::string describe_node(const TorusExprField& f) const { return f.expr.source; }
  std::string describe_node(const SphereHeightGradient&) const { return "height_gradient"; }
  std::string describe_node(const SphereCoordProjection& f) const {
    return "coord_projection(" + std::to_string(f.i + 1) + ")";
  }
  std::string describe_node(const SL2LeftInvariant& f) const {
    std::ostringstream os;
    os << "left_invariant[[" << f.a(0, 0) << "," << f.a(0, 1) << "],[" << f.a(1, 0) << "," << f.a(1, 1) << "]]";
    return os.str();
  }
  std::string describe_node(const FoliatedFrameField& f) const {
    return "frame(" + f.frame->describe() + ")[" + std::to_string(f.i + 1) + "]";
  }
  std::string describe_node(const Scaled& f) const {
    std::ostringstream os;
    os << f.c << "*(" << f.field->describe() << ")";
    return os.str();
  }
  std::string describe_node(const Sum& f) const {
    if (f.fields.empty()) return "0";
    std::string s;
    for (std::size_t i = 0; i < f.fields.size(); ++i) s += (i ? " + " : "") + f.fields[i].describe();
    return s;
  }

  ManifoldId manifold_;
  std::shared_ptr<const Node> node_;
};

/// F = {X0, X1, ..., Xk}: optional drift plus control / noise fields.
struct FieldFamily {
  ManifoldId manifold;
  std::optional<VectorField> drift;
  std::vector<VectorField> fields;

  FieldFamily(ManifoldId m, std::optional<VectorField> x0, std::vector<VectorField> xs)
      : manifold(m), drift(std::move(x0)), fields(std::move(xs)) {
    if (drift && !(drift->manifold() == manifold)) {
      throw Error(ErrorCode::BadParams, "drift lives on another manifold");
    }
    for (const auto& f : fields) {
      if (!(f.manifold() == manifold)) throw Error(ErrorCode::BadParams, "family member lives on another manifold");
    }
  }

  /// Drift first (when present), then the fields in order.
  std::vector<VectorField> generators() const {
    std::vector<VectorField> out;
    if (drift) out.push_back(*drift);
    out.insert(out.end(), fields.begin(), fields.end());
    return out;
  }
};

}  // namespace stochctl

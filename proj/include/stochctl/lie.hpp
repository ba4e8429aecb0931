// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "stochctl/manifold.hpp"
#include "stochctl/random.hpp"
#include "stochctl/vector_field.hpp"

namespace stochctl {

inline constexpr double kDefaultFdStep = 1e-4;
inline constexpr double kDefaultRankTol = 1e-6;
inline constexpr int kDefaultBracketDepth = 3;

inline void check_fd_step(double h) {
  if (!(h > 0.0 && h <= 1e-2)) throw Error(ErrorCode::BadParams, "finite-difference step must lie in (0, 1e-2]");
}

/// Central-difference Jacobian of the ambient extension of X at x.
inline Mat field_jacobian(const VectorField& x_field, const Vec& x, double h) {
  const auto n = x.size();
  Mat jac(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec xp = x;
    Vec xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (x_field.eval_ambient(xp) - x_field.eval_ambient(xm)) / (2.0 * h);
  }
  return jac;
}

/// [X, Y](p) = J_Y X - J_X Y with both Jacobians by central differences,
/// projected onto T_p M. Swapping the arguments negates the result exactly.
inline TangentVector lie_bracket(const VectorField& x_field, const VectorField& y_field, const Point& p,
                                 double h = kDefaultFdStep) {
  check_fd_step(h);
  if (!(x_field.manifold() == y_field.manifold()) || !(p.manifold() == x_field.manifold())) {
    throw Error(ErrorCode::BadParams, "lie_bracket: fields and point must share a manifold");
  }
  const Vec& x = p.coords();
  const Mat jx = field_jacobian(x_field, x, h);
  const Mat jy = field_jacobian(y_field, x, h);
  const Vec v = jy * x_field.eval_ambient(x) - jx * y_field.eval_ambient(x);
  return {p, tangent_project_coords(p.manifold(), x, v)};
}

/// Right-normed bracket words in breadth-first order. Level 1 is the
/// generators; level d is [X_i, w] for every generator i and every word w of
/// level d - 1, i outermost.
inline std::vector<std::string> bracket_word_labels(int generator_count, int depth) {
  std::vector<std::string> all;
  std::vector<std::string> level;
  for (int i = 0; i < generator_count; ++i) level.push_back("X" + std::to_string(i));
  all = level;
  for (int d = 2; d <= depth; ++d) {
    std::vector<std::string> next;
    for (int i = 0; i < generator_count; ++i) {
      for (const auto& w : level) next.push_back("[X" + std::to_string(i) + "," + w + "]");
    }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return all;
}

namespace detail {

inline std::size_t words_up_to(std::size_t k, int depth) {
  std::size_t total = 0;
  std::size_t level = 1;
  for (int d = 1; d <= depth; ++d) {
    level *= k;
    total += level;
  }
  return total;
}

/// Values of every bracket word of level <= depth at x. The Jacobians of
/// the level (depth - 1) words come from central differences of this same
/// function one level down.
inline std::vector<Vec> bracket_word_values(const std::vector<VectorField>& gens, const ManifoldId& m,
                                            const Vec& x, int depth, double h) {
  std::vector<Vec> values;
  values.reserve(words_up_to(gens.size(), depth));
  if (depth <= 1) {
    for (const auto& g : gens) values.push_back(g.eval_ambient(x));
    return values;
  }
  values = bracket_word_values(gens, m, x, depth - 1, h);
  const std::size_t k = gens.size();
  const std::size_t n_lower = values.size();
  const std::size_t prev_level = [&] {
    std::size_t s = 1;
    for (int d = 1; d < depth; ++d) s *= k;
    return s;
  }();
  const std::size_t prev_start = n_lower - prev_level;
  const auto n = x.size();

  // Only generators and previous-level words need Jacobians.
  std::vector<Mat> jac_gen(k, Mat(n, n));
  std::vector<Mat> jac_prev(prev_level, Mat(n, n));
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec xp = x;
    Vec xm = x;
    xp[j] += h;
    xm[j] -= h;
    const auto vp = bracket_word_values(gens, m, xp, depth - 1, h);
    const auto vm = bracket_word_values(gens, m, xm, depth - 1, h);
    for (std::size_t i = 0; i < k; ++i) jac_gen[i].col(j) = (vp[i] - vm[i]) / (2.0 * h);
    for (std::size_t w = 0; w < prev_level; ++w) {
      jac_prev[w].col(j) = (vp[prev_start + w] - vm[prev_start + w]) / (2.0 * h);
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t w = 0; w < prev_level; ++w) {
      const Vec& xi = values[i];
      const Vec& wv = values[prev_start + w];
      const Vec v = jac_prev[w] * xi - jac_gen[i] * wv;
      values.push_back(tangent_project_coords(m, x, v));
    }
  }
  return values;
}

inline Eigen::MatrixXd as_columns(const std::vector<Vec>& vs, Eigen::Index rows) {
  Eigen::MatrixXd b(rows, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t c = 0; c < vs.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = vs[c];
  return b;
}

inline int numerical_rank(const Eigen::VectorXd& singular_values, double tol_rel) {
  if (singular_values.size() == 0) return 0;
  const double smax = singular_values.maxCoeff();
  if (!(smax > 0.0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values[i] > tol_rel * smax) ++r;
  }
  return r;
}

}  // namespace detail

/// Every field of F (drift first) evaluated at p plus all iterated brackets
/// up to `depth`, in the order given by bracket_word_labels().
inline std::vector<TangentVector> lie_algebra_basis(const FieldFamily& family, const Point& p,
                                                    int depth = kDefaultBracketDepth,
                                                    double h = kDefaultFdStep) {
  if (depth < 1) throw Error(ErrorCode::BadParams, "bracket depth must be >= 1");
  check_fd_step(h);
  if (!(p.manifold() == family.manifold)) throw Error(ErrorCode::BadParams, "point on another manifold");
  const auto values = detail::bracket_word_values(family.generators(), family.manifold, p.coords(), depth, h);
  std::vector<TangentVector> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back({p, v});
  return out;
}

/// Number of singular values of the bracket matrix above tol_rel * sigma_max.
inline int distribution_rank(const FieldFamily& family, const Point& p, int depth = kDefaultBracketDepth,
                             double tol_rel = kDefaultRankTol, double h = kDefaultFdStep) {
  if (depth < 1) throw Error(ErrorCode::BadParams, "bracket depth must be >= 1");
  check_fd_step(h);
  const auto gens = family.generators();
  if (gens.empty()) return 0;
  const auto values = detail::bracket_word_values(gens, family.manifold, p.coords(), depth, h);
  const Eigen::MatrixXd b = detail::as_columns(values, family.manifold.ambient_dim());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  return detail::numerical_rank(svd.singularValues(), tol_rel);
}

struct RankReport {
  int samples = 0;
  int depth = 0;
  int min_rank = 0;
  int max_rank = 0;
  bool full_rank_everywhere = false;
  std::vector<int> ranks;
  std::vector<Point> points;
};

/// Lie-algebra rank at `samples` uniform random points of a compact manifold.
inline RankReport krener_rank_test(const FieldFamily& family, int samples, int depth, RandomStream& rng,
                                   double tol_rel = kDefaultRankTol, double h = kDefaultFdStep) {
  require_compact(family.manifold, "krener_rank_test");
  if (samples < 1) throw Error(ErrorCode::BadParams, "samples must be >= 1");
  RankReport report;
  report.samples = samples;
  report.depth = depth;
  report.min_rank = family.manifold.dim();
  report.max_rank = 0;
  for (int s = 0; s < samples; ++s) {
    Point p = random_point(family.manifold, rng);
    const int r = distribution_rank(family, p, depth, tol_rel, h);
    report.ranks.push_back(r);
    report.points.push_back(std::move(p));
    report.min_rank = std::min(report.min_rank, r);
    report.max_rank = std::max(report.max_rank, r);
  }
  report.full_rank_everywhere = report.min_rank == family.manifold.dim();
  return report;
}

// ---------------------------------------------------------------------------
// Foliated frame.

struct FrameEvaluation {
  Mat projector;  // orthogonal projector onto D_Lie(F)(x), ambient coordinates
  int rank = 0;
};

/// Projections of the ambient coordinate fields e_1..e_N onto the
/// distribution spanned by the Lie algebra of F. With P the projector,
/// field i is P e_i, so sum_i X_i X_i^T = P P^T = P and
/// sum_i (X_i f) X_i = P grad f.
class FoliatedFrame final : public FrameProvider {
 public:
  FoliatedFrame(FieldFamily family, int depth, double h = kDefaultFdStep, double tol_rel = kDefaultRankTol)
      : family_(std::move(family)), gens_(family_.generators()), depth_(depth), h_(h), tol_rel_(tol_rel) {
    if (depth < 1) throw Error(ErrorCode::BadParams, "bracket depth must be >= 1");
    check_fd_step(h);
  }

  FrameEvaluation evaluate(const Vec& x) const {
    const auto n = x.size();
    FrameEvaluation out{Mat::Zero(n, n), 0};
    if (gens_.empty()) return out;
    const auto values = detail::bracket_word_values(gens_, family_.manifold, x, depth_, h_);
    const Eigen::MatrixXd b = detail::as_columns(values, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
    out.rank = detail::numerical_rank(svd.singularValues(), tol_rel_);
    if (out.rank == 0) return out;
    const Eigen::MatrixXd u = svd.matrixU().leftCols(out.rank);
    out.projector = u * u.transpose();
    return out;
  }

  Vec frame_column(const Vec& x, int i) const override { return evaluate(x).projector.col(i); }

  std::string describe() const override {
    std::string s;
    for (std::size_t i = 0; i < gens_.size(); ++i) s += (i ? "; " : "") + gens_[i].describe();
    return s + " | depth " + std::to_string(depth_);
  }

  const FieldFamily& family() const { return family_; }
  const ManifoldId& manifold() const { return family_.manifold; }
  int depth() const { return depth_; }

 private:
  FieldFamily family_;
  std::vector<VectorField> gens_;
  int depth_;
  double h_;
  double tol_rel_;
};

inline std::shared_ptr<const FoliatedFrame> make_foliated_frame(const FieldFamily& family, int depth,
                                                                double h = kDefaultFdStep,
                                                                double tol_rel = kDefaultRankTol) {
  return std::make_shared<const FoliatedFrame>(family, depth, h, tol_rel);
}

/// N frame fields (N = ambient dimension) with zero drift.
inline FieldFamily foliated_frame(const std::shared_ptr<const FoliatedFrame>& frame) {
  const ManifoldId m = frame->manifold();
  std::vector<VectorField> fields;
  for (int i = 0; i < m.ambient_dim(); ++i) fields.push_back(VectorField::foliated(m, frame, i));
  return FieldFamily(m, std::nullopt, std::move(fields));
}

inline FieldFamily foliated_frame(const FieldFamily& family, int depth) {
  return foliated_frame(make_foliated_frame(family, depth));
}

}  // namespace stochctl

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lcoco/errors.hpp"
#include "lcoco/quadratic.hpp"

namespace lcoco {

/// The compact convex action set. An axis-aligned ellipsoid
/// {x : sum_i ((x_i - c_i) / s_i)^2 <= 1}; a ball is the case of equal semi-axes.
class AmbientSet {
 public:
  static AmbientSet ball(Point center, double radius) {
    Vector axes = Vector::Constant(center.size(), radius);
    return AmbientSet(std::move(center), std::move(axes));
  }

  static AmbientSet ellipsoid(Point center, Vector semi_axes) {
    return AmbientSet(std::move(center), std::move(semi_axes));
  }

  Eigen::Index dim() const noexcept { return center_.size(); }
  const Point& center() const noexcept { return center_; }
  const Vector& semi_axes() const noexcept { return semi_axes_; }

  bool is_ball() const noexcept {
    return semi_axes_.maxCoeff() == semi_axes_.minCoeff();
  }

  /// Radius of the smallest centered ball containing the set.
  double radius() const noexcept { return semi_axes_.maxCoeff(); }
  double diameter() const noexcept { return 2.0 * radius(); }

  /// Scaled distance: <= 1 on the set, == 1 on its boundary.
  double gauge(const Point& x) const {
    require_dim(dim(), x.size(), "AmbientSet");
    return (x - center_).cwiseQuotient(semi_axes_).norm();
  }

  bool contains(const Point& x, double tol = 0.0) const {
    if (is_ball()) return (x - center_).norm() <= radius() + tol;
    return gauge(x) <= 1.0 + tol / semi_axes_.minCoeff();
  }

  /// 1/2 (x - c)^T diag(1/s^2) (x - c) - 1/2, nonpositive exactly on the set.
  QuadraticFunction as_constraint() const {
    Matrix h = semi_axes_.cwiseProduct(semi_axes_).cwiseInverse().asDiagonal();
    return QuadraticFunction(std::move(h), center_, -0.5);
  }

 private:
  AmbientSet(Point center, Vector semi_axes)
      : center_(std::move(center)), semi_axes_(std::move(semi_axes)) {
    if (center_.size() < 1) throw StructuralError("AmbientSet: dimension must be >= 1");
    require_dim(center_.size(), semi_axes_.size(), "AmbientSet semi-axes");
    if (!center_.allFinite() || !semi_axes_.allFinite() || !(semi_axes_.minCoeff() > 0.0)) {
      throw UsageError("AmbientSet: semi-axes must be finite and positive");
    }
  }

  Point center_;
  Vector semi_axes_;
};

/// Loss f_t and constraint g_t for one slot. The feasible set is {x in ambient : g(x) <= 0}.
struct RoundPair {
  QuadraticFunction f;
  QuadraticFunction g;

  RoundPair(QuadraticFunction loss, QuadraticFunction constraint)
      : f(std::move(loss)), g(std::move(constraint)) {
    require_dim(f.dim(), g.dim(), "RoundPair");
    // g(center_g) = offset_g is the minimum of g, so the sublevel set has interior.
    if (!(g.offset() < 0.0)) {
      throw UsageError("RoundPair: constraint offset must be negative (empty or degenerate feasible set)");
    }
  }

  Eigen::Index dim() const noexcept { return f.dim(); }
};

/// Problem constants consumed by the online algorithm and the contraction bounds.
struct ConstantsBundle {
  double nu_f = 0.0;   // strong convexity of f_t
  double nu_g = 0.0;   // strong convexity of g_t
  double L_f = 0.0;    // gradient-Lipschitz modulus of f_t
  double L_g = 0.0;    // gradient-Lipschitz modulus of g_t
  double lip_f = 0.0;  // Lipschitz modulus of f_t over the ambient set
  double lip_g = 0.0;  // Lipschitz modulus of g_t over the ambient set
  double G = 0.0;      // bound on gradient norms over the ambient set
  double D = 0.0;      // diameter of the ambient set
  double dist = 0.0;   // radius of the revealed local window
  double alpha = 0.5;  // step-mixing constant

  void validate() const {
    const double vals[] = {nu_f, nu_g, L_f, L_g, lip_f, lip_g, G, D, dist, alpha};
    for (double v : vals) {
      if (!std::isfinite(v)) throw UsageError("ConstantsBundle: non-finite constant");
    }
    if (!(nu_f > 0.0) || !(nu_g > 0.0)) throw UsageError("ConstantsBundle: nu_f, nu_g must be > 0");
    constexpr double rel = 1e-12;
    if (nu_f > L_f * (1.0 + rel)) throw UsageError("ConstantsBundle: nu_f > L_f");
    if (nu_g > L_g * (1.0 + rel)) throw UsageError("ConstantsBundle: nu_g > L_g");
    if (!(lip_f > 0.0) || !(lip_g > 0.0) || !(G > 0.0)) {
      throw UsageError("ConstantsBundle: Lipschitz constants and G must be > 0");
    }
    if (!(D > 0.0)) throw UsageError("ConstantsBundle: D must be > 0");
    if (!(dist > 0.0)) throw UsageError("ConstantsBundle: dist must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("ConstantsBundle: alpha must lie in (0, 1]");
  }
};

/// sup over the ambient set of ||H (x - c)||, the exact gradient-norm bound of h.
///
/// Writing x = c_amb + S u with ||u|| <= 1 turns this into maximizing the convex
/// quadratic ||M u + b||^2 (M = H S, b = H (c_amb - c)) over the unit ball. The
/// maximizer lies on the sphere and satisfies (theta I - M^T M) u = M^T b with
/// theta >= lambda_max(M^T M); theta is found by bisection on the secular equation.
inline double sup_gradient_norm(const QuadraticFunction& h, const AmbientSet& ambient) {
  require_dim(h.dim(), ambient.dim(), "sup_gradient_norm");
  const Matrix m = h.hessian() * ambient.semi_axes().asDiagonal();
  const Vector b = h.hessian() * (ambient.center() - h.center());
  const Matrix a = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector ev = eig.eigenvalues();
  const Matrix vecs = eig.eigenvectors();
  const Vector w = vecs.transpose() * (m.transpose() * b);
  const auto n = ev.size();
  const double top = ev(n - 1);
  const double group_tol = 1e-12 * std::max(1.0, top);

  auto in_top = [&](Eigen::Index i) { return ev(i) >= top - group_tol; };
  double top_weight = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (in_top(i)) top_weight += w(i) * w(i);
  }
  const double wnorm = w.norm();

  // psi(theta) = sum w_i^2 / (theta - ev_i)^2, decreasing on theta > top.
  auto psi = [&](double theta, bool skip_top) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (skip_top && in_top(i)) continue;
      const double d = theta - ev(i);
      s += w(i) * w(i) / (d * d);
    }
    return s;
  };
  auto solve_secular = [&](bool skip_top) {
    double lo = top;
    double hi = top + std::max(wnorm, 1e-300);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (psi(mid, skip_top) > 1.0) lo = mid; else hi = mid;
    }
    return hi;
  };

  Vector u_eig = Vector::Zero(n);
  const bool hard_case = top_weight <= 1e-28 * std::max(1.0, wnorm * wnorm);
  if (!hard_case) {
    const double theta = solve_secular(false);
    for (Eigen::Index i = 0; i < n; ++i) u_eig(i) = w(i) / (theta - ev(i));
  } else {
    double partial = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_top(i)) continue;
      u_eig(i) = w(i) / (top - ev(i));
      partial += u_eig(i) * u_eig(i);
    }
    if (partial <= 1.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (in_top(i)) {
          u_eig(i) = std::sqrt(1.0 - partial);
          break;
        }
      }
    } else {
      const double theta = solve_secular(true);
      for (Eigen::Index i = 0; i < n; ++i) u_eig(i) = in_top(i) ? 0.0 : w(i) / (theta - ev(i));
    }
  }
  const Vector u = vecs * u_eig;
  const double value2 = (m * u + b).squaredNorm();
  // Guard against an ill-conditioned secular solve: the two axis-extreme points
  // along the top eigenvector are always admissible.
  const Vector v_top = vecs.col(n - 1);
  const double alt = std::max((m * v_top + b).squaredNorm(), (-m * v_top + b).squaredNorm());
  return std::sqrt(std::max(value2, alt));
}

/// Constants for a whole sequence: moduli aggregated by min/max over rounds,
/// Lipschitz constants and G from the exact gradient supremum over the ambient set.
inline ConstantsBundle derive_constants(std::span<const RoundPair> seq, const AmbientSet& ambient,
                                        double dist, double alpha) {
  if (seq.empty()) throw UsageError("derive_constants: empty sequence");
  ConstantsBundle k;
  k.nu_f = std::numeric_limits<double>::infinity();
  k.nu_g = std::numeric_limits<double>::infinity();
  for (const auto& r : seq) {
    require_dim(ambient.dim(), r.dim(), "derive_constants");
    k.nu_f = std::min(k.nu_f, r.f.strong_convexity());
    k.nu_g = std::min(k.nu_g, r.g.strong_convexity());
    k.L_f = std::max(k.L_f, r.f.smoothness());
    k.L_g = std::max(k.L_g, r.g.smoothness());
    k.lip_f = std::max(k.lip_f, sup_gradient_norm(r.f, ambient));
    k.lip_g = std::max(k.lip_g, sup_gradient_norm(r.g, ambient));
  }
  k.G = std::max(k.lip_f, k.lip_g);
  k.D = ambient.diameter();
  k.dist = dist;
  k.alpha = alpha;
  k.validate();
  return k;
}

}  // namespace lcoco

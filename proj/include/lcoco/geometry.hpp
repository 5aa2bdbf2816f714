#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lcoco/errors.hpp"
#include "lcoco/model.hpp"
#include "lcoco/qcqp.hpp"
#include "lcoco/quadratic.hpp"

namespace lcoco {

struct GeometryTolerances {
  double dykstra_move = 1e-10;     // stop when a full Dykstra sweep moves less than this
  int dykstra_max_iter = 10000;
  double min_ball_move = 1e-12;    // projected-gradient stopping displacement
  int min_ball_max_iter = 1000000;
  double feasibility = 1e-12;      // window is empty iff min_{ball} g > feasibility
  bool polish = true;              // refine Dykstra output with the dual KKT solve
};

struct BallSet {
  Point center;
  double radius;

  BallSet(Point c, double r) : center(std::move(c)), radius(r) {
    if (!std::isfinite(radius) || !(radius > 0.0)) {
      throw UsageError("BallSet: radius must be finite and positive");
    }
    require_finite(center, "BallSet");
  }
};

/// {x : g(x) <= 0}.
struct SublevelSet {
  QuadraticFunction g;

  explicit SublevelSet(QuadraticFunction fn) : g(std::move(fn)) {}
  bool empty() const noexcept { return g.offset() > 0.0; }
};

using ConvexPart = std::variant<BallSet, SublevelSet>;

struct IntersectionSet {
  std::vector<ConvexPart> parts;
};

inline ConvexPart as_part(const AmbientSet& ambient) {
  if (ambient.is_ball()) return BallSet(ambient.center(), ambient.radius());
  return SublevelSet(ambient.as_constraint());
}

inline QuadraticFunction as_constraint(const ConvexPart& part) {
  return std::visit(
      [](const auto& p) -> QuadraticFunction {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BallSet>) {
          return QuadraticFunction::ball(p.center, p.radius);
        } else {
          return p.g;
        }
      },
      part);
}

inline Eigen::Index part_dim(const ConvexPart& part) {
  return std::visit(
      [](const auto& p) -> Eigen::Index {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BallSet>) return p.center.size();
        else return p.g.dim();
      },
      part);
}

inline bool contains(const BallSet& b, const Point& x, double tol = 0.0) {
  require_dim(b.center.size(), x.size(), "contains");
  return (x - b.center).norm() <= b.radius + tol;
}

inline bool contains(const SublevelSet& s, const Point& x, double tol = 0.0) {
  return s.g(x) <= tol;
}

inline bool contains(const ConvexPart& part, const Point& x, double tol = 0.0) {
  return std::visit([&](const auto& p) { return contains(p, x, tol); }, part);
}

inline bool contains(const IntersectionSet& s, const Point& x, double tol = 0.0) {
  return std::all_of(s.parts.begin(), s.parts.end(),
                     [&](const ConvexPart& p) { return contains(p, x, tol); });
}

inline Point project_ball(const Point& y, const BallSet& ball) {
  require_dim(ball.center.size(), y.size(), "project_ball");
  const Vector d = y - ball.center;
  const double r = d.norm();
  if (r <= ball.radius) return y;
  return ball.center + (ball.radius / r) * d;
}

/// Nearest point of {g <= 0}. With H = V diag(w) V^T and z = V^T (y - c), the
/// candidate for multiplier l is x(l) = c + V diag(1 / (1 + l w)) z and
/// phi(l) = g(x(l)) is convex and decreasing; its root is bracketed by doubling
/// and found by Newton steps safeguarded with bisection.
inline Point project_sublevel(const Point& y, const SublevelSet& s) {
  const auto& g = s.g;
  require_dim(g.dim(), y.size(), "project_sublevel");
  if (s.empty()) throw InfeasibleSetError("project_sublevel: empty sublevel set");
  if (g(y) <= 0.0) return y;
  if (g.offset() == 0.0) return g.center();

  const Vector& w = g.eigenvalues();
  const Matrix& v = g.eigenvectors();
  const Vector z = v.transpose() * (y - g.center());
  auto point_at = [&](double l) -> Point {
    return g.center() + v * z.cwiseQuotient((Vector::Ones(z.size()) + l * w));
  };
  auto phi = [&](double l) {
    const Vector den = Vector::Ones(z.size()) + l * w;
    return 0.5 * (w.array() * z.array().square() / den.array().square()).sum() + g.offset();
  };
  auto dphi = [&](double l) {
    const Vector den = Vector::Ones(z.size()) + l * w;
    return -(w.array().square() * z.array().square() / den.array().cube()).sum();
  };

  double lo = 0.0;
  double hi = 1.0 / w(w.size() - 1);
  while (phi(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("project_sublevel: bracket failed", y, phi(lo));
  }
  double l = lo;
  for (int it = 0; it < 200; ++it) {
    const double f = phi(l);
    if (f > 0.0) lo = l; else hi = l;
    if (f == 0.0 || hi - lo <= 1e-16 * std::max(1.0, hi)) break;
    const double d = dphi(l);
    double next = (d < 0.0) ? l - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == l) break;
    l = next;
  }
  // Return the feasible side of the final bracket.
  const Point x_hi = point_at(hi);
  const Point x_l = point_at(l);
  return (g(x_l) <= 0.0) ? x_l : x_hi;
}

inline Point project_part(const Point& y, const ConvexPart& part) {
  return std::visit(
      [&](const auto& p) -> Point {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BallSet>) return project_ball(y, p);
        else return project_sublevel(y, p);
      },
      part);
}

inline Point project_ambient(const Point& y, const AmbientSet& ambient) {
  return project_part(y, as_part(ambient));
}

struct DykstraResult {
  Point x;
  int iterations = 0;
  double last_move = 0.0;
  bool converged = false;
  std::vector<Vector> corrections;  // outward normal increments, one per part
};

/// Dykstra's alternating projections with correction terms; converges to the
/// nearest point of the intersection (not merely a feasible point).
inline DykstraResult dykstra_project(const Point& y, const IntersectionSet& s,
                                     const GeometryTolerances& tol = {}) {
  for (const auto& p : s.parts) require_dim(y.size(), part_dim(p), "dykstra_project");
  DykstraResult out;
  out.x = y;
  if (s.parts.empty()) {
    out.converged = true;
    return out;
  }
  std::vector<Vector> corr(s.parts.size(), Vector::Zero(y.size()));
  for (int it = 1; it <= tol.dykstra_max_iter; ++it) {
    const Point before = out.x;
    for (std::size_t i = 0; i < s.parts.size(); ++i) {
      const Point z = out.x + corr[i];
      out.x = project_part(z, s.parts[i]);
      corr[i] = z - out.x;
    }
    out.iterations = it;
    out.last_move = (out.x - before).norm();
    if (out.last_move < tol.dykstra_move) {
      out.converged = true;
      break;
    }
  }
  out.corrections = std::move(corr);
  return out;
}

/// Nearest point of an intersection of balls and sublevel sets. Dykstra supplies
/// the iterate; a dual KKT solve started from Dykstra's multiplier estimate then
/// refines it to machine precision when the constraints admit one.
inline Point project_intersection(const Point& y, const IntersectionSet& s,
                                  const GeometryTolerances& tol = {}) {
  if (contains(s, y)) return y;
  const DykstraResult dk = dykstra_project(y, s, tol);
  if (!tol.polish) {
    if (!dk.converged) {
      throw NumericalError("project_intersection: Dykstra did not converge", dk.x, dk.last_move);
    }
    return dk.x;
  }
  std::vector<QuadraticFunction> cons;
  cons.reserve(s.parts.size());
  for (const auto& p : s.parts) cons.push_back(as_constraint(p));
  // Each Dykstra correction approximates l_i * grad q_i(x).
  Vector warm(static_cast<Eigen::Index>(cons.size()));
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const Vector grad = cons[i].gradient(dk.x);
    const double g2 = grad.squaredNorm();
    warm(static_cast<Eigen::Index>(i)) =
        (i < dk.corrections.size() && g2 > 0.0) ? std::max(0.0, dk.corrections[i].dot(grad) / g2) : 0.0;
  }
  const auto n = y.size();
  const QcqpResult kkt = solve_qcqp(Matrix::Identity(n, n), y, cons, QcqpOptions{}, &warm);
  if (kkt.converged && kkt.max_violation <= 1e-12) return kkt.x;
  if (!dk.converged) {
    throw NumericalError("project_intersection: Dykstra did not converge", dk.x, dk.last_move);
  }
  return dk.x;
}

struct BallMinimum {
  Point argmin;
  double value;
  int iterations = 0;
};

/// Minimum of a strongly convex quadratic over a ball by projected gradient
/// descent with step 1 / lambda_max(H), run until the step displacement is tiny.
inline BallMinimum min_over_ball(const QuadraticFunction& g, const BallSet& ball,
                                 const GeometryTolerances& tol = {}) {
  require_dim(g.dim(), ball.center.size(), "min_over_ball");
  Point x = project_ball(g.center(), ball);
  if ((x - g.center()).norm() == 0.0) return {x, g(x), 0};
  const double step = 1.0 / g.smoothness();
  int it = 0;
  for (; it < tol.min_ball_max_iter; ++it) {
    const Point next = project_ball(x - step * g.gradient(x), ball);
    const double move = (next - x).norm();
    x = next;
    if (move < tol.min_ball_move) break;
  }
  return {x, g(x), it};
}

}  // namespace lcoco

#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <variant>

#include "lcoco/errors.hpp"
#include "lcoco/geometry.hpp"
#include "lcoco/quadratic.hpp"

namespace lcoco {

template <class F>
concept GradientMap = requires(F f, const Point& x) {
  { f(x) } -> std::convertible_to<Point>;
};

template <class P>
concept Projector = requires(P p, const Point& y) {
  { p(y) } -> std::convertible_to<Point>;
};

enum class StartPolicy {
  Repair,  // project a start point that lies outside the region
  Strict,  // reject it
};

struct OptimizeOptions {
  double alpha = 0.5;
  double membership_tol = 1e-9;
  StartPolicy start_policy = StartPolicy::Repair;
};

struct OptimizeResult {
  Point next;             // x_{t+1} = x_t + alpha (x_hat - x_t)
  Point projected;        // x_hat = Proj(x_t - grad / mu, region)
  Point start;            // x_t actually used
  bool start_repaired = false;
};

/// One damped projected-gradient step:
///   x_hat = Proj(x_t - (1/mu) grad h(x_t), I),  x_{t+1} = x_t + alpha (x_hat - x_t).
/// The caller owns mu; the contraction guarantee requires mu >= L_h.
template <GradientMap Grad, Projector Proj>
OptimizeResult optimize_step(Grad&& grad, Proj&& project, double mu, const Point& start,
                             const OptimizeOptions& opt = {}) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw UsageError("optimize_step: mu must be positive");
  if (!(opt.alpha > 0.0 && opt.alpha <= 1.0)) {
    throw UsageError("optimize_step: alpha must lie in (0, 1]");
  }
  require_finite(start, "optimize_step start");
  OptimizeResult out;
  out.start = start;
  const Point anchored = project(start);
  if ((anchored - start).norm() > opt.membership_tol) {
    if (opt.start_policy == StartPolicy::Strict) {
      throw UsageError("optimize_step: start point lies outside the region");
    }
    out.start = anchored;
    out.start_repaired = true;
  }
  const Point g = grad(out.start);
  require_dim(out.start.size(), g.size(), "optimize_step gradient");
  out.projected = project(Point(out.start - g / mu));
  out.next = out.start + opt.alpha * (out.projected - out.start);
  return out;
}

using Region = std::variant<BallSet, IntersectionSet>;

inline Point project_region(const Point& y, const Region& region,
                            const GeometryTolerances& tol = {}) {
  return std::visit(
      [&](const auto& r) -> Point {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, BallSet>) return project_ball(y, r);
        else return project_intersection(y, r, tol);
      },
      region);
}

/// Inputs of the Optimize subroutine for an explicit quadratic h.
struct OptimizeRequest {
  const QuadraticFunction& h;
  Region region;
  double mu;
  Point start;
  double alpha = 0.5;
};

struct QuadraticOptimizeResult : OptimizeResult {
  bool mu_below_smoothness = false;  // mu < L_h: the contraction guarantee does not apply
};

inline QuadraticOptimizeResult optimize_step(const OptimizeRequest& req,
                                             StartPolicy policy = StartPolicy::Repair,
                                             const GeometryTolerances& tol = {}) {
  QuadraticOptimizeResult out;
  OptimizeOptions opt;
  opt.alpha = req.alpha;
  opt.start_policy = policy;
  static_cast<OptimizeResult&>(out) = optimize_step(
      [&](const Point& x) { return req.h.gradient(x); },
      [&](const Point& y) { return project_region(y, req.region, tol); }, req.mu, req.start, opt);
  out.mu_below_smoothness = req.mu < req.h.smoothness();
  return out;
}

}  // namespace lcoco

#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <vector>

#include "lcoco/errors.hpp"
#include "lcoco/geometry.hpp"
#include "lcoco/model.hpp"
#include "lcoco/optimize.hpp"
#include "lcoco/oracle.hpp"

namespace lcoco {

enum class RoundCase {
  StrictFeasible_BigBall,
  StrictFeasible_LocalSet,
  Boundary_LocalSet,
  Infeasible_GradientStep,
  Infeasible_LocalSet,
  Infeasible_EmptyLocal,
};

inline constexpr std::array<RoundCase, 6> kAllRoundCases = {
    RoundCase::StrictFeasible_BigBall,  RoundCase::StrictFeasible_LocalSet,
    RoundCase::Boundary_LocalSet,       RoundCase::Infeasible_GradientStep,
    RoundCase::Infeasible_LocalSet,     RoundCase::Infeasible_EmptyLocal,
};

inline const char* to_string(RoundCase c) {
  switch (c) {
    case RoundCase::StrictFeasible_BigBall: return "StrictFeasible_BigBall";
    case RoundCase::StrictFeasible_LocalSet: return "StrictFeasible_LocalSet";
    case RoundCase::Boundary_LocalSet: return "Boundary_LocalSet";
    case RoundCase::Infeasible_GradientStep: return "Infeasible_GradientStep";
    case RoundCase::Infeasible_LocalSet: return "Infeasible_LocalSet";
    case RoundCase::Infeasible_EmptyLocal: return "Infeasible_EmptyLocal";
  }
  return "?";
}

inline constexpr double kBoundaryTolerance = 1e-9;

/// delta_t = |g_t(a_t)| / (2 lip_g).
inline double safe_radius(double g_at, const ConstantsBundle& k) {
  return std::abs(g_at) / (2.0 * k.lip_g);
}

inline RoundCase classify_round(double g_at, const std::optional<Point>& grad_g_at,
                                std::optional<bool> local_empty, const ConstantsBundle& k,
                                double eps_b = kBoundaryTolerance) {
  if (!std::isfinite(g_at)) throw DegenerateInputError("classify_round: non-finite g_t(a_t)");
  const double delta = safe_radius(g_at, k);
  if (g_at < -eps_b) {
    return delta >= k.dist ? RoundCase::StrictFeasible_BigBall : RoundCase::StrictFeasible_LocalSet;
  }
  if (g_at <= eps_b) return RoundCase::Boundary_LocalSet;
  if (!grad_g_at) throw ProtocolError("classify_round: infeasible round needs grad g_t(a_t)");
  if (delta >= grad_g_at->norm() / k.L_g) return RoundCase::Infeasible_GradientStep;
  if (!local_empty) throw ProtocolError("classify_round: infeasible round needs the window flag");
  return *local_empty ? RoundCase::Infeasible_EmptyLocal : RoundCase::Infeasible_LocalSet;
}

template <class W>
concept LocalWindow = requires(const W w, const Point& y, std::span<const ConvexPart> extra) {
  { w.empty() } -> std::convertible_to<bool>;
  { w.project(y, extra) } -> std::convertible_to<Point>;
};

template <class O>
concept RevealingOracle = requires(O o, const Point& x) {
  o.commit(x);
  { o.reveal_constraint_value() } -> std::convertible_to<double>;
  { o.query_gradient(GradientOf::F, x) } -> std::convertible_to<Point>;
  { o.query_local_set() } -> LocalWindow;
  { o.gradient_points_used() } -> std::convertible_to<std::size_t>;
  { o.transcript() } -> std::convertible_to<const std::vector<QueryRecord>&>;
};

struct AlgorithmState {
  int t = 1;
  Point a;
  ConstantsBundle constants;
  AmbientSet ambient;
  GeometryTolerances tol{};
};

struct RoundRecord {
  int t = 0;
  RoundCase kase = RoundCase::StrictFeasible_BigBall;
  Point a_t;
  Point a_next;
  double delta = 0.0;
  double g_at = 0.0;
  std::size_t gradient_points_used = 0;
  std::vector<QueryRecord> transcript;
  bool clamped = false;          // update left the ambient set and was projected back
  bool start_repaired = false;   // Optimize start point had to be projected into the region
  bool window_fallback = false;  // window ∩ ambient was empty; projected onto the window alone
};

namespace detail {

template <LocalWindow W>
Point project_window(const W& window, const Point& y, const ConvexPart& ambient, bool& fallback) {
  const std::array<ConvexPart, 1> extra{ambient};
  try {
    return window.project(y, std::span<const ConvexPart>(extra));
  } catch (const InfeasibleSetError&) {
    fallback = true;
    return window.project(y, std::span<const ConvexPart>{});
  }
}

}  // namespace detail

/// Plays one round: commits state.a, reads what the oracle reveals, and moves
/// the state to a_{t+1}. The oracle is the only channel to f_t and g_t.
template <RevealingOracle O>
RoundRecord advance(AlgorithmState& state, O& oracle) {
  const ConstantsBundle& k = state.constants;
  const ConvexPart ambient = as_part(state.ambient);
  const double mu = 2.0 * k.L_f;
  OptimizeOptions opt;
  opt.alpha = k.alpha;

  RoundRecord rec;
  rec.t = state.t;
  rec.a_t = state.a;
  oracle.commit(state.a);
  rec.g_at = oracle.reveal_constraint_value();
  rec.delta = safe_radius(rec.g_at, k);
  const Point& a = state.a;
  auto grad_f = [&](const Point& x) { return oracle.query_gradient(GradientOf::F, x); };

  Point next;
  if (rec.g_at <= kBoundaryTolerance) {
    rec.kase = classify_round(rec.g_at, std::nullopt, std::nullopt, k);
    if (rec.kase == RoundCase::StrictFeasible_BigBall) {
      IntersectionSet region;
      region.parts.emplace_back(BallSet(a, rec.delta));
      region.parts.push_back(ambient);
      const auto step = optimize_step(
          grad_f, [&](const Point& y) { return project_intersection(y, region, state.tol); }, mu, a,
          opt);
      next = step.next;
      rec.start_repaired = step.start_repaired;
    } else {
      const auto window = oracle.query_local_set();
      const auto step = optimize_step(
          grad_f,
          [&](const Point& y) { return detail::project_window(window, y, ambient, rec.window_fallback); },
          mu, a, opt);
      next = step.next;
      rec.start_repaired = step.start_repaired;
    }
  } else {
    const Point gg = oracle.query_gradient(GradientOf::G, a);
    std::optional<bool> empty;
    std::optional<decltype(oracle.query_local_set())> window;
    if (!(rec.delta >= gg.norm() / k.L_g)) {
      window.emplace(oracle.query_local_set());
      empty = window->empty();
    }
    rec.kase = classify_round(rec.g_at, gg, empty, k);
    switch (rec.kase) {
      case RoundCase::Infeasible_GradientStep: {
        const Point a_hat = a - gg / k.L_g;
        next = a + k.alpha * (a_hat - a);
        break;
      }
      case RoundCase::Infeasible_LocalSet: {
        auto project = [&](const Point& y) {
          return detail::project_window(*window, y, ambient, rec.window_fallback);
        };
        const Point a_prime = project(a);
        const auto step = optimize_step(grad_f, project, mu, a_prime, opt);
        next = step.next;
        rec.start_repaired = step.start_repaired;
        break;
      }
      case RoundCase::Infeasible_EmptyLocal: {
        const double norm = gg.norm();
        if (!(norm > 0.0)) {
          throw DegenerateInputError("advance: zero constraint gradient at an infeasible action");
        }
        const Point a_hat = a - gg * (k.dist / norm);
        next = a + k.alpha * (a_hat - a);
        break;
      }
      default:
        throw ProtocolError("advance: infeasible value classified as feasible");
    }
  }

  if (!state.ambient.contains(next, 0.0)) {
    next = project_ambient(next, state.ambient);
    rec.clamped = true;
  }
  rec.a_next = next;
  rec.gradient_points_used = oracle.gradient_points_used();
  rec.transcript = oracle.transcript();
  state.a = std::move(next);
  ++state.t;
  return rec;
}

}  // namespace lcoco

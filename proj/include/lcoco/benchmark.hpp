#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lcoco/algorithm.hpp"
#include "lcoco/errors.hpp"
#include "lcoco/geometry.hpp"
#include "lcoco/model.hpp"
#include "lcoco/oracle.hpp"
#include "lcoco/qcqp.hpp"

namespace lcoco {

struct EigenRange {
  double lo = 1.0;
  double hi = 1.0;
};

struct SequenceSpec {
  int dim = 2;
  int horizon = 100;
  Point ambient_center;            // empty: origin
  double ambient_radius = 5.0;
  std::optional<Vector> ambient_semi_axes;  // set: ellipsoidal ambient set
  double drift_f = 0.0;            // per-round displacement of f's center
  double drift_g = 0.0;            // per-round displacement of g's center
  double g_level = 1.0;            // g_t(center_g) = -g_level
  EigenRange eig_f{1.0, 2.0};
  EigenRange eig_g{1.0, 2.0};
  std::optional<Matrix> hessian_f;  // fixed Hessians override the random draw
  std::optional<Matrix> hessian_g;
  std::optional<Point> center_f;    // initial centers override the random draw
  std::optional<Point> center_g;
  double center_gauge = 0.8;        // centers stay in this fraction of the ambient set
  double dist = 0.2;
  double alpha = 0.5;
  std::uint64_t seed = 1;

  AmbientSet ambient() const {
    const Point c = ambient_center.size() ? ambient_center : Point(Point::Zero(dim));
    if (ambient_semi_axes) return AmbientSet::ellipsoid(c, *ambient_semi_axes);
    return AmbientSet::ball(c, ambient_radius);
  }

  void validate() const {
    if (dim < 1) throw UsageError("SequenceSpec: dim must be >= 1");
    if (horizon < 1) throw UsageError("SequenceSpec: horizon must be >= 1");
    if (ambient_center.size() && ambient_center.size() != dim) {
      throw UsageError("SequenceSpec: ambient center has wrong dimension");
    }
    if (ambient_semi_axes && ambient_semi_axes->size() != dim) {
      throw UsageError("SequenceSpec: semi-axes have wrong dimension");
    }
    if (!(ambient_radius > 0.0)) throw UsageError("SequenceSpec: ambient radius must be > 0");
    if (!(drift_f >= 0.0) || !(drift_g >= 0.0)) throw UsageError("SequenceSpec: drift must be >= 0");
    const double r = ambient().radius();
    if (drift_f > r || drift_g > r) {
      throw UsageError("SequenceSpec: drift per round exceeds the ambient radius");
    }
    if (!(g_level > 0.0)) throw UsageError("SequenceSpec: g_level must be > 0");
    for (const EigenRange* e : {&eig_f, &eig_g}) {
      if (!(e->lo > 0.0) || !(e->hi >= e->lo) || !std::isfinite(e->hi)) {
        throw UsageError("SequenceSpec: eigenvalue range needs 0 < lo <= hi");
      }
    }
    if (!(center_gauge > 0.0 && center_gauge <= 1.0)) {
      throw UsageError("SequenceSpec: center_gauge must lie in (0, 1]");
    }
    if (!(dist > 0.0)) throw UsageError("SequenceSpec: dist must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("SequenceSpec: alpha must lie in (0, 1]");
  }
};

namespace detail {

inline Vector unit_direction(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(n);
  do {
    for (int i = 0; i < n; ++i) u(i) = normal(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

inline Matrix random_spd(std::mt19937_64& rng, int n, EigenRange range) {
  std::uniform_real_distribution<double> unif(range.lo, range.hi);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector w(n);
  for (int i = 0; i < n; ++i) w(i) = unif(rng);
  Matrix h = q * w.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

/// Point of the shrunken ambient set closest along the ray from the center.
inline Point pull_inside(const Point& x, const AmbientSet& amb, double gauge_limit) {
  const double s = amb.gauge(x);
  if (s <= gauge_limit) return x;
  return amb.center() + (x - amb.center()) * (gauge_limit / s);
}

inline Point random_inside(std::mt19937_64& rng, const AmbientSet& amb, double gauge_limit) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<int>(amb.dim());
  const Vector u = unit_direction(rng, n);
  const double rad = gauge_limit * std::pow(unif(rng), 1.0 / n);
  return amb.center() + amb.semi_axes().cwiseProduct(u) * rad;
}

inline Point drift_step(std::mt19937_64& rng, const Point& c, double step, const AmbientSet& amb,
                        double gauge_limit) {
  const Vector u = unit_direction(rng, static_cast<int>(c.size()));
  if (step == 0.0) return c;
  Point next = c + step * u;
  if (amb.gauge(next) > gauge_limit) next = c - step * u;  // bounce off the wall
  return pull_inside(next, amb, gauge_limit);
}

}  // namespace detail

/// Seeded, oblivious adversary: fixed Hessians and centers that random-walk
/// with the configured per-round step lengths. g_t has a nonempty interior at
/// its own center, which stays inside the ambient set.
inline std::vector<RoundPair> generate_sequence(const SequenceSpec& spec) {
  spec.validate();
  const AmbientSet amb = spec.ambient();
  std::mt19937_64 rng(spec.seed);
  const int n = spec.dim;
  const Matrix hf = spec.hessian_f ? *spec.hessian_f : detail::random_spd(rng, n, spec.eig_f);
  const Matrix hg = spec.hessian_g ? *spec.hessian_g : detail::random_spd(rng, n, spec.eig_g);
  Point cf = spec.center_f ? *spec.center_f : detail::random_inside(rng, amb, spec.center_gauge);
  Point cg = spec.center_g ? *spec.center_g : detail::random_inside(rng, amb, spec.center_gauge);
  require_dim(n, cf.size(), "generate_sequence center_f");
  require_dim(n, cg.size(), "generate_sequence center_g");
  if (!amb.contains(cg, 0.0)) throw UsageError("generate_sequence: g center outside the ambient set");

  std::vector<RoundPair> rounds;
  rounds.reserve(static_cast<std::size_t>(spec.horizon));
  for (int t = 0; t < spec.horizon; ++t) {
    if (t > 0) {
      cf = detail::drift_step(rng, cf, spec.drift_f, amb, spec.center_gauge);
      cg = detail::drift_step(rng, cg, spec.drift_g, amb, spec.center_gauge);
    }
    rounds.emplace_back(QuadraticFunction(hf, cf, 0.0), QuadraticFunction(hg, cg, -spec.g_level));
  }
  return rounds;
}

struct OfflineSolution {
  Point x_star;
  double f_at_star = 0.0;
  double g_at_star = 0.0;
  double kkt_residual = 0.0;
  bool from_fixed_point_iteration = false;
};

/// Projected-gradient fixed-point residual ||x - Proj(x - grad f(x) / L_f, feasible set)||.
inline double fixed_point_residual(const RoundPair& r, const AmbientSet& ambient, const Point& x,
                                   const GeometryTolerances& tol = {}) {
  IntersectionSet set;
  set.parts.emplace_back(SublevelSet(r.g));
  set.parts.push_back(as_part(ambient));
  const Point y = x - r.f.gradient(x) / r.f.smoothness();
  return (project_intersection(y, set, tol) - x).norm();
}

/// x_t* = argmin f_t over {g_t <= 0} ∩ ambient. The KKT system is solved on the
/// dual first; projected gradient descent with Dykstra projections is the fallback.
inline OfflineSolution solve_offline(const RoundPair& r, const AmbientSet& ambient,
                                     const GeometryTolerances& tol = {}) {
  require_dim(ambient.dim(), r.dim(), "solve_offline");
  const std::vector<QuadraticFunction> cons{r.g, as_constraint(as_part(ambient))};
  {
    const BallMinimum probe = min_over_ball(r.g, BallSet(ambient.center(), ambient.radius()), tol);
    if (probe.value > 0.0) throw InfeasibleSetError("solve_offline: feasible set is empty");
  }
  OfflineSolution out;
  const QcqpResult kkt = solve_qcqp(r.f.hessian(), r.f.center(), cons);
  if (kkt.converged && kkt.max_violation <= 1e-12) {
    out.x_star = kkt.x;
    out.kkt_residual = kkt.kkt_residual;
  } else {
    IntersectionSet set;
    set.parts.emplace_back(SublevelSet(r.g));
    set.parts.push_back(as_part(ambient));
    Point x = project_intersection(ambient.center(), set, tol);
    const double step = 1.0 / r.f.smoothness();
    double move = 0.0;
    int it = 0;
    for (; it < 1000000; ++it) {
      const Point next = project_intersection(x - step * r.f.gradient(x), set, tol);
      move = (next - x).norm();
      x = next;
      if (move < 1e-12) break;
    }
    if (move >= 1e-12) throw NumericalError("solve_offline: no convergence", x, move);
    out.x_star = x;
    out.from_fixed_point_iteration = true;
    out.kkt_residual = fixed_point_residual(r, ambient, x, tol);
  }
  out.f_at_star = r.f(out.x_star);
  out.g_at_star = r.g(out.x_star);
  return out;
}

struct Metrics {
  double R_d = 0.0;
  double P_g = 0.0;
  double P_g_prime = 0.0;
  double V = 0.0;
  double tracking = 0.0;  // sum_t ||x_t* - a_t||
  std::vector<std::optional<double>> ratios;  // per round; empty when ||x_t* - a_t|| < 1e-12
  double c_empirical = 0.0;
};

inline constexpr double kRatioFloor = 1e-12;

/// `actions` holds a_1..a_T, optionally followed by a_{T+1} so the last ratio is defined.
inline Metrics compute_metrics(std::span<const Point> actions,
                               std::span<const OfflineSolution> solutions,
                               std::span<const RoundPair> rounds) {
  const std::size_t T = rounds.size();
  if (solutions.size() != T || (actions.size() != T && actions.size() != T + 1)) {
    throw UsageError("compute_metrics: length mismatch");
  }
  Metrics m;
  m.ratios.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& r = rounds[t];
    const Point& xs = solutions[t].x_star;
    const Point& a = actions[t];
    const double f_star = r.f(xs);
    const double g_star = r.g(xs);
    const double g_a = r.g(a);
    m.R_d += std::abs(f_star - r.f(a));
    m.P_g += std::abs(g_star - g_a);
    m.P_g_prime += g_a;
    const double gap = (xs - a).norm();
    m.tracking += gap;
    if (t > 0) m.V += (xs - solutions[t - 1].x_star).norm();
    if (t + 1 < actions.size() && gap >= kRatioFloor) {
      const double ratio = (xs - actions[t + 1]).norm() / gap;
      m.ratios[t] = ratio;
      m.c_empirical = std::max(m.c_empirical, ratio);
    }
  }
  return m;
}

struct ContractionConstants {
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  double c = 0.0;
};

inline ContractionConstants theoretical_contraction(const ConstantsBundle& k) {
  k.validate();
  auto root = [](double v) { return std::sqrt(std::max(0.0, v)); };
  ContractionConstants out;
  out.c2 = root(1.0 - k.alpha * k.nu_f / (2.0 * k.L_f));
  out.c3 = (k.D + k.alpha * k.dist) / (k.D + k.dist);
  out.c4 = root(1.0 - k.alpha * k.nu_g / k.L_g);
  out.c5 = root(1.0 - k.alpha * k.nu_g / std::max(k.G / k.dist, k.L_g));
  out.c = std::max({out.c2, out.c3, out.c4, out.c5});
  // alpha = 1 makes c3 = 1: the cumulative bounds are then infinite, not violated.
  if (!(out.c > 0.0 && out.c <= 1.0)) throw DegenerateInputError("theoretical_contraction: c outside (0, 1]");
  return out;
}

struct CheckTolerances {
  double ratio = 1e-6;       // per-step slack on c
  double tracking = 1e-6;    // slack on sum ||x_t* - a_t||
  double cumulative = 1e-4;  // slack on R_d and P_g bounds
  // P_g >= P_g' needs g_t(x_t*) <= 0, which rounding breaks by ~1e-16 when the
  // optimum sits on the constraint boundary.
  double ordering = 1e-9;
};

struct BoundChecks {
  bool per_step = true;
  bool tracking = true;
  bool regret = true;
  bool penalty = true;
  bool ordering = true;
  bool gradient_budget = true;
  bool firewall = true;
  int worst_round = 0;            // round with the largest ratio excess
  double tracking_bound = 0.0;
  double regret_bound = 0.0;
  double penalty_bound = 0.0;

  bool all() const {
    return per_step && tracking && regret && penalty && ordering && gradient_budget && firewall;
  }
};

struct StartSpec {
  enum class Kind { Center, Infeasible, Explicit } kind = Kind::Center;
  Point point;
};

/// The ambient boundary point, among a few candidate directions, where g_1 is
/// largest; the first rounds then run the infeasible branches.
inline Point infeasible_start(const RoundPair& first, const AmbientSet& ambient) {
  const auto n = ambient.dim();
  Vector away = ambient.center() - first.g.center();
  std::vector<Vector> dirs;
  if (away.norm() > 1e-12) dirs.push_back(away / away.norm());
  for (Eigen::Index i = 0; i < n; ++i) {
    dirs.push_back(Vector::Unit(n, i));
    dirs.push_back(-Vector::Unit(n, i));
  }
  Point best = ambient.center();
  double best_val = -std::numeric_limits<double>::infinity();
  for (const Vector& u : dirs) {
    const Point x = ambient.center() + u / u.cwiseQuotient(ambient.semi_axes()).norm();
    const double v = first.g(x);
    if (v > best_val) {
      best_val = v;
      best = x;
    }
  }
  return best;
}

inline Point resolve_start(const StartSpec& s, const RoundPair& first, const AmbientSet& ambient) {
  switch (s.kind) {
    case StartSpec::Kind::Center: return ambient.center();
    case StartSpec::Kind::Infeasible: return infeasible_start(first, ambient);
    case StartSpec::Kind::Explicit:
      require_dim(ambient.dim(), s.point.size(), "start point");
      if (!ambient.contains(s.point, 1e-12)) throw UsageError("start point lies outside the ambient set");
      return s.point;
  }
  return ambient.center();
}

struct RunOptions {
  StartSpec start;
  bool forced_optimal = false;  // bypass the algorithm and play x_t* (metric self-test)
  GeometryTolerances geometry{};
  CheckTolerances checks{};
};

struct RunResult {
  ConstantsBundle constants;
  ContractionConstants contraction;
  std::vector<RoundRecord> records;   // empty in forced-optimal mode
  std::vector<Point> actions;         // a_1..a_{T+1}
  std::vector<OfflineSolution> solutions;
  Metrics metrics;
  std::map<RoundCase, int> histogram;
  std::uint64_t evaluations_inside = 0;
  std::uint64_t evaluations_outside = 0;
  BoundChecks checks;
};

inline BoundChecks check_bounds(const RunResult& r, const CheckTolerances& tol) {
  BoundChecks b;
  const double c = r.contraction.c;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < r.metrics.ratios.size(); ++t) {
    if (!r.metrics.ratios[t]) continue;
    const double excess = *r.metrics.ratios[t] - (c + tol.ratio);
    if (excess > worst) {
      worst = excess;
      b.worst_round = static_cast<int>(t) + 1;
    }
    if (excess > 0.0) b.per_step = false;
  }
  const double x1_gap = (r.solutions.front().x_star - r.actions.front()).norm();
  const double base = c < 1.0 ? (x1_gap + r.metrics.V) / (1.0 - c) : std::numeric_limits<double>::infinity();
  b.tracking_bound = base;
  b.regret_bound = r.constants.lip_f * base;
  b.penalty_bound = r.constants.lip_g * base;
  b.tracking = r.metrics.tracking <= base + tol.tracking;
  b.regret = r.metrics.R_d <= b.regret_bound + tol.cumulative;
  b.penalty = r.metrics.P_g <= b.penalty_bound + tol.cumulative;
  b.ordering = r.metrics.P_g >= r.metrics.P_g_prime - tol.ordering;
  for (const auto& rec : r.records) {
    const std::size_t cap = rec.kase == RoundCase::Infeasible_LocalSet ? 2 : 1;
    if (rec.gradient_points_used > cap) b.gradient_budget = false;
  }
  b.firewall = r.evaluations_outside == 0;
  return b;
}

inline RunResult run_sequence(std::span<const RoundPair> rounds, const AmbientSet& ambient,
                              double dist, double alpha, const RunOptions& opt = {}) {
  if (rounds.empty()) throw UsageError("run_sequence: empty sequence");
  RunResult out;
  out.constants = derive_constants(rounds, ambient, dist, alpha);
  out.contraction = theoretical_contraction(out.constants);
  out.solutions.reserve(rounds.size());
  for (const auto& r : rounds) out.solutions.push_back(solve_offline(r, ambient, opt.geometry));

  if (opt.forced_optimal) {
    for (const auto& s : out.solutions) out.actions.push_back(s.x_star);
    out.actions.push_back(out.solutions.back().x_star);
  } else {
    auto audit = std::make_shared<EvaluationAudit>();
    AlgorithmState state{1, resolve_start(opt.start, rounds.front(), ambient), out.constants,
                         ambient, opt.geometry};
    out.actions.push_back(state.a);
    out.records.reserve(rounds.size());
    for (const auto& r : rounds) {
      RoundOracle oracle(r, ambient, dist, opt.geometry, audit);
      out.records.push_back(advance(state, oracle));
      out.actions.push_back(state.a);
      ++out.histogram[out.records.back().kase];
    }
    out.evaluations_inside = audit->inside.load();
    out.evaluations_outside = audit->outside.load();
  }
  out.metrics = compute_metrics(out.actions, out.solutions, rounds);
  out.checks = check_bounds(out, opt.checks);
  return out;
}

/// Scales both drift magnitudes so the realized path length of the minimizers
/// lands within `rel_tol` of `target_v`. Returns the calibrated spec.
inline SequenceSpec calibrate_drift(SequenceSpec spec, double target_v, double rel_tol = 0.1,
                                    int max_iter = 60) {
  const AmbientSet amb = spec.ambient();
  if (target_v == 0.0) {
    spec.drift_f = spec.drift_g = 0.0;
    return spec;
  }
  const double ratio_g = spec.drift_f > 0.0 ? spec.drift_g / spec.drift_f : 0.0;
  auto realized = [&](double d) {
    SequenceSpec s = spec;
    s.drift_f = d;
    s.drift_g = d * ratio_g;
    const auto seq = generate_sequence(s);
    double v = 0.0;
    Point prev;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const Point x = solve_offline(seq[t], amb).x_star;
      if (t > 0) v += (x - prev).norm();
      prev = x;
    }
    return v;
  };
  const double cap = amb.radius() / std::max(1.0, ratio_g);
  double lo = 0.0;
  double hi = std::min(cap, 2.0 * target_v / std::max(1, spec.horizon - 1));
  while (realized(hi) < target_v && hi < cap) hi = std::min(cap, 2.0 * hi);
  double best = hi;
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = realized(mid);
    best = mid;
    if (std::abs(v - target_v) <= rel_tol * target_v) break;
    if (v < target_v) lo = mid; else hi = mid;
  }
  spec.drift_f = best;
  spec.drift_g = best * ratio_g;
  return spec;
}

}  // namespace lcoco

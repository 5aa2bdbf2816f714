#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcoco/errors.hpp"
#include "lcoco/geometry.hpp"
#include "lcoco/model.hpp"

namespace lcoco {

enum class GradientOf { F, G };

enum class QueryKind {
  ConstraintValue,  // g_t(a_t)
  GradientF,
  GradientG,
  LocalSet,         // reveal the window; answer = (empty flag, min of g over the ball)
  LocalContains,
  LocalProject,
  LocalMinimum,
};

inline const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::ConstraintValue: return "g_value";
    case QueryKind::GradientF: return "grad_f";
    case QueryKind::GradientG: return "grad_g";
    case QueryKind::LocalSet: return "local_set";
    case QueryKind::LocalContains: return "local_contains";
    case QueryKind::LocalProject: return "local_project";
    case QueryKind::LocalMinimum: return "local_min_g";
  }
  return "?";
}

/// One answered query. `point` is the query argument (the committed action for
/// argument-free queries); `answer` holds the reply, scalars as length-1 vectors.
struct QueryRecord {
  QueryKind kind;
  Point point;
  Vector answer;
};

inline Vector scalar_answer(double v) { return Vector::Constant(1, v); }

namespace detail {
inline void add_gradient_point(std::vector<Point>& points, const Point& x) {
  const bool seen = std::any_of(points.begin(), points.end(),
                                [&](const Point& p) { return p.size() == x.size() && p == x; });
  if (!seen) points.push_back(x);
}
}  // namespace detail

class RoundOracle;

/// Handle to the revealed window chi_t(a_t) = {g_t <= 0} ∩ B(a_t, dist).
/// Every query goes through the owning oracle and lands in its transcript.
class LocalFeasibleSet {
 public:
  const Point& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }
  bool empty() const noexcept { return empty_; }
  double min_value() const noexcept { return min_value_; }

  /// Membership for points inside B(a_t, dist); querying outside the ball is a protocol error.
  bool contains(const Point& x) const;

  /// Nearest point of the window intersected with `extra` convex sets.
  Point project(const Point& y, std::span<const ConvexPart> extra = {}) const;

  double min_constraint() const;

 private:
  friend class RoundOracle;
  LocalFeasibleSet(RoundOracle* o, Point c, double r, bool empty, double min_value)
      : oracle_(o), center_(std::move(c)), radius_(r), empty_(empty), min_value_(min_value) {}

  RoundOracle* oracle_;
  Point center_;
  double radius_;
  bool empty_;
  double min_value_;
};

/// Enforces the restricted feedback model for one round. The round's f_t and g_t
/// stay private; after an action is committed the oracle reveals g_t(a_t),
/// gradients at requested points and the local window, recording each answer.
class RoundOracle {
 public:
  RoundOracle(const RoundPair& round, AmbientSet ambient, double dist,
              GeometryTolerances tol = {}, std::shared_ptr<EvaluationAudit> audit = nullptr)
      : audit_(audit ? std::move(audit) : std::make_shared<EvaluationAudit>()),
        f_(round.f.audited(audit_)),
        g_(round.g.audited(audit_)),
        ambient_(std::move(ambient)),
        dist_(dist),
        tol_(tol) {
    require_dim(ambient_.dim(), round.dim(), "RoundOracle");
    if (!(dist_ > 0.0)) throw UsageError("RoundOracle: dist must be positive");
  }

  void commit(const Point& action) {
    if (committed_) throw ProtocolError("RoundOracle: action already committed");
    require_dim(f_.dim(), action.size(), "commit");
    require_finite(action, "commit");
    committed_ = action;
  }

  bool committed() const noexcept { return committed_.has_value(); }
  const Point& committed_action() const {
    require_commit("committed_action");
    return *committed_;
  }

  double reveal_constraint_value() {
    require_commit("reveal_constraint_value");
    OracleScope scope;
    const double v = g_(*committed_);
    transcript_.push_back({QueryKind::ConstraintValue, *committed_, scalar_answer(v)});
    return v;
  }

  Point query_gradient(GradientOf which, const Point& x) {
    require_commit("query_gradient");
    require_dim(f_.dim(), x.size(), "query_gradient");
    if (!ambient_.contains(x, 1e-9)) {
      throw ProtocolError("query_gradient: point lies outside the ambient set");
    }
    OracleScope scope;
    Point grad = (which == GradientOf::F) ? f_.gradient(x) : g_.gradient(x);
    detail::add_gradient_point(gradient_points_, x);
    transcript_.push_back(
        {which == GradientOf::F ? QueryKind::GradientF : QueryKind::GradientG, x, grad});
    return grad;
  }

  LocalFeasibleSet query_local_set() {
    require_commit("query_local_set");
    OracleScope scope;
    const BallMinimum m = min_over_ball(g_, BallSet(*committed_, dist_), tol_);
    const bool empty = m.value > tol_.feasibility;
    Vector answer(2);
    answer << (empty ? 1.0 : 0.0), m.value;
    transcript_.push_back({QueryKind::LocalSet, *committed_, answer});
    return LocalFeasibleSet(this, *committed_, dist_, empty, m.value);
  }

  const std::vector<QueryRecord>& transcript() const noexcept { return transcript_; }
  std::size_t gradient_points_used() const noexcept { return gradient_points_.size(); }
  const std::vector<Point>& gradient_points() const noexcept { return gradient_points_; }
  const EvaluationAudit& audit() const noexcept { return *audit_; }
  double dist() const noexcept { return dist_; }

 private:
  friend class LocalFeasibleSet;

  void require_commit(const char* what) const {
    if (!committed_) throw ProtocolError(std::string(what) + ": no action committed");
  }

  bool window_contains(const Point& x) {
    require_dim(f_.dim(), x.size(), "LocalFeasibleSet::contains");
    if ((x - *committed_).norm() > dist_ * (1.0 + 1e-12)) {
      throw ProtocolError("LocalFeasibleSet::contains: query outside B(a_t, dist)");
    }
    OracleScope scope;
    const bool in = g_(x) <= 0.0;
    transcript_.push_back({QueryKind::LocalContains, x, scalar_answer(in ? 1.0 : 0.0)});
    return in;
  }

  Point window_project(const Point& y, std::span<const ConvexPart> extra, bool empty) {
    require_dim(f_.dim(), y.size(), "LocalFeasibleSet::project");
    if (empty) throw InfeasibleSetError("LocalFeasibleSet::project: window is empty");
    OracleScope scope;
    IntersectionSet set;
    set.parts.emplace_back(BallSet(*committed_, dist_));
    set.parts.emplace_back(SublevelSet(g_));
    for (const auto& p : extra) set.parts.push_back(p);
    Point x;
    try {
      x = project_intersection(y, set, tol_);
    } catch (const NumericalError&) {
      throw InfeasibleSetError("LocalFeasibleSet::project: intersection is empty");
    }
    if (!contains(set, x, 1e-7)) {
      throw InfeasibleSetError("LocalFeasibleSet::project: intersection is empty");
    }
    transcript_.push_back({QueryKind::LocalProject, y, x});
    return x;
  }

  double window_minimum() {
    OracleScope scope;
    const BallMinimum m = min_over_ball(g_, BallSet(*committed_, dist_), tol_);
    transcript_.push_back({QueryKind::LocalMinimum, *committed_, scalar_answer(m.value)});
    return m.value;
  }

  std::shared_ptr<EvaluationAudit> audit_;
  QuadraticFunction f_;
  QuadraticFunction g_;
  AmbientSet ambient_;
  double dist_;
  GeometryTolerances tol_;
  std::optional<Point> committed_;
  std::vector<QueryRecord> transcript_;
  std::vector<Point> gradient_points_;
};

inline bool LocalFeasibleSet::contains(const Point& x) const { return oracle_->window_contains(x); }

inline Point LocalFeasibleSet::project(const Point& y, std::span<const ConvexPart> extra) const {
  return oracle_->window_project(y, extra, empty_);
}

inline double LocalFeasibleSet::min_constraint() const { return oracle_->window_minimum(); }

class ReplayOracle;

class ReplayLocalSet {
 public:
  bool empty() const noexcept { return empty_; }
  double min_value() const noexcept { return min_value_; }
  bool contains(const Point& x) const;
  Point project(const Point& y, std::span<const ConvexPart> extra = {}) const;
  double min_constraint() const;

 private:
  friend class ReplayOracle;
  ReplayLocalSet(ReplayOracle* o, bool empty, double min_value)
      : oracle_(o), empty_(empty), min_value_(min_value) {}
  ReplayOracle* oracle_;
  bool empty_;
  double min_value_;
};

/// Answers queries from a recorded transcript. Any deviation in query order,
/// kind or argument is a protocol error, so a successful replay proves the
/// algorithm's actions are a function of the transcript alone.
class ReplayOracle {
 public:
  explicit ReplayOracle(std::vector<QueryRecord> transcript) : script_(std::move(transcript)) {}

  void commit(const Point& action) {
    if (committed_) throw ProtocolError("ReplayOracle: action already committed");
    committed_ = action;
  }

  double reveal_constraint_value() { return next(QueryKind::ConstraintValue, *committed_)(0); }

  Point query_gradient(GradientOf which, const Point& x) {
    const Vector a = next(which == GradientOf::F ? QueryKind::GradientF : QueryKind::GradientG, x);
    detail::add_gradient_point(gradient_points_, x);
    return a;
  }

  ReplayLocalSet query_local_set() {
    const Vector a = next(QueryKind::LocalSet, *committed_);
    return ReplayLocalSet(this, a(0) != 0.0, a(1));
  }

  const std::vector<QueryRecord>& transcript() const noexcept { return played_; }
  std::size_t gradient_points_used() const noexcept { return gradient_points_.size(); }
  bool exhausted() const noexcept { return cursor_ == script_.size(); }

 private:
  friend class ReplayLocalSet;

  Vector next(QueryKind kind, const Point& arg) {
    if (!committed_) throw ProtocolError("ReplayOracle: no action committed");
    if (cursor_ >= script_.size()) throw ProtocolError("ReplayOracle: transcript exhausted");
    const QueryRecord& r = script_[cursor_++];
    if (r.kind != kind || r.point.size() != arg.size() || r.point != arg) {
      throw ProtocolError(std::string("ReplayOracle: expected ") + to_string(r.kind) +
                          " query, got " + to_string(kind));
    }
    played_.push_back(r);
    return r.answer;
  }

  std::vector<QueryRecord> script_;
  std::vector<QueryRecord> played_;
  std::vector<Point> gradient_points_;
  std::optional<Point> committed_;
  std::size_t cursor_ = 0;
};

inline bool ReplayLocalSet::contains(const Point& x) const {
  return oracle_->next(QueryKind::LocalContains, x)(0) != 0.0;
}

inline Point ReplayLocalSet::project(const Point& y, std::span<const ConvexPart>) const {
  if (empty_) throw InfeasibleSetError("ReplayLocalSet::project: window is empty");
  return oracle_->next(QueryKind::LocalProject, y);
}

inline double ReplayLocalSet::min_constraint() const {
  return oracle_->next(QueryKind::LocalMinimum, *oracle_->committed_)(0);
}

}  // namespace lcoco

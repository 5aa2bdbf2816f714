#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "lcoco/quadratic.hpp"

namespace lcoco {

struct QcqpOptions {
  int max_iterations = 100;
  double tolerance = 1e-14;        // complementarity residual, relative to constraint scale
  double accept_residual = 1e-9;   // final KKT residual below which the result is usable
  double multiplier_cap = 1e15;    // larger multipliers signal an empty feasible set
};

struct QcqpResult {
  Point x;
  Vector multipliers;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double max_violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

namespace detail {

struct DualPoint {
  Point x;
  Vector q;          // constraint values at x
  Matrix jac;        // rows: constraint gradients at x
  Eigen::LLT<Matrix> llt;
  double value = 0;  // dual objective
  bool ok = false;
};

inline DualPoint evaluate_dual(const Matrix& h0, const Point& c0,
                               std::span<const QuadraticFunction> cons, const Vector& lambda) {
  DualPoint p;
  Matrix m = h0;
  Vector rhs = h0 * c0;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    m += lambda(i) * cons[i].hessian();
    rhs += lambda(i) * (cons[i].hessian() * cons[i].center());
  }
  p.llt.compute(m);
  if (p.llt.info() != Eigen::Success) return p;
  p.x = p.llt.solve(rhs);
  const auto k = static_cast<Eigen::Index>(cons.size());
  p.q.resize(k);
  p.jac.resize(k, c0.size());
  const Vector d0 = p.x - c0;
  p.value = 0.5 * d0.dot(h0 * d0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& c = cons[static_cast<std::size_t>(i)];
    p.q(i) = c(p.x);
    p.jac.row(i) = c.gradient(p.x).transpose();
    p.value += lambda(i) * p.q(i);
  }
  p.ok = p.x.allFinite() && std::isfinite(p.value);
  return p;
}

}  // namespace detail

/// Minimize 1/2 (x - c0)^T H0 (x - c0) subject to q_i(x) <= 0 for strongly convex
/// quadratics q_i, by projected Newton ascent on the (concave, smooth) Lagrange dual.
///
/// For fixed multipliers the primal minimizer is x(l) = (H0 + sum l_i H_i)^{-1}
/// (H0 c0 + sum l_i H_i c_i), the dual gradient is q(x(l)) and the dual Hessian is
/// -J M^{-1} J^T. Stationarity therefore holds to rounding at every iterate; the
/// iteration drives primal feasibility and complementarity to machine precision.
inline QcqpResult solve_qcqp(const Matrix& h0, const Point& c0,
                             std::span<const QuadraticFunction> cons,
                             const QcqpOptions& opt = {}, const Vector* warm = nullptr) {
  const auto k = static_cast<Eigen::Index>(cons.size());
  QcqpResult out;
  Vector lambda = Vector::Zero(k);
  if (warm != nullptr && warm->size() == k) lambda = warm->cwiseMax(0.0);

  Vector scale(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    scale(i) = 1.0 + std::abs(cons[static_cast<std::size_t>(i)].offset());
  }
  auto residual = [&](const detail::DualPoint& p, const Vector& l) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      r = std::max(r, std::abs(std::min(l(i), -p.q(i) / scale(i))));
    }
    return r;
  };

  detail::DualPoint cur = detail::evaluate_dual(h0, c0, cons, lambda);
  if (!cur.ok) return out;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (residual(cur, lambda) <= opt.tolerance) break;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (lambda(i) > 0.0 || cur.q(i) > 0.0) free.push_back(i);
    }
    if (free.empty()) break;
    const auto nf = static_cast<Eigen::Index>(free.size());
    Matrix jf(nf, c0.size());
    Vector qf(nf);
    for (Eigen::Index j = 0; j < nf; ++j) {
      jf.row(j) = cur.jac.row(free[static_cast<std::size_t>(j)]);
      qf(j) = cur.q(free[static_cast<std::size_t>(j)]);
    }
    Matrix b = jf * cur.llt.solve(jf.transpose());
    b.diagonal().array() += 1e-15 * std::max(1.0, b.diagonal().cwiseAbs().maxCoeff());
    const Vector step_f = b.ldlt().solve(qf);
    Vector step = Vector::Zero(k);
    for (Eigen::Index j = 0; j < nf; ++j) step(free[static_cast<std::size_t>(j)]) = step_f(j);

    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Vector trial = (lambda + t * step).cwiseMax(0.0);
      if (trial.maxCoeff() > opt.multiplier_cap) break;
      detail::DualPoint next = detail::evaluate_dual(h0, c0, cons, trial);
      if (!next.ok) continue;
      const double gain = cur.q.dot(trial - lambda);
      const double slack = 1e-15 * (1.0 + std::abs(cur.value));
      if (next.value >= cur.value + 1e-4 * gain - slack) {
        const bool moved = (trial - lambda).cwiseAbs().maxCoeff() > 0.0;
        lambda = trial;
        cur = std::move(next);
        accepted = moved;
        break;
      }
    }
    if (!accepted) break;
  }

  out.iterations = it;
  out.x = cur.x;
  out.multipliers = lambda;
  double viol = 0.0;
  double comp = 0.0;
  Vector stat = h0 * (cur.x - c0);
  for (Eigen::Index i = 0; i < k; ++i) {
    viol = std::max(viol, cur.q(i) / scale(i));
    comp = std::max(comp, std::abs(lambda(i) * cur.q(i)));
    stat += lambda(i) * cur.jac.row(i).transpose();
  }
  out.max_violation = std::max(viol, 0.0);
  out.kkt_residual = std::max({out.max_violation, comp, stat.norm()});
  out.converged = std::isfinite(out.kkt_residual) && out.kkt_residual <= opt.accept_residual &&
                  lambda.allFinite() && (k == 0 || lambda.maxCoeff() < opt.multiplier_cap);
  return out;
}

}  // namespace lcoco

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "lcoco/errors.hpp"

namespace lcoco {

using Point = Eigen::VectorXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw StructuralError(std::string(what) + ": dimension mismatch (expected " +
                          std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

inline void require_finite(const Point& x, const char* what) {
  if (x.size() < 1) throw StructuralError(std::string(what) + ": empty point");
  if (!x.allFinite()) throw StructuralError(std::string(what) + ": non-finite coordinate");
}

/// Counts evaluations of hidden functions, split by whether an oracle query was
/// in progress on the evaluating thread.
struct EvaluationAudit {
  std::atomic<std::uint64_t> inside{0};
  std::atomic<std::uint64_t> outside{0};
};

namespace detail {
inline thread_local int oracle_scope_depth = 0;
}

/// Marks the current thread as answering an oracle query.
class OracleScope {
 public:
  OracleScope() { ++detail::oracle_scope_depth; }
  ~OracleScope() { --detail::oracle_scope_depth; }
  OracleScope(const OracleScope&) = delete;
  OracleScope& operator=(const OracleScope&) = delete;
};

/// h(x) = 1/2 (x - c)^T H (x - c) + offset with H symmetric positive definite.
///
/// The spectral decomposition of H is computed once at construction; the
/// strong-convexity modulus is lambda_min(H) and the gradient-Lipschitz
/// modulus is lambda_max(H).
class QuadraticFunction {
 public:
  QuadraticFunction(Matrix hessian, Point center, double offset = 0.0)
      : hessian_(std::move(hessian)), center_(std::move(center)), offset_(offset) {
    const auto n = center_.size();
    if (n < 1) throw StructuralError("QuadraticFunction: dimension must be >= 1");
    if (hessian_.rows() != n || hessian_.cols() != n) {
      throw StructuralError("QuadraticFunction: Hessian must be " + std::to_string(n) + "x" +
                            std::to_string(n));
    }
    if (!hessian_.allFinite() || !center_.allFinite() || !std::isfinite(offset_)) {
      throw StructuralError("QuadraticFunction: non-finite data");
    }
    const double scale = std::max(1.0, hessian_.cwiseAbs().maxCoeff());
    if ((hessian_ - hessian_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw StructuralError("QuadraticFunction: Hessian is not symmetric");
    }
    hessian_ = 0.5 * (hessian_ + hessian_.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_);
    if (eig.info() != Eigen::Success) {
      throw StructuralError("QuadraticFunction: eigendecomposition failed");
    }
    eigenvalues_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
    if (!(eigenvalues_(0) > 0.0)) {
      throw StructuralError("QuadraticFunction: Hessian is not positive definite");
    }
  }

  /// 1/2 ||x - c||^2 - 1/2 r^2, whose zero sublevel set is the ball B(c, r).
  static QuadraticFunction ball(const Point& center, double radius) {
    const auto n = center.size();
    return QuadraticFunction(Matrix::Identity(n, n), center, -0.5 * radius * radius);
  }

  Eigen::Index dim() const noexcept { return center_.size(); }
  const Matrix& hessian() const noexcept { return hessian_; }
  const Point& center() const noexcept { return center_; }
  double offset() const noexcept { return offset_; }

  /// Ascending eigenvalues of H and the matching orthonormal eigenvectors.
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& eigenvectors() const noexcept { return eigenvectors_; }

  double strong_convexity() const noexcept { return eigenvalues_(0); }
  double smoothness() const noexcept { return eigenvalues_(eigenvalues_.size() - 1); }

  double operator()(const Point& x) const {
    require_dim(dim(), x.size(), "evaluate");
    record();
    const Vector d = x - center_;
    return 0.5 * d.dot(hessian_ * d) + offset_;
  }

  Point gradient(const Point& x) const {
    require_dim(dim(), x.size(), "gradient");
    record();
    return hessian_ * (x - center_);
  }

  QuadraticFunction with_center(Point center) const {
    return QuadraticFunction(hessian_, std::move(center), offset_);
  }

  /// A copy whose evaluations are tallied in `audit`.
  QuadraticFunction audited(std::shared_ptr<EvaluationAudit> audit) const {
    QuadraticFunction copy = *this;
    copy.audit_ = std::move(audit);
    return copy;
  }

 private:
  void record() const {
    if (!audit_) return;
    if (detail::oracle_scope_depth > 0) {
      audit_->inside.fetch_add(1, std::memory_order_relaxed);
    } else {
      audit_->outside.fetch_add(1, std::memory_order_relaxed);
    }
  }

  Matrix hessian_;
  Point center_;
  double offset_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  std::shared_ptr<EvaluationAudit> audit_;
};

inline double evaluate(const QuadraticFunction& h, const Point& x) { return h(x); }
inline Point gradient(const QuadraticFunction& h, const Point& x) { return h.gradient(x); }

}  // namespace lcoco

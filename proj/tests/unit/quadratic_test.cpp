#include <random>

#include <gtest/gtest.h>

#include "lcoco/quadratic.hpp"
#include "test_oracles.hpp"

namespace lcoco {
namespace {

Point pt(double a, double b) { return (Point(2) << a, b).finished(); }
Matrix diag(double a, double b) { return pt(a, b).asDiagonal(); }

TEST(Evaluate, CenteredQuadraticAtMinimum) {
  const QuadraticFunction h(Matrix::Identity(2, 2), pt(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(h, pt(0, 0)), 0.0);
}

TEST(Evaluate, OffsetQuadratic) {
  const QuadraticFunction h(Matrix::Identity(2, 2), pt(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(evaluate(h, pt(2, 0)), 1.0);
}

TEST(Evaluate, AnisotropicHessian) {
  const QuadraticFunction h(diag(2, 1), pt(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(h, pt(1, 1)), 0.5);
}

TEST(Evaluate, DimensionMismatchIsStructural) {
  const QuadraticFunction h(Matrix::Identity(2, 2), pt(0, 0));
  EXPECT_THROW(evaluate(h, Point::Zero(3)), StructuralError);
  EXPECT_THROW(gradient(h, Point::Zero(1)), StructuralError);
}

TEST(Gradient, IdentityHessian) {
  const QuadraticFunction h(Matrix::Identity(2, 2), pt(0, 0));
  EXPECT_EQ(gradient(h, pt(3, 4)), pt(3, 4));
}

TEST(Gradient, VanishesAtCenter) {
  const QuadraticFunction h(diag(3, 0.5), pt(-1, 2), 7.0);
  EXPECT_EQ(gradient(h, pt(-1, 2)), pt(0, 0));
}

TEST(Gradient, AnisotropicHessian) {
  const QuadraticFunction h(diag(2, 1), pt(1, 0));
  EXPECT_EQ(gradient(h, pt(2, 2)), pt(2, 2));
}

TEST(QuadraticFunction, RejectsAsymmetricHessian) {
  Matrix h = diag(1, 1);
  h(0, 1) = 1e-6;
  EXPECT_THROW(QuadraticFunction(h, pt(0, 0)), StructuralError);
}

TEST(QuadraticFunction, AcceptsRoundoffAsymmetry) {
  Matrix h = diag(1, 1);
  h(0, 1) = 1e-14;
  const QuadraticFunction q(h, pt(0, 0));
  EXPECT_EQ(q.hessian()(0, 1), q.hessian()(1, 0));
}

TEST(QuadraticFunction, RejectsIndefiniteOrSingular) {
  EXPECT_THROW(QuadraticFunction(diag(1, 0), pt(0, 0)), StructuralError);
  EXPECT_THROW(QuadraticFunction(diag(1, -1), pt(0, 0)), StructuralError);
}

TEST(QuadraticFunction, RejectsBadShapesAndNonFinite) {
  EXPECT_THROW(QuadraticFunction(Matrix::Identity(3, 3), pt(0, 0)), StructuralError);
  EXPECT_THROW(QuadraticFunction(Matrix::Identity(2, 2), pt(0, std::nan(""))), StructuralError);
  EXPECT_THROW(QuadraticFunction(Matrix(0, 0), Point(0)), StructuralError);
}

TEST(QuadraticFunction, SpectralConstants) {
  const QuadraticFunction h(diag(3, 0.5), pt(0, 0));
  EXPECT_DOUBLE_EQ(h.strong_convexity(), 0.5);
  EXPECT_DOUBLE_EQ(h.smoothness(), 3.0);
}

TEST(QuadraticFunction, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 4;
    const QuadraticFunction h(testing::random_spd(rng, n, 0.2, 5.0), testing::random_vec(rng, n, 3.0),
                              testing::random_vec(rng, 1, 2.0)(0));
    const Point x = testing::random_vec(rng, n, 4.0);
    const Vector g = h.gradient(x);
    const Vector fd = testing::central_difference([&](const Vector& y) { return h(y); }, x);
    EXPECT_LE((g - fd).norm(), 1e-5 * (1.0 + g.norm())) << "instance " << k;
  }
}

TEST(QuadraticFunction, StrongConvexityAndSmoothnessWitnesses) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % 3;
    const QuadraticFunction h(testing::random_spd(rng, n, 0.1, 4.0), testing::random_vec(rng, n, 2.0));
    const Point x = testing::random_vec(rng, n, 3.0);
    const Point y = testing::random_vec(rng, n, 3.0);
    const double lin = h(x) + h.gradient(x).dot(y - x);
    const double d2 = (y - x).squaredNorm();
    EXPECT_GE(h(y), lin + 0.5 * h.strong_convexity() * d2 - 1e-9);
    EXPECT_LE(h(y), lin + 0.5 * h.smoothness() * d2 + 1e-9);
  }
}

TEST(EvaluationAudit, SplitsByOracleScope) {
  auto audit = std::make_shared<EvaluationAudit>();
  const QuadraticFunction h = QuadraticFunction(diag(1, 1), pt(0, 0)).audited(audit);
  h(pt(1, 1));
  {
    OracleScope scope;
    h.gradient(pt(1, 1));
    h(pt(0, 1));
  }
  EXPECT_EQ(audit->outside.load(), 1u);
  EXPECT_EQ(audit->inside.load(), 2u);
}

}  // namespace
}  // namespace lcoco

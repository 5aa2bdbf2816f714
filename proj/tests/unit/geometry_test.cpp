#include <random>

#include <gtest/gtest.h>

#include "lcoco/geometry.hpp"
#include "test_oracles.hpp"

namespace lcoco {
namespace {

using testing::Box;

Point pt(double a, double b) { return (Point(2) << a, b).finished(); }
Matrix diag(double a, double b) { return pt(a, b).asDiagonal(); }

TEST(ProjectBall, InteriorPointFixed) {
  EXPECT_EQ(project_ball(pt(0.5, 0), BallSet(pt(0, 0), 1.0)), pt(0.5, 0));
}

TEST(ProjectBall, RadialScaling) {
  EXPECT_EQ(project_ball(pt(3, 0), BallSet(pt(0, 0), 1.0)), pt(1, 0));
}

TEST(ProjectBall, BoundaryPointFixed) {
  EXPECT_EQ(project_ball(pt(3, 4), BallSet(pt(0, 0), 5.0)), pt(3, 4));
}

TEST(ProjectBall, RejectsBadRadius) {
  EXPECT_THROW(BallSet(pt(0, 0), 0.0), UsageError);
  EXPECT_THROW(BallSet(pt(0, 0), std::numeric_limits<double>::infinity()), UsageError);
}

TEST(ProjectSublevel, UnitDisk) {
  const SublevelSet s(QuadraticFunction::ball(pt(0, 0), 1.0));
  const Point x = project_sublevel(pt(2, 0), s);
  EXPECT_NEAR((x - pt(1, 0)).norm(), 0.0, 1e-12);
  const auto member = [&](const Vector& p) { return s.g(p) <= 0.0; };
  EXPECT_LE((x - testing::grid_project(member, pt(2, 0), Box{-2, 2, -2, 2})).norm(), 1e-2);
}

TEST(ProjectSublevel, InteriorPointFixed) {
  const SublevelSet s(QuadraticFunction::ball(pt(0, 0), 1.0));
  EXPECT_EQ(project_sublevel(pt(0.3, -0.2), s), pt(0.3, -0.2));
}

TEST(ProjectSublevel, EllipseAgainstGrid) {
  const SublevelSet s(QuadraticFunction(diag(2, 1), pt(1, 0), -1.0));
  const Point y = pt(-2, 0);
  const Point x = project_sublevel(y, s);
  // The nearest point on the x-axis side is (1 - 1, 0) = (0, 0); check against the grid anyway.
  const auto member = [&](const Vector& p) { return s.g(p) <= 0.0; };
  const Point grid = testing::grid_project(member, y, Box{-1, 3, -2, 2});
  EXPECT_LE((x - grid).norm(), 1e-2);
  EXPECT_NEAR(x(0), 0.0, 1e-12);
  EXPECT_NEAR(x(1), 0.0, 1e-12);
}

TEST(ProjectSublevel, KktConditionsOnRandomInstances) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 3;
    const QuadraticFunction g(testing::random_spd(rng, n, 0.05, 20.0), testing::random_vec(rng, n, 1.0),
                              -0.5 - std::abs(testing::random_vec(rng, 1, 1.0)(0)));
    const SublevelSet s(g);
    const Point y = testing::random_vec(rng, n, 5.0);
    const Point x = project_sublevel(y, s);
    if (g(y) <= 0.0) {
      EXPECT_EQ(x, y);
      continue;
    }
    EXPECT_LE(std::abs(g(x)), 1e-8) << k;
    EXPECT_LE(g(x), 1e-12) << k;  // on the boundary up to rounding
    const Vector r = y - x;
    const Vector grad = g.gradient(x);
    const double cosang = r.dot(grad) / (r.norm() * grad.norm());
    EXPECT_LE(std::acos(std::min(1.0, cosang)), 1e-6) << k;
  }
}

TEST(ProjectSublevel, EmptySetIsInfeasible) {
  const SublevelSet s(QuadraticFunction(diag(1, 1), pt(0, 0), 0.5));
  EXPECT_TRUE(s.empty());
  EXPECT_THROW(project_sublevel(pt(1, 1), s), InfeasibleSetError);
}

TEST(ProjectSublevel, ZeroLevelCollapsesToCenter) {
  const SublevelSet s(QuadraticFunction(diag(1, 3), pt(1, 2), 0.0));
  EXPECT_EQ(project_sublevel(pt(4, 4), s), pt(1, 2));
}

TEST(ProjectIntersection, AllPartsContainPoint) {
  IntersectionSet s{{BallSet(pt(0, 0), 1.0), BallSet(pt(0.5, 0), 1.0)}};
  EXPECT_EQ(project_intersection(pt(0.2, 0.1), s), pt(0.2, 0.1));
}

TEST(ProjectIntersection, TwoTouchingDisks) {
  IntersectionSet s{{BallSet(pt(0, 0), 1.0), BallSet(pt(1.5, 0), 1.0)}};
  const Point x = project_intersection(pt(-2, 0), s);
  EXPECT_NEAR((x - pt(0.5, 0)).norm(), 0.0, 1e-9);
  const auto member = [&](const Vector& p) { return contains(s, p); };
  EXPECT_LE((x - testing::grid_project(member, pt(-2, 0), Box{-2, 2, -2, 2})).norm(), 1e-2);
}

TEST(ProjectIntersection, ThinEllipseAndBallAgainstGrid) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    IntersectionSet s{{SublevelSet(QuadraticFunction(diag(40, 0.5), testing::random_vec(rng, 2, 0.3), -0.5)),
                       BallSet(testing::random_vec(rng, 2, 0.3), 1.0)}};
    if (!contains(s, project_intersection(pt(0, 0), s), 1e-9)) continue;
    const Point y = testing::random_vec(rng, 2, 2.0);
    const Point x = project_intersection(y, s);
    const auto member = [&](const Vector& p) { return contains(s, p); };
    EXPECT_LE((x - testing::grid_project(member, y, Box{-2, 2, -2, 2})).norm(), 1e-2) << k;
  }
}

TEST(ProjectIntersection, DykstraAgreesWithPolishedSolution) {
  std::mt19937_64 rng(32);
  GeometryTolerances raw;
  raw.polish = false;
  for (int k = 0; k < 50; ++k) {
    IntersectionSet s{{SublevelSet(QuadraticFunction(testing::random_spd(rng, 2, 0.5, 4.0),
                                                     testing::random_vec(rng, 2, 0.5), -1.0)),
                       BallSet(testing::random_vec(rng, 2, 0.5), 1.0)}};
    const Point y = testing::random_vec(rng, 2, 3.0);
    const Point polished = project_intersection(y, s);
    const Point dykstra = project_intersection(y, s, raw);
    EXPECT_LE((polished - dykstra).norm(), 1e-6) << k;
  }
}

TEST(ProjectIntersection, NonConvergenceCarriesIterate) {
  GeometryTolerances tol;
  tol.polish = false;
  tol.dykstra_max_iter = 1;
  IntersectionSet s{{BallSet(pt(0, 0), 1.0), BallSet(pt(1.5, 0), 1.0)}};
  try {
    project_intersection(pt(0.7, 3), s, tol);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.iterate().size(), 2);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(MinOverBall, CenterInside) {
  const QuadraticFunction g(diag(1, 2), pt(0.2, 0.1), -0.3);
  const auto m = min_over_ball(g, BallSet(pt(0, 0), 1.0));
  EXPECT_EQ(m.argmin, pt(0.2, 0.1));
  EXPECT_DOUBLE_EQ(m.value, -0.3);
}

TEST(MinOverBall, RadialCase) {
  const QuadraticFunction g(diag(1, 1), pt(3, 0));
  const auto m = min_over_ball(g, BallSet(pt(0, 0), 1.0));
  EXPECT_NEAR((m.argmin - pt(1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(m.value, 2.0, 1e-10);
}

TEST(MinOverBall, EmptinessUse) {
  const QuadraticFunction g(diag(1, 1), pt(3, 0), -0.5);
  const auto m = min_over_ball(g, BallSet(pt(0, 0), 1.0));
  EXPECT_NEAR(m.value, 1.5, 1e-10);
  EXPECT_GT(m.value, GeometryTolerances{}.feasibility);
}

TEST(MinOverBall, AnisotropicAgainstGrid) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 20; ++k) {
    const QuadraticFunction g(testing::random_spd(rng, 2, 0.2, 6.0), testing::random_vec(rng, 2, 3.0));
    const BallSet ball(testing::random_vec(rng, 2, 0.5), 1.0);
    const auto m = min_over_ball(g, ball);
    const auto member = [&](const Vector& p) { return contains(ball, p); };
    const Point grid = testing::grid_argmin([&](const Vector& p) { return g(p); }, member,
                                            Box{-1.5, 1.5, -1.5, 1.5});
    EXPECT_LE(m.value, g(grid) + 1e-10) << k;
    EXPECT_LE((m.argmin - grid).norm(), 2e-2) << k;
  }
}

IntersectionSet random_intersection(std::mt19937_64& rng) {
  return IntersectionSet{{SublevelSet(QuadraticFunction(testing::random_spd(rng, 2, 0.3, 5.0),
                                                        testing::random_vec(rng, 2, 0.4), -0.8)),
                          BallSet(testing::random_vec(rng, 2, 0.4), 1.2)}};
}

TEST(ProjectionProperties, IdempotentNonexpansiveAndFeasible) {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 200; ++k) {
    const BallSet ball(testing::random_vec(rng, 2, 1.0), 0.5 + k % 3);
    const SublevelSet sub(QuadraticFunction(testing::random_spd(rng, 2, 0.3, 5.0),
                                            testing::random_vec(rng, 2, 1.0), -1.0));
    const IntersectionSet inter = random_intersection(rng);
    const Point y1 = testing::random_vec(rng, 2, 4.0);
    const Point y2 = testing::random_vec(rng, 2, 4.0);
    const auto check = [&](auto&& proj, const char* what) {
      const Point p1 = proj(y1);
      const Point p2 = proj(y2);
      EXPECT_LE((proj(p1) - p1).norm(), 1e-10) << what << ' ' << k;
      EXPECT_LE((p1 - p2).norm(), (y1 - y2).norm() + 1e-10) << what << ' ' << k;
    };
    check([&](const Point& y) { return project_ball(y, ball); }, "ball");
    check([&](const Point& y) { return project_sublevel(y, sub); }, "sublevel");
    check([&](const Point& y) { return project_intersection(y, inter); }, "intersection");
    EXPECT_LE((project_ball(y1, ball) - ball.center).norm(), ball.radius + 1e-12);
    EXPECT_LE(sub.g(project_sublevel(y1, sub)), 1e-8);
  }
}

TEST(ProjectionProperties, ProjectingWindowCenterEqualsSublevelProjection) {
  std::mt19937_64 rng(61);
  int tested = 0;
  for (int k = 0; k < 600; ++k) {
    const SublevelSet sub(QuadraticFunction(testing::random_spd(rng, 2, 0.3, 5.0),
                                            testing::random_vec(rng, 2, 1.0), -0.5));
    const Point a = testing::random_vec(rng, 2, 2.5);
    const double dist = 0.5;
    const auto m = min_over_ball(sub.g, BallSet(a, dist));
    if (m.value > GeometryTolerances{}.feasibility) continue;
    IntersectionSet window{{BallSet(a, dist), sub}};
    EXPECT_LE((project_intersection(a, window) - project_sublevel(a, sub)).norm(), 1e-8) << k;
    ++tested;
  }
  EXPECT_GT(tested, 50);
}

TEST(ProjectionProperties, EmptinessCrossCheck) {
  std::mt19937_64 rng(62);
  for (int k = 0; k < 200; ++k) {
    const SublevelSet sub(QuadraticFunction(testing::random_spd(rng, 2, 0.3, 5.0),
                                            testing::random_vec(rng, 2, 1.0), -0.5));
    const Point a = testing::random_vec(rng, 2, 3.0);
    const double dist = 0.4;
    const bool empty = min_over_ball(sub.g, BallSet(a, dist)).value > 1e-12;
    const double gap = (project_sublevel(a, sub) - a).norm();
    if (std::abs(gap - dist) < 1e-6) continue;
    EXPECT_EQ(empty, gap > dist) << k;
  }
}

}  // namespace
}  // namespace lcoco

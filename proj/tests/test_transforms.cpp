#include <doctest.h>

#include "anchor/core.hpp"
#include "anchor/problems.hpp"
#include "anchor/transforms.hpp"
#include "test_support.hpp"

using namespace anchor;
using namespace anchor::transforms;

namespace {

FixedPointMap scaling_map(double factor, Eigen::Index dim, double gamma) {
  FixedPointMap T;
  T.dimension = dim;
  T.gamma = gamma;
  T.evaluate = [factor](const Point& y) -> Point { return factor * y; };
  return T;
}

}  // namespace

TEST_CASE("resolvent_from_contraction: identity stays identity") {
  auto A = resolvent_from_contraction(scaling_map(1.0, 2, 1.0), 1.0);
  CHECK(A.mu == 0.0);
  Point y(2);
  y << 0.3, -2.0;
  CHECK((A.resolve(y) - y).norm() == 0.0);
}

TEST_CASE("resolvent_from_contraction matches the analytic affine resolvent") {
  // T = (1/(1+2mu)) I with mu = 0.5 is 1/2-Lipschitz; the induced operator is
  // mu I whose resolvent scales by 2/3.
  auto A = resolvent_from_contraction(scaling_map(0.5, 2, 2.0), 2.0);
  CHECK(A.mu == doctest::Approx(0.5));
  Point y(2);
  y << 3.0, -1.5;
  CHECK((A.resolve(y) - (2.0 / 3.0) * y).norm() < 1e-15);
}

TEST_CASE("resolvent_from_contraction rejects gamma < 1") {
  CHECK_THROWS_AS(resolvent_from_contraction(scaling_map(0.5, 2, 2.0), 0.9),
                  ContractViolation);
  CHECK_THROWS_AS(contraction_from_resolvent(ResolventOracle{}, -0.1),
                  ContractViolation);
}

TEST_CASE("round trip through the equivalence is pointwise identity") {
  const double theta = 0.7;
  const double gamma = 1.3;
  auto T = problems::rotation_contraction(theta, gamma);
  auto A = resolvent_from_contraction(T, gamma);
  auto T2 = contraction_from_resolvent(A, (gamma - 1.0) / 2.0);
  CHECK(T2.gamma == doctest::Approx(gamma));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Point y = testing::random_point(rng, 2, 3.0);
    CHECK((T2.evaluate(y) - T.evaluate(y)).norm() < 1e-12);
  }
}

TEST_CASE("contraction_from_resolvent: zero operator gives the identity") {
  ResolventOracle A;
  A.dimension = 3;
  A.mu = 0.0;
  A.resolve = [](const Point& y) { return y; };
  auto T = contraction_from_resolvent(A, 0.0);
  CHECK(T.gamma == 1.0);
  Point y(3);
  y << 1.0, 2.0, 3.0;
  CHECK((T.evaluate(y) - y).norm() == 0.0);
}

TEST_CASE("contraction_from_resolvent: A = I gives y/3") {
  ResolventOracle A;
  A.dimension = 2;
  A.mu = 1.0;
  A.resolve = [](const Point& y) -> Point { return 0.5 * y; };
  auto T = contraction_from_resolvent(A, 1.0);
  CHECK(T.gamma == doctest::Approx(3.0));
  Point y(2);
  y << 6.0, -3.0;
  CHECK((T.evaluate(y) - y / 3.0).norm() < 1e-15);
}

TEST_CASE("fixed points of the induced contraction are zeros and back") {
  // The toy operator has its unique zero at the origin.
  auto A = problems::toy_monotone(0.1, 50);
  auto T = contraction_from_resolvent(A, 0.1);
  CHECK(T.evaluate(Point::Zero(2)).norm() <= 1e-15);

  auto A2 = resolvent_from_contraction(T, 1.2);
  CHECK((A2.resolve(Point::Zero(2)) - Point::Zero(2)).norm() <= 1e-15);
}

TEST_CASE("averaged_from_contraction basic values") {
  auto G1 = averaged_from_contraction(scaling_map(1.0, 2, 1.0), 1.0);
  Point y(2);
  y << 4.0, 1.0;
  CHECK(G1.evaluate(y).norm() == 0.0);

  auto G2 = averaged_from_contraction(scaling_map(-1.0, 2, 1.0), 1.0);
  CHECK((G2.evaluate(y) - y).norm() == 0.0);

  auto G3 = averaged_from_contraction(scaling_map(0.5, 2, 2.0), 2.0);
  CHECK((G3.evaluate(y) - y / 3.0).norm() < 1e-15);
  CHECK_THROWS_AS(averaged_from_contraction(scaling_map(0.5, 2, 2.0), 0.99),
                  ContractViolation);
}

TEST_CASE("averagedness inequality holds on sampled pairs") {
  const double gamma = 2.0;
  auto T = problems::rotation_contraction(0.9, gamma);
  auto G = averaged_from_contraction(T, gamma);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Point x = testing::random_point(rng, 2, 2.0);
    const Point y = testing::random_point(rng, 2, 2.0);
    const Point dg = G.evaluate(x) - G.evaluate(y);
    const Point dxy = x - y;
    const double lhs = dg.squaredNorm() +
                       (gamma - 1.0) / (gamma + 1.0) * dxy.squaredNorm();
    const double rhs = 2.0 * gamma / (1.0 + gamma) * dg.dot(dxy);
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("residual correspondence between matched operators") {
  const double mu = 0.35;
  auto A = problems::random_linear_monotone(5, mu, 21);
  auto T = contraction_from_resolvent(A, mu);
  const double factor = 1.0 + 1.0 / (1.0 + 2.0 * mu);
  std::mt19937_64 rng(22);
  for (int i = 0; i < 200; ++i) {
    const Point y = testing::random_point(rng, 5, 2.0);
    const Point lhs = y - T.evaluate(y);
    const Point rhs = factor * (y - A.resolve(y));
    CHECK((lhs - rhs).norm() < 1e-12);
  }
}

TEST_CASE("induced operator is (gamma-1)/2-strongly monotone on graph pairs") {
  const double gamma = 1.8;
  auto T = problems::rotation_contraction(0.5, gamma);
  auto A = resolvent_from_contraction(T, gamma);
  const double mu = (gamma - 1.0) / 2.0;
  std::mt19937_64 rng(33);
  for (int i = 0; i < 500; ++i) {
    const Point ya = testing::random_point(rng, 2, 2.0);
    const Point yb = testing::random_point(rng, 2, 2.0);
    auto [xa, ua] = resolvent_residual(A, ya);
    auto [xb, ub] = resolvent_residual(A, yb);
    CHECK((ua - ub).dot(xa - xb) >= mu * (xa - xb).squaredNorm() - 1e-10);
  }
}

#include "anchor/transforms.hpp"

namespace anchor::transforms {

ResolventOracle resolvent_from_contraction(const FixedPointMap& T, double gamma) {
  if (gamma < 1.0) {
    throw ContractViolation("resolvent_from_contraction: gamma must be >= 1");
  }
  ResolventOracle out;
  out.dimension = T.dimension;
  out.mu = (gamma - 1.0) / 2.0;
  out.resolve = [T, gamma](const Point& y) -> Point {
    return (gamma * T.evaluate(y) + y) / (1.0 + gamma);
  };
  return out;
}

FixedPointMap contraction_from_resolvent(const ResolventOracle& A, double mu) {
  if (mu < 0.0) {
    throw ContractViolation("contraction_from_resolvent: mu must be >= 0");
  }
  FixedPointMap out;
  out.dimension = A.dimension;
  out.gamma = 1.0 + 2.0 * mu;
  const double c = 1.0 / (1.0 + 2.0 * mu);
  out.evaluate = [A, c](const Point& y) -> Point {
    return (1.0 + c) * A.resolve(y) - c * y;
  };
  return out;
}

FixedPointMap averaged_from_contraction(const FixedPointMap& T, double gamma) {
  if (gamma < 1.0) {
    throw ContractViolation("averaged_from_contraction: gamma must be >= 1");
  }
  FixedPointMap out;
  out.dimension = T.dimension;
  out.gamma = 1.0;
  const double scale = gamma / (1.0 + gamma);
  out.evaluate = [T, scale](const Point& y) -> Point {
    return scale * (y - T.evaluate(y));
  };
  return out;
}

}  // namespace anchor::transforms

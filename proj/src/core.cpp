#include "anchor/core.hpp"

namespace anchor {

Point fixed_point_residual(const FixedPointMap& T, const Point& y) {
  require_dimension(T.dimension, y, "fixed_point_residual");
  return y - T.evaluate(y);
}

ResolventResidual resolvent_residual(const ResolventOracle& A, const Point& y) {
  require_dimension(A.dimension, y, "resolvent_residual");
  ResolventResidual out;
  out.x = A.resolve(y);
  out.r = y - out.x;
  return out;
}

double metric_norm_sq(const MetricMatrix& M, const Point& v, double tol) {
  require_dimension(M.dimension, v, "metric_norm_sq");
  const double q = v.dot(M.apply(v));
  const double scale = std::max(1.0, v.squaredNorm());
  if (q < -tol * scale) {
    throw NumericsError("metric_norm_sq: quadratic form is negative (" +
                        std::to_string(q) + "); metric is not PSD");
  }
  return q < 0.0 ? 0.0 : q;
}

double residual_norm_sq(const Point& r, const MetricMatrix* metric) {
  return metric == nullptr ? r.squaredNorm() : metric_norm_sq(*metric, r);
}

}  // namespace anchor

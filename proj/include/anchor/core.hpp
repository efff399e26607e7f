#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anchor {

/// Dense real vector holding an iterate or residual.
using Point = Eigen::VectorXd;

/// Thrown when a caller violates an interface precondition (dimension
/// mismatch, parameter out of range, malformed input).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation goes numerically bad: non-finite iterates,
/// schedule overflow, root finders failing to converge, indefinite metrics.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An evaluatable self-map T of R^n with a declared Lipschitz modulus 1/gamma
/// (gamma >= 1, so gamma = 1 means nonexpansive and gamma > 1 contractive).
/// The modulus is carried as trusted metadata; it is checked statistically in
/// tests, never enforced at evaluation time.
struct FixedPointMap {
  std::function<Point(const Point&)> evaluate;
  double gamma = 1.0;
  Eigen::Index dimension = 0;

  Point operator()(const Point& y) const { return evaluate(y); }
};

/// Resolvent access to a maximal mu-strongly monotone operator A: resolve(y)
/// computes (I + A)^{-1} y. Like FixedPointMap, mu is trusted metadata.
struct ResolventOracle {
  std::function<Point(const Point&)> resolve;
  double mu = 0.0;
  Eigen::Index dimension = 0;
};

/// A symmetric positive semidefinite linear map used to measure residuals of
/// operators that are nonexpansive in a non-Euclidean norm.
struct MetricMatrix {
  std::function<Point(const Point&)> apply;
  Eigen::Index dimension = 0;
};

/// One row of a solve trace. `point` is the iterate the residual belongs to
/// (the y-iterate for operator methods, the x-iterate for proximal methods);
/// `anchor_point` additionally keeps the proximal methods' extrapolated
/// y-sequence so that method-equivalence checks can compare it directly.
struct TraceRecord {
  int iter = 0;
  Point point;
  std::optional<Point> anchor_point;
  Point residual;
  double residual_sq = 0.0;
  std::optional<double> dist_sq;
  std::optional<double> lyapunov;
  std::optional<double> bound;
  std::int64_t wall_ns = 0;
};

/// Per-iteration records of one solve, indices strictly increasing.
struct IterationTrace {
  std::string solver;
  std::string norm = "euclidean";  // norm in which residual_sq is taken
  Eigen::Index dimension = 0;
  Point start;                     // the y0 the solve was launched from
  std::vector<TraceRecord> records;
  std::vector<int> restart_iters;  // global iterations ending a restart leg

  const TraceRecord& back() const { return records.back(); }
  double final_residual_sq() const { return records.back().residual_sq; }
};

/// Options shared by all solvers. A known solution enables the distance and
/// bound columns; it never influences the iterates themselves. When `metric`
/// is set, residual_sq is the squared metric norm of the residual.
struct SolveOptions {
  std::optional<Point> known_solution;
  const MetricMatrix* metric = nullptr;
  bool record_points = true;
  bool with_lyapunov = false;
};

inline void require_dimension(Eigen::Index expected, const Point& p,
                              const char* what) {
  if (p.size() != expected) {
    throw ContractViolation(std::string(what) + ": dimension mismatch, expected " +
                            std::to_string(expected) + ", got " +
                            std::to_string(p.size()));
  }
}

inline void require_finite(const Point& p, const std::string& context) {
  if (!p.allFinite()) {
    throw NumericsError("non-finite value in " + context);
  }
}

/// y - T(y).
Point fixed_point_residual(const FixedPointMap& T, const Point& y);

/// x = J_A y and r = y - x; r is an element of A x by construction, and
/// x + r = y exactly.
struct ResolventResidual {
  Point x;
  Point r;
};
ResolventResidual resolvent_residual(const ResolventOracle& A, const Point& y);

/// <Mv, v>, clamped to 0 when within -tol of zero. A value below -tol means
/// the metric is not positive semidefinite and signals a configuration error.
double metric_norm_sq(const MetricMatrix& M, const Point& v, double tol = 1e-9);

/// Squared residual in the solve's norm (Euclidean, or `metric` when given).
double residual_norm_sq(const Point& r, const MetricMatrix* metric);

}  // namespace anchor

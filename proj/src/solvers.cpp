#include "anchor/solvers.hpp"

#include <chrono>
#include <cmath>

namespace anchor::solvers {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

struct Recorder {
  IterationTrace trace;
  const SolveOptions& opts;
  Clock::time_point t0 = Clock::now();
  double dist0_sq = 0.0;  // ||y0 - solution||^2 in the solve norm

  Recorder(std::string solver, Eigen::Index dim, const Point& y0,
           const SolveOptions& o)
      : opts(o) {
    trace.solver = std::move(solver);
    trace.dimension = dim;
    trace.start = y0;
    if (o.metric != nullptr) trace.norm = "metric";
    if (o.known_solution) {
      require_dimension(dim, *o.known_solution, trace.solver.c_str());
      dist0_sq = residual_norm_sq(y0 - *o.known_solution, o.metric);
    }
  }

  void push(int k, const Point& point, const Point& residual,
            std::optional<double> bound,
            const Point* anchor_point = nullptr) {
    TraceRecord rec;
    rec.iter = k;
    rec.residual_sq = residual_norm_sq(residual, opts.metric);
    if (opts.known_solution) {
      rec.dist_sq = residual_norm_sq(point - *opts.known_solution, opts.metric);
    }
    rec.bound = bound;
    if (opts.record_points) {
      rec.point = point;
      rec.residual = residual;
      if (anchor_point != nullptr) rec.anchor_point = *anchor_point;
    }
    rec.wall_ns = elapsed_ns(t0);
    trace.records.push_back(std::move(rec));
  }
};

void check_lambda(double lambda, int k, const char* solver) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ContractViolation(std::string(solver) + ": lambda_" +
                            std::to_string(k) + " = " + std::to_string(lambda) +
                            " outside (0,1)");
  }
}

void check_iterate(const Point& y, int k, const char* solver) {
  if (!y.allFinite()) {
    throw NumericsError(std::string(solver) + ": non-finite iterate at iteration " +
                        std::to_string(k));
  }
}

// Shared driver for the three classical operator iterations, which differ
// only in how y_k combines y_{k-1}, T y_{k-1}, and y_0.
template <typename Step>
IterationTrace operator_iteration(const char* name, const FixedPointMap& T,
                                  const Point& y0, int N,
                                  const SolveOptions& opts, Step step) {
  require_dimension(T.dimension, y0, name);
  if (N < 0) throw ContractViolation(std::string(name) + ": N must be >= 0");
  require_finite(y0, std::string(name) + " starting point");

  Recorder rec(name, T.dimension, y0, opts);
  Point y = y0;
  Point Ty = T.evaluate(y);
  check_iterate(Ty, 0, name);
  rec.push(0, y, y - Ty, std::nullopt);
  for (int k = 1; k <= N; ++k) {
    y = step(k, y, Ty);
    check_iterate(y, k, name);
    Ty = T.evaluate(y);
    check_iterate(Ty, k, name);
    rec.push(k, y, y - Ty, std::nullopt);
  }
  return rec.trace;
}

}  // namespace

PhiSequence::PhiSequence(double gamma, int max_index)
    : gamma_(gamma), max_index_(max_index) {
  if (gamma < 1.0) throw ContractViolation("PhiSequence: gamma must be >= 1");
  if (max_index < 0) throw ContractViolation("PhiSequence: negative index");
  if (2.0 * max_index * std::log10(gamma) >= 300.0) {
    throw NumericsError("schedule overflow: gamma^(2N) exceeds 1e300 for gamma=" +
                        std::to_string(gamma) + ", N=" + std::to_string(max_index));
  }
  values_.resize(static_cast<size_t>(max_index) + 1);
  const double g2 = gamma * gamma;
  double prev = 0.0;  // phi_{-1}
  for (int k = 0; k <= max_index; ++k) {
    prev = g2 * prev + 1.0;
    values_[static_cast<size_t>(k)] = prev;
  }
}

double PhiSequence::phi(int k) const {
  if (k == -1) return 0.0;
  if (k < -1 || k > max_index_) {
    throw ContractViolation("PhiSequence: index " + std::to_string(k) +
                            " out of range");
  }
  return values_[static_cast<size_t>(k)];
}

double geometric_sum(double gamma, int terms) {
  if (terms <= 0) return 0.0;
  if (gamma == 1.0) return static_cast<double>(terms);
  // (gamma^terms - 1)/(gamma - 1), kept accurate for gamma near 1.
  const double gm1 = gamma - 1.0;
  return std::expm1(terms * std::log1p(gm1)) / gm1;
}

LambdaSchedule classic_halpern_lambda() {
  return [](int k) { return 1.0 / (k + 1.0); };
}

IterationTrace picard(const FixedPointMap& T, const Point& y0, int N,
                      const SolveOptions& opts) {
  return operator_iteration("picard", T, y0, N, opts,
                            [](int, const Point&, const Point& Ty) { return Ty; });
}

IterationTrace km(const FixedPointMap& T, const Point& y0,
                  const LambdaSchedule& lambda, int N, const SolveOptions& opts) {
  return operator_iteration(
      "km", T, y0, N, opts, [&lambda](int k, const Point& y, const Point& Ty) {
        const double lk = lambda(k);
        check_lambda(lk, k, "km");
        return Point(lk * y + (1.0 - lk) * Ty);
      });
}

IterationTrace halpern(const FixedPointMap& T, const Point& y0,
                       const LambdaSchedule& lambda, int N,
                       const SolveOptions& opts) {
  return operator_iteration(
      "halpern", T, y0, N, opts,
      [&lambda, &y0](int k, const Point&, const Point& Ty) {
        const double lk = lambda(k);
        check_lambda(lk, k, "halpern");
        return Point(lk * y0 + (1.0 - lk) * Ty);
      });
}

IterationTrace oc_halpern(const FixedPointMap& T, double gamma, const Point& y0,
                          int N, const SolveOptions& opts) {
  if (gamma < 1.0) throw ContractViolation("oc_halpern: gamma must be >= 1");
  require_dimension(T.dimension, y0, "oc_halpern");
  if (N < 0) throw ContractViolation("oc_halpern: N must be >= 0");
  require_finite(y0, "oc_halpern starting point");
  const PhiSequence phi(gamma, std::max(N, 0));

  Recorder rec("oc_halpern", T.dimension, y0, opts);
  const double rate_factor = (1.0 + 1.0 / gamma) * (1.0 + 1.0 / gamma);
  auto bound_at = [&](int k) -> std::optional<double> {
    if (!opts.known_solution) return std::nullopt;
    const double s = geometric_sum(gamma, k + 1);
    return rate_factor / (s * s) * rec.dist0_sq;
  };

  Point y = y0;
  Point Ty = T.evaluate(y);
  check_iterate(Ty, 0, "oc_halpern");
  rec.push(0, y, y - Ty, bound_at(0));
  for (int k = 1; k <= N; ++k) {
    const double inv_phi = 1.0 / phi.phi(k);
    y = (1.0 - inv_phi) * Ty + inv_phi * y0;
    check_iterate(y, k, "oc_halpern");
    Ty = T.evaluate(y);
    check_iterate(Ty, k, "oc_halpern");
    rec.push(k, y, y - Ty, bound_at(k));
  }
  return rec.trace;
}

namespace {

// Both OS-PPM forms share everything except the y-extrapolation.
template <typename Extrapolate>
IterationTrace os_ppm_impl(const char* name, const ResolventOracle& A, double mu,
                           const Point& y0, int N, const SolveOptions& opts,
                           Extrapolate extrapolate) {
  if (mu < 0.0) throw ContractViolation(std::string(name) + ": mu must be >= 0");
  require_dimension(A.dimension, y0, name);
  if (N < 1) throw ContractViolation(std::string(name) + ": N must be >= 1");
  require_finite(y0, std::string(name) + " starting point");

  const double gamma = 1.0 + 2.0 * mu;
  const PhiSequence phi(gamma, N);
  Recorder rec(name, A.dimension, y0, opts);
  auto bound_at = [&](int k) -> std::optional<double> {
    if (!opts.known_solution) return std::nullopt;
    const double s = geometric_sum(gamma, k);
    return rec.dist0_sq / (s * s);
  };

  Point x_prev = y0;   // x_{k-1}
  Point y_prev = y0;   // y_{k-1}
  Point y_prev2 = y0;  // y_{k-2}
  for (int k = 1; k <= N; ++k) {
    Point x = A.resolve(y_prev);
    check_iterate(x, k, name);
    Point r = y_prev - x;
    Point y = extrapolate(phi, k, x, x_prev, y_prev, y_prev2);
    check_iterate(y, k, name);
    rec.push(k, x, r, bound_at(k), &y);
    y_prev2 = y_prev;
    y_prev = std::move(y);
    x_prev = std::move(x);
  }
  return rec.trace;
}

}  // namespace

IterationTrace os_ppm(const ResolventOracle& A, double mu, const Point& y0,
                      int N, const SolveOptions& opts) {
  const double gamma = 1.0 + 2.0 * mu;
  return os_ppm_impl(
      "os_ppm", A, mu, y0, N, opts,
      [mu, gamma](const PhiSequence& phi, int k, const Point& x,
                  const Point& x_prev, const Point& y_prev,
                  const Point& y_prev2) {
        const double pk = phi.phi(k);
        const double c1 = (phi.phi(k - 1) - 1.0) / pk;
        const double c2 = 2.0 * mu * phi.phi(k - 1) / pk;
        const double c3 = gamma * phi.phi(k - 2) / pk;
        return Point(x + c1 * (x - x_prev) - c2 * (y_prev - x) +
                     c3 * (y_prev2 - x_prev));
      });
}

IterationTrace os_ppm_anchored(const ResolventOracle& A, double mu,
                               const Point& y0, int N, const SolveOptions& opts) {
  const double gamma = 1.0 + 2.0 * mu;
  return os_ppm_impl(
      "os_ppm_anchored", A, mu, y0, N, opts,
      [gamma, &y0](const PhiSequence& phi, int k, const Point& x, const Point&,
                   const Point& y_prev, const Point&) {
        const double inv_phi = 1.0 / phi.phi(k);
        return Point((1.0 - inv_phi) *
                         ((1.0 + 1.0 / gamma) * x - (1.0 / gamma) * y_prev) +
                     inv_phi * y0);
      });
}

IterationTrace ppm(const ResolventOracle& A, const Point& y0, int N,
                   const SolveOptions& opts) {
  require_dimension(A.dimension, y0, "ppm");
  if (N < 1) throw ContractViolation("ppm: N must be >= 1");
  require_finite(y0, "ppm starting point");

  Recorder rec("ppm", A.dimension, y0, opts);
  Point x_prev = y0;
  for (int k = 1; k <= N; ++k) {
    Point x = A.resolve(x_prev);
    check_iterate(x, k, "ppm");
    rec.push(k, x, x_prev - x, std::nullopt);
    x_prev = std::move(x);
  }
  return rec.trace;
}

}  // namespace anchor::solvers

#pragma once

#include "anchor/core.hpp"

namespace anchor::solvers {

/// The anchoring coefficient sequence phi_k = sum_{i=0}^{k} gamma^{2i},
/// evaluated through the recurrence phi_k = gamma^2 phi_{k-1} + 1 with
/// phi_{-1} = 0. Construction fails with "schedule overflow" once
/// gamma^(2 max_index) would exceed 1e300, since the update coefficients
/// degenerate past that point.
class PhiSequence {
 public:
  PhiSequence(double gamma, int max_index);

  double gamma() const { return gamma_; }
  int max_index() const { return max_index_; }

  /// phi_k for k in [-1, max_index].
  double phi(int k) const;

 private:
  double gamma_;
  int max_index_;
  std::vector<double> values_;  // phi_0 .. phi_max
};

/// sum_{j=0}^{terms-1} gamma^j.
double geometric_sum(double gamma, int terms);

/// Relaxation schedule k -> lambda_k in (0,1); consulted for k = 1..N when
/// forming the k-th iterate.
using LambdaSchedule = std::function<double(int)>;

/// The classical anchoring schedule lambda_k = 1/(k+1).
LambdaSchedule classic_halpern_lambda();

/// y_{k+1} = T y_k. Records iterates y_0..y_N with their residuals.
IterationTrace picard(const FixedPointMap& T, const Point& y0, int N,
                      const SolveOptions& opts = {});

/// y_k = lambda_k y_{k-1} + (1 - lambda_k) T y_{k-1}.
IterationTrace km(const FixedPointMap& T, const Point& y0,
                  const LambdaSchedule& lambda, int N,
                  const SolveOptions& opts = {});

/// y_k = lambda_k y_0 + (1 - lambda_k) T y_{k-1}.
IterationTrace halpern(const FixedPointMap& T, const Point& y0,
                       const LambdaSchedule& lambda, int N,
                       const SolveOptions& opts = {});

/// Anchored iteration with the exact-optimal schedule for 1/gamma-Lipschitz T:
///   y_k = (1 - 1/phi_k) T y_{k-1} + (1/phi_k) y_0.
/// With gamma = 1 this is the optimized Halpern method. When a known solution
/// is supplied, the trace carries the matching worst-case bound
///   (1 + 1/gamma)^2 (1 / sum_{j=0}^{k} gamma^j)^2 ||y0 - y*||^2
/// alongside each squared residual.
IterationTrace oc_halpern(const FixedPointMap& T, double gamma, const Point& y0,
                          int N, const SolveOptions& opts = {});

/// Accelerated proximal point method for a maximal mu-strongly monotone
/// operator, with gamma = 1 + 2 mu and phi as above:
///   x_k = J_A y_{k-1}
///   y_k = x_k + ((phi_{k-1}-1)/phi_k) (x_k - x_{k-1})
///             - (2 mu phi_{k-1}/phi_k) (y_{k-1} - x_k)
///             + ((1+2mu) phi_{k-2}/phi_k) (y_{k-2} - x_{k-1})
/// starting from x_0 = y_0 = y_{-1}. Record k holds x_k, the residual
/// y_{k-1} - x_k, and (when a solution is known) the bound
///   (1 / sum_{j=0}^{k-1} gamma^j)^2 ||y0 - x*||^2.
/// With mu = 0 this reduces to the accelerated proximal point method.
IterationTrace os_ppm(const ResolventOracle& A, double mu, const Point& y0,
                      int N, const SolveOptions& opts = {});

/// Same contract as os_ppm, using the algebraically equivalent anchored form
///   y_k = (1 - 1/phi_k) { (1 + 1/gamma) x_k - (1/gamma) y_{k-1} } + (1/phi_k) y_0.
IterationTrace os_ppm_anchored(const ResolventOracle& A, double mu,
                               const Point& y0, int N,
                               const SolveOptions& opts = {});

/// Plain proximal point method x_{k+1} = J_A x_k; record k holds x_k and the
/// residual x_{k-1} - x_k.
IterationTrace ppm(const ResolventOracle& A, const Point& y0, int N,
                   const SolveOptions& opts = {});

}  // namespace anchor::solvers

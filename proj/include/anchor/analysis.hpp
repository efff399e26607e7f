#pragma once

#include "anchor/core.hpp"

namespace anchor::analysis {

/// Everything the Lyapunov certificate of the accelerated proximal point
/// method consumes at step k: the iterate x_k, its residual r_k = y_{k-1} -
/// x_k, the starting point, a known solution, and the strong monotonicity
/// parameter.
struct LyapunovInputs {
  int k = 0;
  Point x_k;
  Point residual;
  Point y0;
  Point x_star;
  double mu = 0.0;
};

enum class LyapunovForm { primary, alternate };

/// Value of the certificate V^k. By definition V^0 = 2 ||y0 - x*||^2.
/// The primary form is the three-bracket expression
///   V^k = (1 + g^-k) [ s_k^2 ||r||^2
///                      + 2 s_k <r - mu (x - x*), x - x*>
///                      + g^-k || s_k r - g^k (x - x*) + (x - y0) ||^2 ]
///         + (1 - g^-k) ||y0 - x*||^2
/// with g = 1 + 2 mu and s_k = sum_{n=0}^{k-1} g^n; the alternate form is
///   V^k = g^-2k (1+g)^2 phi_{k-1}^2 ||r||^2
///         + 2 g^-2k (1+g) phi_{k-1} <r - mu (x - y0), x - y0>
///         + 2 ||y0 - x*||^2.
/// The two agree identically; the alternate form is evaluated with g^-k
/// folded against phi_{k-1} through (1+g)phi_{k-1}/g^k = (1+g^-k) s_k so that
/// neither factor overflows on its own.
double lyapunov_value(const LyapunovInputs& in,
                      LyapunovForm form = LyapunovForm::primary);

/// Fill the lyapunov column of a proximal trace (records must carry points
/// and residuals). V^k is evaluated at each record in the primary form.
void annotate_lyapunov(IterationTrace& trace, const Point& x_star, double mu,
                       LyapunovForm form = LyapunovForm::primary);

/// (1 + 1/gamma)^2 (1 / sum_{k=0}^{N} gamma^k)^2 dist0^2 -- the anchored
/// method's guarantee after N operator evaluations, equal to the matching
/// worst-case value.
double upper_bound_contraction(int N, double gamma, double dist0);

/// (1 / sum_{k=0}^{N-1} (1+2mu)^k)^2 dist0^2 -- the accelerated proximal
/// point guarantee after N resolvent evaluations.
double upper_bound_monotone(int N, double mu, double dist0);

/// Distance and residual guarantees of the plain proximal point method under
/// uniform monotonicity with parameters mu > 0, alpha > 1:
///   dist_bound     = C / N^(2/(alpha-1))
///   residual_bound = 2^((alpha+3)/(alpha-1)) C / N^((alpha+1)/(alpha-1))
/// where C = max{ ((2^(alpha/(alpha-1)) - 2)/mu)^(2/(alpha-1)), dist0^2 }.
struct PpmUniformBounds {
  double dist_bound = 0.0;
  double residual_bound = 0.0;
};
PpmUniformBounds ppm_uniform_bounds(int N, double mu, double alpha, double dist0);

/// The restarted schedule's guarantee for total budget N:
///   { (e^b - 1)/(lambda e^{2b}) (N - 2 - (1/b) log((e^b - 1)/(lambda e^b) (N-1) + 1))
///     + e^-b }^(-2 alpha/(alpha-1)) dist0^2
/// with lambda = (e/mu)^(1/alpha) dist0^(1 - 1/alpha) and b = 1 - 1/alpha.
/// Throws once the braced expression is not positive (budget below the
/// asymptotic regime).
double restarted_bound(int N, double mu, double alpha, double dist0);

/// Least-squares slope of log(residual_sq) against log(iter) over records
/// with lo <= iter <= hi. Zero residuals inside the window mean the run
/// converged exactly and the log-log fit is undefined; reported as an error.
double rate_fit(const IterationTrace& trace, int lo, int hi);

/// rate_fit over the trailing 80% of the trace (the first 20% of iterations
/// is transient and pollutes slope estimates).
double rate_fit(const IterationTrace& trace);

}  // namespace anchor::analysis

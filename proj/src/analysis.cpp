#include "anchor/analysis.hpp"

#include <cmath>

#include "anchor/solvers.hpp"

namespace anchor::analysis {

double lyapunov_value(const LyapunovInputs& in, LyapunovForm form) {
  if (in.k < 0) throw ContractViolation("lyapunov_value: k must be >= 0");
  if (in.mu < 0.0) throw ContractViolation("lyapunov_value: mu must be >= 0");
  const double d0_sq = (in.y0 - in.x_star).squaredNorm();
  if (in.k == 0) return 2.0 * d0_sq;

  require_dimension(in.y0.size(), in.x_k, "lyapunov_value");
  require_dimension(in.y0.size(), in.residual, "lyapunov_value");
  require_dimension(in.y0.size(), in.x_star, "lyapunov_value");

  const double gamma = 1.0 + 2.0 * in.mu;
  const double s = solvers::geometric_sum(gamma, in.k);  // sum_{n<k} gamma^n
  const double g_mk = std::pow(gamma, -in.k);
  const Point& r = in.residual;
  const Point dx_star = in.x_k - in.x_star;
  const Point dy0 = in.x_k - in.y0;

  if (form == LyapunovForm::primary) {
    const double g_k = std::pow(gamma, in.k);
    const Point combo = s * r - g_k * dx_star + dy0;
    const double bracket = s * s * r.squaredNorm() +
                           2.0 * s * (r - in.mu * dx_star).dot(dx_star) +
                           g_mk * combo.squaredNorm();
    return (1.0 + g_mk) * bracket + (1.0 - g_mk) * d0_sq;
  }

  // (1+gamma) phi_{k-1} / gamma^k == (1 + gamma^-k) s, so the alternate form
  // never touches phi and gamma^-2k separately.
  const double a = (1.0 + g_mk) * s;
  return a * a * r.squaredNorm() +
         2.0 * a * g_mk * (r - in.mu * dy0).dot(dy0) + 2.0 * d0_sq;
}

void annotate_lyapunov(IterationTrace& trace, const Point& x_star, double mu,
                       LyapunovForm form) {
  for (auto& rec : trace.records) {
    if (rec.point.size() == 0 || rec.residual.size() == 0) {
      throw ContractViolation(
          "annotate_lyapunov: trace lacks recorded points/residuals");
    }
    LyapunovInputs in{rec.iter, rec.point, rec.residual, trace.start, x_star, mu};
    rec.lyapunov = lyapunov_value(in, form);
  }
}

double upper_bound_contraction(int N, double gamma, double dist0) {
  if (N < 0) throw ContractViolation("upper_bound_contraction: N must be >= 0");
  if (gamma < 1.0)
    throw ContractViolation("upper_bound_contraction: gamma must be >= 1");
  const double s = solvers::geometric_sum(gamma, N + 1);
  const double f = (1.0 + 1.0 / gamma) / s;
  return f * f * dist0 * dist0;
}

double upper_bound_monotone(int N, double mu, double dist0) {
  if (N < 1) throw ContractViolation("upper_bound_monotone: N must be >= 1");
  if (mu < 0.0) throw ContractViolation("upper_bound_monotone: mu must be >= 0");
  const double s = solvers::geometric_sum(1.0 + 2.0 * mu, N);
  return dist0 * dist0 / (s * s);
}

PpmUniformBounds ppm_uniform_bounds(int N, double mu, double alpha,
                                    double dist0) {
  if (mu <= 0.0) throw ContractViolation("ppm_uniform_bounds: mu must be > 0");
  if (alpha <= 1.0)
    throw ContractViolation("ppm_uniform_bounds: alpha must be > 1");
  if (N < 1) throw ContractViolation("ppm_uniform_bounds: N must be >= 1");
  const double q = 1.0 / (alpha - 1.0);
  const double C = std::max(
      std::pow((std::pow(2.0, alpha * q) - 2.0) / mu, 2.0 * q), dist0 * dist0);
  PpmUniformBounds out;
  out.dist_bound = C / std::pow(N, 2.0 * q);
  out.residual_bound =
      std::pow(2.0, (alpha + 3.0) * q) * C / std::pow(N, (alpha + 1.0) * q);
  return out;
}

double restarted_bound(int N, double mu, double alpha, double dist0) {
  if (mu <= 0.0) throw ContractViolation("restarted_bound: mu must be > 0");
  if (alpha <= 1.0) throw ContractViolation("restarted_bound: alpha must be > 1");
  if (dist0 <= 0.0) throw ContractViolation("restarted_bound: dist0 must be > 0");
  const double beta = 1.0 - 1.0 / alpha;
  const double lambda =
      std::pow(std::exp(1.0) / mu, 1.0 / alpha) * std::pow(dist0, beta);
  const double eb = std::exp(beta);
  const double inner =
      (eb - 1.0) / (lambda * eb * eb) *
          (N - 2.0 - std::log((eb - 1.0) / (lambda * eb) * (N - 1.0) + 1.0) / beta) +
      1.0 / eb;
  if (!(inner > 0.0)) {
    throw NumericsError("restarted_bound: budget below asymptotic regime (N=" +
                        std::to_string(N) + ")");
  }
  return std::pow(inner, -2.0 * alpha / (alpha - 1.0)) * dist0 * dist0;
}

double rate_fit(const IterationTrace& trace, int lo, int hi) {
  if (lo < 1 || hi < lo) throw ContractViolation("rate_fit: bad window");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& rec : trace.records) {
    if (rec.iter < lo || rec.iter > hi) continue;
    if (rec.residual_sq == 0.0) {
      throw NumericsError("rate_fit: zero residual at iteration " +
                          std::to_string(rec.iter) +
                          " (converged; log-log fit undefined)");
    }
    const double x = std::log(static_cast<double>(rec.iter));
    const double y = std::log(rec.residual_sq);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw ContractViolation("rate_fit: fewer than 2 records in window");
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw NumericsError("rate_fit: degenerate window");
  return (n * sxy - sx * sy) / denom;
}

double rate_fit(const IterationTrace& trace) {
  if (trace.records.empty()) throw ContractViolation("rate_fit: empty trace");
  const int last = trace.records.back().iter;
  const int lo = std::max(1, static_cast<int>(0.2 * last));
  return rate_fit(trace, lo, last);
}

}  // namespace anchor::analysis

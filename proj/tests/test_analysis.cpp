#include <doctest.h>

#include <cmath>

#include "anchor/analysis.hpp"
#include "anchor/lowerbound.hpp"
#include "anchor/problems.hpp"
#include "anchor/solvers.hpp"
#include "test_support.hpp"

using namespace anchor;
using namespace anchor::analysis;

TEST_CASE("lyapunov value at k = 0 and at the solution") {
  LyapunovInputs in;
  in.k = 0;
  in.y0 = Point::Zero(3);
  in.y0 << 1.0, 2.0, -1.0;
  in.x_star = Point::Zero(3);
  CHECK(lyapunov_value(in) == doctest::Approx(12.0));  // 2 * ||y0||^2

  LyapunovInputs at_sol;
  at_sol.k = 4;
  at_sol.mu = 0.3;
  at_sol.y0 = Point::Zero(3);
  at_sol.x_star = Point::Zero(3);
  at_sol.x_k = Point::Zero(3);
  at_sol.residual = Point::Zero(3);
  CHECK(lyapunov_value(at_sol, LyapunovForm::primary) == 0.0);
  CHECK(lyapunov_value(at_sol, LyapunovForm::alternate) == 0.0);
  at_sol.k = -1;
  CHECK_THROWS_AS(lyapunov_value(at_sol), ContractViolation);
}

TEST_CASE("both lyapunov forms agree along a trace") {
  const double mu = 0.1;
  auto A = problems::random_linear_monotone(3, mu, 40);
  std::mt19937_64 rng(41);
  const Point y0 = testing::random_point(rng, 3);
  const Point x_star = Point::Zero(3);
  auto trace = solvers::os_ppm(A, mu, y0, 40);
  for (const auto& rec : trace.records) {
    LyapunovInputs in{rec.iter, rec.point, rec.residual, y0, x_star, mu};
    const double a = lyapunov_value(in, LyapunovForm::primary);
    const double b = lyapunov_value(in, LyapunovForm::alternate);
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("lyapunov decreases monotonically with exact first-step equality") {
  for (double mu : {0.0, 0.1, 1.0}) {
    auto A = problems::random_linear_monotone(5, mu, 60 + static_cast<int>(mu));
    std::mt19937_64 rng(61);
    const Point y0 = testing::random_point(rng, 5);
    const Point x_star = Point::Zero(5);
    auto trace = solvers::os_ppm(A, mu, y0, 50);
    annotate_lyapunov(trace, x_star, mu);

    const double v0 = 2.0 * (y0 - x_star).squaredNorm();
    CHECK(std::abs(*trace.records.front().lyapunov - v0) <= 1e-9 * v0);
    double prev = v0;
    for (const auto& rec : trace.records) {
      CHECK(*rec.lyapunov <= prev + 1e-9 * v0);
      prev = *rec.lyapunov;
    }

    // Tail of the certificate chain at the last iterate.
    const auto& last = trace.records.back();
    const double gamma = 1.0 + 2.0 * mu;
    const int N = last.iter;
    const double g_mN = std::pow(gamma, -N);
    const double s = solvers::geometric_sum(gamma, N);
    const double rhs = (1.0 + g_mN) * s * s * last.residual_sq +
                       (1.0 - g_mN) * (y0 - x_star).squaredNorm();
    CHECK(*last.lyapunov >= rhs - 1e-9 * v0);
  }
}

TEST_CASE("annotate_lyapunov needs recorded points") {
  auto A = problems::random_linear_monotone(3, 0.0, 1);
  SolveOptions opts;
  opts.record_points = false;
  auto trace = solvers::os_ppm(A, 0.0, Point::Ones(3), 5, opts);
  CHECK_THROWS_AS(annotate_lyapunov(trace, Point::Zero(3), 0.0),
                  ContractViolation);
}

TEST_CASE("upper_bound_contraction special values") {
  CHECK(upper_bound_contraction(0, 2.0, 3.0) == doctest::Approx(2.25 * 9.0));
  for (int N : {1, 5, 9}) {
    CHECK(upper_bound_contraction(N, 1.0, 2.0) ==
          doctest::Approx(16.0 / ((N + 1.0) * (N + 1.0))));
  }
  for (double gamma : {1.0, 1.01, 1.2}) {
    for (int N : {1, 7, 20}) {
      CHECK(upper_bound_contraction(N, gamma, 1.7) ==
            doctest::Approx(lowerbound::lower_bound_value(N, gamma, 1.7))
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("upper_bound_monotone special values and long-double cross-check") {
  CHECK(upper_bound_monotone(1, 0.5, 3.0) == doctest::Approx(9.0));
  for (int N : {1, 4, 13}) {
    CHECK(upper_bound_monotone(N, 0.0, 1.0) ==
          doctest::Approx(1.0 / (static_cast<double>(N) * N)));
  }
  const double mu = 0.035;
  long double s = 0.0L, p = 1.0L;
  for (int k = 0; k < 101; ++k) {
    s += p;
    p *= (1.0L + 2.0L * static_cast<long double>(mu));
  }
  const double expected = static_cast<double>(1.0L / (s * s));
  CHECK(upper_bound_monotone(101, mu, 1.0) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("ppm_uniform_bounds arithmetic") {
  auto b = ppm_uniform_bounds(10, 1.0, 2.0, 1.0);
  CHECK(b.dist_bound == doctest::Approx(4.0 / 100.0));
  CHECK(b.residual_bound == doctest::Approx(std::pow(2.0, 5.0) * 4.0 / 1000.0));
  auto b1 = ppm_uniform_bounds(1, 2.0, 3.0, 1.0);
  CHECK(b1.residual_bound >= 1.0);  // consistency with ||x0 - x*||^2 = 1
  CHECK_THROWS_AS(ppm_uniform_bounds(1, 0.0, 2.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(ppm_uniform_bounds(1, 1.0, 1.0, 1.0), ContractViolation);
}

TEST_CASE("ppm trace stays below both uniform-monotonicity bounds") {
  auto op = problems::power_monotone(1.0, 2.0, 3);
  Point y0(3);
  y0 << 1.0, 1.0, 0.5;
  SolveOptions opts;
  opts.known_solution = Point::Zero(3);
  auto trace = solvers::ppm(op.oracle, y0, 300, opts);
  const double d0 = y0.norm();
  for (const auto& rec : trace.records) {
    auto b = ppm_uniform_bounds(rec.iter, op.mu, op.alpha, d0);
    CHECK(rec.residual_sq <= b.residual_bound * (1 + 1e-12));
    CHECK(*rec.dist_sq <= b.dist_bound * (1 + 1e-12));
  }
}

TEST_CASE("restarted_bound scaling and failure modes") {
  const double r1 = restarted_bound(10000, 1.0, 2.0, 1.0);
  const double r2 = restarted_bound(20000, 1.0, 2.0, 1.0);
  CHECK(r2 / r1 == doctest::Approx(std::pow(2.0, -4.0)).epsilon(0.05));

  const double at100 = restarted_bound(100, 1.0, 2.0, 1.0);
  CHECK(at100 > 0.0);
  CHECK(std::isfinite(at100));
  // Crossover: the restarted guarantee eventually beats the plain one.
  CHECK(restarted_bound(10000, 1.0, 2.0, 1.0) <
        ppm_uniform_bounds(10000, 1.0, 2.0, 1.0).residual_bound);

  // Direct re-evaluation of the closed form at a different dist0.
  const double mu = 0.7, alpha = 2.5, dist0 = 2.0;
  const int N = 500;
  const double beta = 1.0 - 1.0 / alpha;
  const double lambda = std::pow(std::exp(1.0) / mu, 1.0 / alpha) *
                        std::pow(dist0, 1.0 - 1.0 / alpha);
  const double eb = std::exp(beta);
  const double inner =
      (eb - 1.0) / (lambda * eb * eb) *
          (N - 2.0 - std::log((eb - 1.0) / (lambda * eb) * (N - 1.0) + 1.0) / beta) +
      1.0 / eb;
  const double expected =
      std::pow(inner, -2.0 * alpha / (alpha - 1.0)) * dist0 * dist0;
  CHECK(restarted_bound(N, mu, alpha, dist0) == doctest::Approx(expected));

  // Budget below the asymptotic regime.
  CHECK_THROWS_AS(restarted_bound(2, 1e6, 2.0, 1.0), NumericsError);
}

TEST_CASE("rate_fit recovers exact power laws") {
  IterationTrace synth;
  for (int k = 1; k <= 2000; ++k) {
    TraceRecord rec;
    rec.iter = k;
    rec.residual_sq = std::pow(k, -4.0);
    synth.records.push_back(rec);
  }
  CHECK(rate_fit(synth, 10, 2000) == doctest::Approx(-4.0).epsilon(1e-6));

  IterationTrace flat;
  for (int k = 1; k <= 100; ++k) {
    TraceRecord rec;
    rec.iter = k;
    rec.residual_sq = 0.25;
    flat.records.push_back(rec);
  }
  CHECK(rate_fit(flat, 1, 100) == doctest::Approx(0.0));

  IterationTrace converged = flat;
  converged.records[50].residual_sq = 0.0;
  CHECK_THROWS_AS(rate_fit(converged, 1, 100), NumericsError);
  CHECK_THROWS_AS(rate_fit(flat, 0, 10), ContractViolation);
}

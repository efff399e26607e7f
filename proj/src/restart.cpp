#include "anchor/restart.hpp"

#include <chrono>
#include <cmath>

#include "anchor/solvers.hpp"

namespace anchor::restart {

namespace {

int ceil_count(double lambda, double beta, int k) {
  const double v = lambda * std::exp(beta * k);
  if (v >= 2.0e9) throw NumericsError("restart schedule: leg length overflow");
  return static_cast<int>(std::ceil(v));
}

}  // namespace

RestartSchedule schedule_from_parameters(double lambda, double beta, int N,
                                         bool clamp_to_single_leg) {
  if (lambda <= 0.0) throw ContractViolation("restart schedule: lambda must be > 0");
  if (!(beta > 0.0 && beta < 1.0))
    throw ContractViolation("restart schedule: beta must be in (0,1)");
  if (N < 2) throw ContractViolation("restart schedule: N must be >= 2");

  const int budget = N - 1;
  // Largest R with sum_{k=1}^{R} ceil(lambda e^{beta k}) <= budget.
  std::vector<int> counts;
  int used = 0;
  for (int k = 1;; ++k) {
    const int t = ceil_count(lambda, beta, k);
    if (used + t > budget) break;
    counts.push_back(t);
    used += t;
  }
  if (counts.empty()) {
    if (!clamp_to_single_leg) {
      const int min_n = 1 + ceil_count(lambda, beta, 1);
      throw ContractViolation("insufficient budget: schedule needs N >= " +
                              std::to_string(min_n) + ", got " +
                              std::to_string(N));
    }
    counts.push_back(budget);
    used = budget;
  } else {
    counts.back() += budget - used;  // last leg absorbs the remainder
  }

  RestartSchedule out;
  out.lambda = lambda;
  out.beta = beta;
  out.inner_counts = std::move(counts);
  out.total_budget = N;
  return out;
}

RestartSchedule make_schedule(double mu, double alpha, double dist0, int N) {
  if (mu <= 0.0) throw ContractViolation("make_schedule: mu must be > 0");
  if (alpha <= 1.0) throw ContractViolation("make_schedule: alpha must be > 1");
  if (dist0 <= 0.0) throw ContractViolation("make_schedule: dist0 must be > 0");
  const double beta = 1.0 - 1.0 / alpha;
  const double lambda =
      std::pow(std::exp(1.0) / mu, 1.0 / alpha) * std::pow(dist0, beta);
  return schedule_from_parameters(lambda, beta, N, /*clamp_to_single_leg=*/false);
}

std::vector<std::pair<double, double>> default_grid() {
  std::vector<std::pair<double, double>> grid;
  for (int j = 0; j <= 5; ++j) {
    for (int i = 1; i <= 4; ++i) {
      grid.emplace_back(std::pow(2.0, j), 1.0 - std::pow(2.0, -i));
    }
  }
  return grid;
}

std::vector<RestartSchedule> grid_search_schedules(
    int N, const std::vector<std::pair<double, double>>& grid) {
  if (grid.empty()) throw ContractViolation("grid_search_schedules: empty grid");
  std::vector<RestartSchedule> out;
  out.reserve(grid.size());
  for (const auto& [lambda, beta] : grid) {
    out.push_back(
        schedule_from_parameters(lambda, beta, N, /*clamp_to_single_leg=*/true));
  }
  return out;
}

namespace {

void validate_schedule(const RestartSchedule& schedule) {
  if (schedule.inner_counts.empty()) {
    throw ContractViolation("restarted solve: schedule has no legs");
  }
  int total = 1;
  for (int t : schedule.inner_counts) {
    if (t < 1) throw ContractViolation("restarted solve: leg with t < 1");
    total += t;
  }
  if (total != schedule.total_budget) {
    throw ContractViolation("restarted solve: schedule legs sum to " +
                            std::to_string(total) + " but budget is " +
                            std::to_string(schedule.total_budget));
  }
}

}  // namespace

IterationTrace restarted_os_ppm(const ResolventOracle& A, const Point& y0,
                                const RestartSchedule& schedule,
                                const SolveOptions& opts) {
  validate_schedule(schedule);
  require_dimension(A.dimension, y0, "restarted_os_ppm");
  require_finite(y0, "restarted_os_ppm starting point");

  IterationTrace trace;
  trace.solver = "restarted_os_ppm";
  trace.dimension = A.dimension;
  trace.start = y0;
  if (opts.metric != nullptr) trace.norm = "metric";
  const auto t0 = std::chrono::steady_clock::now();

  auto push = [&](int iter, const Point& point, Point residual) {
    TraceRecord rec;
    rec.iter = iter;
    rec.residual_sq = residual_norm_sq(residual, opts.metric);
    if (opts.known_solution)
      rec.dist_sq = residual_norm_sq(point - *opts.known_solution, opts.metric);
    if (opts.record_points) {
      rec.point = point;
      rec.residual = std::move(residual);
    }
    rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.records.push_back(std::move(rec));
  };

  // Initialization: one resolvent call.
  Point anchor = A.resolve(y0);
  if (!anchor.allFinite())
    throw NumericsError("restarted_os_ppm: non-finite iterate at iteration 1");
  push(1, anchor, y0 - anchor);
  trace.restart_iters.push_back(1);

  int global_iter = 1;
  for (int t : schedule.inner_counts) {
    // One leg = t iterations of the mu = 0 accelerated method from `anchor`,
    // with phi_j = j+1:
    //   y_j = x_j + ((j-1)/(j+1)) { (x_j - x_{j-1}) + (y_{j-2} - x_{j-1}) }.
    Point x_prev = anchor;
    Point y_prev = anchor;
    Point y_prev2 = anchor;
    for (int j = 1; j <= t; ++j) {
      Point x = A.resolve(y_prev);
      if (!x.allFinite())
        throw NumericsError("restarted_os_ppm: non-finite iterate at iteration " +
                            std::to_string(global_iter + j));
      push(global_iter + j, x, y_prev - x);
      const double c = (j - 1.0) / (j + 1.0);
      Point y = x + c * (x - x_prev) + c * (y_prev2 - x_prev);
      y_prev2 = y_prev;
      y_prev = std::move(y);
      x_prev = std::move(x);
    }
    anchor = std::move(x_prev);
    global_iter += t;
    trace.restart_iters.push_back(global_iter);
  }
  return trace;
}

IterationTrace restarted_oc_halpern(const FixedPointMap& T, const Point& y0,
                                    const RestartSchedule& schedule,
                                    const SolveOptions& opts) {
  validate_schedule(schedule);
  require_dimension(T.dimension, y0, "restarted_oc_halpern");
  require_finite(y0, "restarted_oc_halpern starting point");

  IterationTrace trace;
  trace.solver = "restarted_oc_halpern";
  trace.dimension = T.dimension;
  trace.start = y0;
  if (opts.metric != nullptr) trace.norm = "metric";
  const auto t0 = std::chrono::steady_clock::now();

  auto push = [&](int iter, const Point& point, Point residual) {
    TraceRecord rec;
    rec.iter = iter;
    rec.residual_sq = residual_norm_sq(residual, opts.metric);
    if (opts.known_solution)
      rec.dist_sq = residual_norm_sq(point - *opts.known_solution, opts.metric);
    if (opts.record_points) {
      rec.point = point;
      rec.residual = std::move(residual);
    }
    rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.records.push_back(std::move(rec));
  };

  // Initialization evaluation; anchor = (y0 + T y0)/2 matches the proximal
  // side's J y0 under the gamma = 1 correspondence J = (I + T)/2.
  Point Ty = T.evaluate(y0);
  if (!Ty.allFinite())
    throw NumericsError("restarted_oc_halpern: non-finite value at iteration 1");
  push(1, y0, y0 - Ty);
  Point anchor = 0.5 * (y0 + Ty);
  trace.restart_iters.push_back(1);

  int global_iter = 1;
  for (int t : schedule.inner_counts) {
    // One leg = t evaluations of T: the anchored iterates z_1..z_{t-1} plus
    // the closing half-averaged step that forms the next anchor.
    Point z = anchor;
    Ty = T.evaluate(z);
    if (!Ty.allFinite())
      throw NumericsError("restarted_oc_halpern: non-finite value at iteration " +
                          std::to_string(global_iter + 1));
    push(global_iter + 1, z, z - Ty);
    for (int j = 1; j < t; ++j) {
      const double inv_phi = 1.0 / (j + 1.0);
      z = (1.0 - inv_phi) * Ty + inv_phi * anchor;
      Ty = T.evaluate(z);
      if (!z.allFinite() || !Ty.allFinite())
        throw NumericsError(
            "restarted_oc_halpern: non-finite value at iteration " +
            std::to_string(global_iter + 1 + j));
      push(global_iter + 1 + j, z, z - Ty);
    }
    anchor = 0.5 * (z + Ty);
    global_iter += t;
    trace.restart_iters.push_back(global_iter);
  }
  return trace;
}

}  // namespace anchor::restart

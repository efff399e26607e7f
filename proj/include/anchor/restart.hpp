#pragma once

#include "anchor/core.hpp"

namespace anchor::restart {

/// Exponentially growing inner-iteration counts t_k = ceil(lambda e^{beta k})
/// re-anchoring the accelerated method, with the last leg absorbing the
/// remaining budget. One resolvent call is spent on the initialization step,
/// so sum(t_k) = N - 1.
struct RestartSchedule {
  double lambda = 0.0;
  double beta = 0.0;
  std::vector<int> inner_counts;
  int total_budget = 0;

  int legs() const { return static_cast<int>(inner_counts.size()); }
};

/// The schedule prescribed for a uniformly monotone operator with parameters
/// mu > 0, alpha > 1 and initial distance dist0:
///   lambda = (e/mu)^(1/alpha) dist0^(1-1/alpha),  beta = 1 - 1/alpha,
/// with the leg count R fixed by
///   sum_{k=1}^{R} ceil(lambda e^{beta k}) <= N-1 < sum_{k=1}^{R+1} ceil(...).
/// Fails with an "insufficient budget" error naming the minimum workable N
/// when even the first leg does not fit.
RestartSchedule make_schedule(double mu, double alpha, double dist0, int N);

/// Schedule for an explicitly chosen (lambda, beta) pair, as used by the grid
/// search. When clamp_to_single_leg is true an infeasibly large lambda
/// degenerates to one leg consuming the whole budget instead of failing.
RestartSchedule schedule_from_parameters(double lambda, double beta, int N,
                                         bool clamp_to_single_leg = false);

/// Candidate schedules for every (lambda, beta) pair of the grid; the caller
/// runs all of them and keeps the best final residual.
std::vector<RestartSchedule> grid_search_schedules(
    int N, const std::vector<std::pair<double, double>>& grid);

/// The default grid lambda in {2^j : j=0..5}, beta in {1 - 2^-i : i=1..4}.
std::vector<std::pair<double, double>> default_grid();

/// Restarted accelerated proximal point method:
///   x~_0 = J_A y0, then for each leg k run t_k iterations of the mu = 0
/// accelerated method starting from x~_{k-1}. The trace numbers records by
/// total resolvent calls (the initialization step is iteration 1) and lists
/// each leg's final iteration in restart_iters.
IterationTrace restarted_os_ppm(const ResolventOracle& A, const Point& y0,
                                const RestartSchedule& schedule,
                                const SolveOptions& opts = {});

/// The same scheme driven through a nonexpansive map T directly: the
/// initialization step is the half-averaged x~_0 = (y0 + T y0)/2, and each
/// leg re-anchors the gamma = 1 anchored iteration at the previous leg's
/// output. Record j holds the point of the j-th evaluation of T together
/// with its fixed-point residual.
IterationTrace restarted_oc_halpern(const FixedPointMap& T, const Point& y0,
                                    const RestartSchedule& schedule,
                                    const SolveOptions& opts = {});

}  // namespace anchor::restart

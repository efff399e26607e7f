#pragma once

#include <Eigen/Dense>

#include "anchor/core.hpp"

namespace anchor::lowerbound {

/// The exact worst-case 1/gamma-contraction for horizon N, living in
/// R^{N+1}. The map is T(y) = T0(y - y0) + y0 with T0 = I - ((1+gamma)/gamma) G
/// and G(z) = H z - b, where H carries gamma on the diagonal, -1 on the
/// subdiagonal, and +1 in the top-right corner, all scaled by 1/(1+gamma);
///   b  = (1/(1+gamma)) ((1 + gamma^{N+1}) / sqrt(sum_i gamma^{2i})) R e_1,
///   y* = y0 + (R / sqrt(sum_i gamma^{2i})) (gamma^N, ..., gamma, 1)^T.
/// H is applied as a structured operator; it is only materialized densely for
/// export, and never above N+1 = 64.
struct WorstCaseInstance {
  int horizon = 0;  // N
  double gamma = 1.0;
  double radius = 0.0;  // R = ||y0 - y*||
  Point y0;
  Point b;
  Point y_star;

  Eigen::Index dimension() const { return y0.size(); }

  /// Structured application of H.
  Point apply_H(const Point& z) const;

  /// G(z) = H z - b (the shifted averaged map at base point 0).
  Point apply_G(const Point& z) const;

  /// Dense H for export and cross-checks; refuses dimensions above 64.
  Eigen::MatrixXd dense_H() const;
};

struct WorstCaseOperator {
  WorstCaseInstance instance;
  FixedPointMap map;
};

/// Builds the worst-case instance shifted to base point y0 (dimension N+1).
WorstCaseOperator build_worst_case(int N, double gamma, double radius,
                                   const Point& y0);

/// (1 + 1/gamma)^2 (1 / sum_{k=0}^{N} gamma^k)^2 R^2: the value no method
/// restricted to the residual span can beat after N evaluations.
double lower_bound_value(int N, double gamma, double radius);

/// True iff every recorded iterate satisfies
///   y_k in y0 + span{residual_0, ..., residual_{k-1}}
/// up to a relative tolerance: the orthogonal distance of y_k - y0 to the
/// span must not exceed tol * ||y_k - y0||. The trace must carry recorded
/// points and residuals.
bool verify_span_condition(const IterationTrace& trace, double tol = 1e-8);

/// One step of the algorithm under attack: given the step index k, the
/// current query point y_k and the oracle's residual answer at y_k, produce
/// y_{k+1}.
using VictimStep =
    std::function<Point(int k, const Point& y_k, const Point& residual)>;

struct ResistingOracleReport {
  double final_residual_sq = 0.0;  // ||y_N - T_U y_N||^2
  Eigen::MatrixXd embedding;       // U, n x (N+1), orthonormal columns
  WorstCaseInstance base;          // the embedded worst-case instance (y0 = 0)
  Point final_point;               // y_N
  Point final_residual;            // y_N - T_U y_N
  int queries_answered = 0;
  // The answered interaction: (query point y_t, residual answer) pairs.
  std::vector<std::pair<Point, Point>> transcript;
};

/// Adversarial oracle for arbitrary deterministic fixed-point iterations.
/// Answers N residual queries as if the operator were
///   T_U(y) = U T(U^T (y - y0)) + y0
/// for the horizon-N worst-case T, while choosing the orthonormal columns of
/// U adaptively: a column is fixed only when its index enters the support of
/// some returned residual, and is drawn orthogonal to every query seen so far
/// and every column already chosen. Requires n >= 2N. The final residual of
/// the completed operator at the algorithm's output y_N satisfies
///   ||y_N - T_U y_N||^2 >= lower_bound_value(N, gamma, R).
ResistingOracleReport resisting_oracle(const VictimStep& victim, int N, int n,
                                       const Point& y0, double gamma,
                                       double radius);

/// Plain-text export of an instance: labeled blocks, row-major, 17
/// significant digits.
std::string export_instance_text(const WorstCaseInstance& inst);

}  // namespace anchor::lowerbound

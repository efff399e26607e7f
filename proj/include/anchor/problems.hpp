#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

#include "anchor/core.hpp"

namespace anchor::problems {

/// Counterclockwise rotation by theta followed by 1/gamma scaling on the
/// plane; exactly 1/gamma-Lipschitz with unique fixed point 0.
FixedPointMap rotation_contraction(double theta, double gamma);

/// The 2D operator (1/(n_total-1)) [[0,1],[-1,0]] + mu I, maximal mu-strongly
/// monotone with zero at the origin; the resolvent is an exact 2x2 solve.
ResolventOracle toy_monotone(double mu, int n_total);

/// A x = mu ||x||^(alpha-1) x: uniformly monotone with parameters (mu, alpha)
/// around its zero at the origin. The resolvent reduces to the scalar root of
/// t + mu t^alpha = ||y||, solved to 1e-14 relative accuracy. The oracle's
/// strong-monotonicity tag is 0 (the operator is merely monotone globally).
struct PowerOperator {
  double mu = 1.0;
  double alpha = 2.0;
  ResolventOracle oracle;
};
PowerOperator power_monotone(double mu, double alpha, int dim);

/// Seeded dense linear operator M = mu I + skew + PSD with resolvent via a
/// prefactored solve; fixture for equivalence and Lyapunov checks.
ResolventOracle random_linear_monotone(int dim, double mu, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Decentralized compressed sensing (PG-EXTRA)

struct Graph {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;
};

/// Seeded random connected graph with exactly the requested edge count.
Graph random_connected_graph(int nodes, int edges, std::uint64_t seed);

/// W_ij = 1/max{deg(i),deg(j)} on edges, diagonal fills each row to sum 1.
/// Rejects self-loops and repeated edges.
Eigen::MatrixXd metropolis_weights(const Graph& graph);

struct NetworkProblem {
  Graph graph;
  std::vector<Eigen::MatrixXd> sensing;        // A_(i), m_i x dim
  std::vector<Eigen::VectorXd> measurements;   // b_(i)
  Eigen::VectorXd signal;                      // ground-truth sparse signal
  double alpha = 0.005;                        // stepsize
  double lambda = 0.002;                       // l1 weight
  Eigen::MatrixXd mixing;                      // W

  int dim() const { return static_cast<int>(signal.size()); }
};

NetworkProblem make_network_problem(int nodes, int edges, int dim, int sparsity,
                                    int sensors_per_node, double alpha,
                                    double lambda, double noise_sigma,
                                    std::uint64_t seed);

/// The PG-EXTRA update as a self-map of the stacked state (x_1..x_n, w_1..w_n):
///   x+_i = prox_{alpha lambda |.|_1}( sum_j W_ij x_j
///                                     - alpha A_i^T (A_i x_i - b_i) - w_i )
///   w+   = w + (1/2)(I - W) x.
FixedPointMap pg_extra(const NetworkProblem& problem);

/// The norm in which the PG-EXTRA map is nonexpansive, induced by its
/// primal-dual splitting: with S = (I - W)/2 acting node-wise,
///   ||(x, w)||^2 = (1/alpha) ( ||x||^2 + 2 <x, P w> + <w, S^+ w> )
/// where P projects onto range(S) and S^+ is the pseudo-inverse. States
/// reached from w = 0 keep w in range(S), where this is a genuine norm; the
/// consensus directions of w are flat.
MetricMatrix pg_extra_metric(const NetworkProblem& problem);

/// Componentwise soft threshold sign(v) max(|v| - t, 0).
double soft_threshold(double v, double t);

// ---------------------------------------------------------------------------
// Total-variation CT via PDHG

/// Modified Shepp-Logan phantom rasterized on size x size pixel centers over
/// [-1,1]^2, returned row-major.
Eigen::VectorXd shepp_logan_phantom(int size);

/// Parallel-beam line-integral matrix with bilinear footprint: n_angles
/// uniform angles in [0,pi), n_detectors offsets spanning the image diagonal.
Eigen::MatrixXd radon_matrix(int size, int n_angles, int n_detectors);

struct CtProblem {
  int image_size = 0;
  int n_angles = 0;
  int n_detectors = 0;
  double alpha = 0.0, beta = 0.0, lambda = 0.0;
  Eigen::MatrixXd radon;      // E
  Eigen::VectorXd phantom;    // ground-truth image
  Eigen::VectorXd sinogram;   // b = E * phantom (noiseless)
  FixedPointMap map;          // state (x, u, v): n + m + 2n
  MetricMatrix metric;        // the norm in which the map is nonexpansive
};

/// One PDHG sweep for (1/2)||Ex-b||^2 + lambda ||Dx||_1:
///   x+ = x - alpha E^T u - beta D^T v
///   u+ = (u + alpha E(2x+ - x) - alpha b) / (1 + alpha)
///   v+ = clip(v + beta D(2x+ - x), [-lambda alpha/beta, lambda alpha/beta])
/// together with the metric
///   M = [ (1/alpha)I  -E^T         -(beta/alpha)D^T ]
///       [ -E          (1/alpha)I    0               ]
///       [ -(beta/alpha)D  0         (1/alpha)I      ],
/// under which the sweep is a proximal-point step and hence firmly
/// nonexpansive. Positive semidefiniteness is checked on sampled points at
/// construction. A caller-supplied image replaces the generated phantom.
CtProblem ct_pdhg(int image_size, int n_angles, double alpha, double beta,
                  double lambda_reg,
                  const Eigen::VectorXd* phantom_override = nullptr);

// ---------------------------------------------------------------------------
// Earth mover's distance via PDHG

struct GridMeasurePair {
  int n = 0;
  Eigen::MatrixXd rho0;  // n x n, entries >= 0, sums to 1
  Eigen::MatrixXd rho1;
};

/// Validates non-negativity and unit mass (1e-12).
void validate_measures(const GridMeasurePair& measures);

/// A centered disk of radius 0.3 versus four disks of radius 0.2 centered at
/// (+-1, +-1), rasterized on an n x n grid over [-2,2]^2 and normalized.
GridMeasurePair two_circle_measures(int n);

struct EmdProblem {
  GridMeasurePair measures;
  double mu = 0.0, epsilon = 0.0, tau = 0.0;
  FixedPointMap map;     // state (mx, my, phi): 3 n^2
  MetricMatrix metric;
};

/// The shrink/divergence sweep on zero-padded flux fields:
///   m+ = (1/(1+eps mu)) shrink1(m + mu grad(phi), mu)     (x and y parts)
///   phi+ = phi + tau ( div(2m+ - m) + rho1 - rho0 ),
/// with m_x carrying a structurally zero last row and m_y a zero last column.
/// The metric pairs (1/mu, 1/tau) diagonal blocks with the gradient/divergence
/// coupling; PSD requires mu tau ||div||^2 <= 1 (checked on samples).
EmdProblem emd_pdhg(const GridMeasurePair& measures, double mu, double epsilon,
                    double tau);

// ---------------------------------------------------------------------------
// Instance (de)serialization: plain JSON documents of arrays + metadata.

std::string measures_to_json(const GridMeasurePair& measures);
GridMeasurePair measures_from_json(const std::string& text);

std::string network_to_json(const NetworkProblem& problem);
NetworkProblem network_from_json(const std::string& text);

std::string phantom_to_json(const Eigen::VectorXd& image, int size);
Eigen::VectorXd phantom_from_json(const std::string& text, int* size = nullptr);

}  // namespace anchor::problems

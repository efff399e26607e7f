#include "anchor/problems.hpp"

#include <json.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>

namespace anchor::problems {

using nlohmann::json;

FixedPointMap rotation_contraction(double theta, double gamma) {
  Eigen::Matrix2d R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  R /= gamma;
  FixedPointMap out;
  out.dimension = 2;
  out.gamma = gamma;
  out.evaluate = [R](const Point& y) -> Point { return R * y; };
  return out;
}

ResolventOracle toy_monotone(double mu, int n_total) {
  if (n_total <= 1) throw ContractViolation("toy_monotone: n_total must be > 1");
  const double c = 1.0 / (n_total - 1.0);
  // (I + M) = [[1+mu, c], [-c, 1+mu]] inverted in closed form.
  const double a = 1.0 + mu;
  const double det = a * a + c * c;
  ResolventOracle out;
  out.dimension = 2;
  out.mu = mu;
  out.resolve = [a, c, det](const Point& y) -> Point {
    Point x(2);
    x(0) = (a * y(0) - c * y(1)) / det;
    x(1) = (c * y(0) + a * y(1)) / det;
    return x;
  };
  return out;
}

PowerOperator power_monotone(double mu, double alpha, int dim) {
  if (mu <= 0.0) throw ContractViolation("power_monotone: mu must be > 0");
  if (alpha <= 1.0) throw ContractViolation("power_monotone: alpha must be > 1");
  if (dim < 1) throw ContractViolation("power_monotone: dim must be >= 1");
  PowerOperator op;
  op.mu = mu;
  op.alpha = alpha;
  op.oracle.dimension = dim;
  op.oracle.mu = 0.0;
  op.oracle.resolve = [mu, alpha](const Point& y) -> Point {
    const double r = y.norm();
    if (r == 0.0) return Point::Zero(y.size());
    // t + mu t^alpha = r on [0, r]; Newton with bisection fallback.
    double lo = 0.0, hi = r;
    double t = r / (1.0 + mu * std::pow(r, alpha - 1.0));
    for (int it = 0; it < 200; ++it) {
      const double f = t + mu * std::pow(t, alpha) - r;
      if (f > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      const double df = 1.0 + mu * alpha * std::pow(t, alpha - 1.0);
      double next = t - f / df;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double change = std::abs(next - t);
      t = next;
      if (change <= 1e-14 * std::max(t, 1e-300)) {
        return Point((t / r) * y);
      }
    }
    throw NumericsError("power_monotone: resolvent root finder stalled, bracket [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  return op;
}

ResolventOracle random_linear_monotone(int dim, double mu, std::uint64_t seed) {
  if (dim < 1) throw ContractViolation("random_linear_monotone: dim must be >= 1");
  if (mu < 0.0) throw ContractViolation("random_linear_monotone: mu must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd B(dim, dim), C(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) B(i, j) = gauss(rng);
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) C(i, j) = gauss(rng);
  }
  Eigen::MatrixXd M = mu * Eigen::MatrixXd::Identity(dim, dim) +
                      0.5 * (B - B.transpose()) +
                      (0.5 / dim) * (C.transpose() * C);
  auto lu = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXd>>(
      Eigen::MatrixXd::Identity(dim, dim) + M);
  ResolventOracle out;
  out.dimension = dim;
  out.mu = mu;
  out.resolve = [lu](const Point& y) -> Point { return lu->solve(y); };
  return out;
}

// ---------------------------------------------------------------------------
// Decentralized compressed sensing

Graph random_connected_graph(int nodes, int edges, std::uint64_t seed) {
  if (nodes < 2) throw ContractViolation("random_connected_graph: nodes >= 2");
  const int max_edges = nodes * (nodes - 1) / 2;
  if (edges < nodes - 1 || edges > max_edges) {
    throw ContractViolation("random_connected_graph: edge count " +
                            std::to_string(edges) + " not in [" +
                            std::to_string(nodes - 1) + ", " +
                            std::to_string(max_edges) + "]");
  }
  std::mt19937_64 rng(seed);
  Graph g;
  g.nodes = nodes;
  std::set<std::pair<int, int>> seen;
  // Random spanning tree over a shuffled node order, then extra edges.
  std::vector<int> order(static_cast<size_t>(nodes));
  for (int i = 0; i < nodes; ++i) order[static_cast<size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 1; i < nodes; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    int a = order[static_cast<size_t>(i)];
    int b = order[static_cast<size_t>(pick(rng))];
    auto e = std::minmax(a, b);
    seen.insert(e);
    g.edges.emplace_back(e.first, e.second);
  }
  std::uniform_int_distribution<int> node_pick(0, nodes - 1);
  while (static_cast<int>(g.edges.size()) < edges) {
    int a = node_pick(rng), b = node_pick(rng);
    if (a == b) continue;
    auto e = std::minmax(a, b);
    if (!seen.insert(e).second) continue;
    g.edges.emplace_back(e.first, e.second);
  }
  return g;
}

namespace {

std::vector<int> degrees(const Graph& g) {
  std::vector<int> deg(static_cast<size_t>(g.nodes), 0);
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : g.edges) {
    if (a == b) throw ContractViolation("metropolis_weights: self-loop");
    if (a < 0 || b < 0 || a >= g.nodes || b >= g.nodes) {
      throw ContractViolation("metropolis_weights: edge endpoint out of range");
    }
    if (!seen.insert(std::minmax(a, b)).second) {
      throw ContractViolation("metropolis_weights: repeated edge");
    }
    ++deg[static_cast<size_t>(a)];
    ++deg[static_cast<size_t>(b)];
  }
  return deg;
}

bool is_connected(const Graph& g) {
  std::vector<std::vector<int>> adj(static_cast<size_t>(g.nodes));
  for (auto [a, b] : g.edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  std::vector<bool> visited(static_cast<size_t>(g.nodes), false);
  std::vector<int> stack{0};
  visited[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adj[static_cast<size_t>(v)]) {
      if (!visited[static_cast<size_t>(u)]) {
        visited[static_cast<size_t>(u)] = true;
        stack.push_back(u);
        ++count;
      }
    }
  }
  return count == g.nodes;
}

}  // namespace

Eigen::MatrixXd metropolis_weights(const Graph& graph) {
  const auto deg = degrees(graph);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(graph.nodes, graph.nodes);
  for (auto [a, b] : graph.edges) {
    const double w = 1.0 / std::max(deg[static_cast<size_t>(a)],
                                    deg[static_cast<size_t>(b)]);
    W(a, b) = w;
    W(b, a) = w;
  }
  for (int i = 0; i < graph.nodes; ++i) {
    W(i, i) = 1.0 - W.row(i).sum();
  }
  return W;
}

NetworkProblem make_network_problem(int nodes, int edges, int dim, int sparsity,
                                    int sensors_per_node, double alpha,
                                    double lambda, double noise_sigma,
                                    std::uint64_t seed) {
  if (sparsity > dim) throw ContractViolation("make_network_problem: sparsity > dim");
  NetworkProblem p;
  p.graph = random_connected_graph(nodes, edges, seed);
  p.mixing = metropolis_weights(p.graph);
  p.alpha = alpha;
  p.lambda = lambda;

  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  p.signal = Eigen::VectorXd::Zero(dim);
  std::vector<int> idx(static_cast<size_t>(dim));
  for (int i = 0; i < dim; ++i) idx[static_cast<size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int s = 0; s < sparsity; ++s) p.signal(idx[static_cast<size_t>(s)]) = gauss(rng);

  for (int i = 0; i < nodes; ++i) {
    Eigen::MatrixXd A(sensors_per_node, dim);
    for (int r = 0; r < sensors_per_node; ++r) {
      for (int c = 0; c < dim; ++c) A(r, c) = gauss(rng);
    }
    Eigen::VectorXd b = A * p.signal;
    for (int r = 0; r < sensors_per_node; ++r) b(r) += noise_sigma * gauss(rng);
    p.sensing.push_back(std::move(A));
    p.measurements.push_back(std::move(b));
  }
  return p;
}

double soft_threshold(double v, double t) {
  const double m = std::abs(v) - t;
  return m <= 0.0 ? 0.0 : (v < 0.0 ? -m : m);
}

FixedPointMap pg_extra(const NetworkProblem& problem) {
  if (!is_connected(problem.graph)) {
    throw ContractViolation("pg_extra: graph is disconnected");
  }
  const int n = problem.graph.nodes;
  const int d = problem.dim();
  if (static_cast<int>(problem.sensing.size()) != n ||
      static_cast<int>(problem.measurements.size()) != n) {
    throw ContractViolation("pg_extra: per-node data does not match node count");
  }
  auto shared = std::make_shared<NetworkProblem>(problem);
  FixedPointMap out;
  out.dimension = 2 * n * d;
  out.gamma = 1.0;
  out.evaluate = [shared, n, d](const Point& z) -> Point {
    const auto& p = *shared;
    Point next(2 * n * d);
    auto x_i = [&](int i) { return z.segment(i * d, d); };
    auto w_i = [&](int i) { return z.segment((n + i) * d, d); };
    const double thresh = p.alpha * p.lambda;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd mix = Eigen::VectorXd::Zero(d);
      for (int j = 0; j < n; ++j) {
        const double wij = p.mixing(i, j);
        if (wij != 0.0) mix += wij * x_i(j);
      }
      const Eigen::VectorXd grad =
          p.sensing[static_cast<size_t>(i)].transpose() *
          (p.sensing[static_cast<size_t>(i)] * x_i(i) -
           p.measurements[static_cast<size_t>(i)]);
      Eigen::VectorXd arg = mix - p.alpha * grad - w_i(i);
      for (int c = 0; c < d; ++c) arg(c) = soft_threshold(arg(c), thresh);
      next.segment(i * d, d) = arg;
      // w+ = w + (1/2)(x_i - sum_j W_ij x_j)
      next.segment((n + i) * d, d) = w_i(i) + 0.5 * (x_i(i) - mix);
    }
    return next;
  };
  return out;
}

MetricMatrix pg_extra_metric(const NetworkProblem& problem) {
  const int n = problem.graph.nodes;
  const int d = problem.dim();
  const Eigen::MatrixXd S =
      0.5 * (Eigen::MatrixXd::Identity(n, n) - problem.mixing);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw NumericsError("pg_extra_metric: eigendecomposition failed");
  }
  Eigen::VectorXd inv = es.eigenvalues();
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (es.eigenvalues()(i) > 1e-12) {
      inv(i) = 1.0 / es.eigenvalues()(i);
      mask(i) = 1.0;
    } else {
      inv(i) = 0.0;
    }
  }
  const Eigen::MatrixXd Q = es.eigenvectors();
  auto proj = std::make_shared<Eigen::MatrixXd>(Q * mask.asDiagonal() *
                                                Q.transpose());
  auto pinv = std::make_shared<Eigen::MatrixXd>(Q * inv.asDiagonal() *
                                                Q.transpose());
  const double alpha = problem.alpha;

  MetricMatrix M;
  M.dimension = 2 * n * d;
  M.apply = [proj, pinv, n, d, alpha](const Point& z) -> Point {
    // Node-wise application of a symmetric n x n matrix to stacked blocks.
    auto blockwise = [&](const Eigen::MatrixXd& A, const Point& v,
                         Eigen::Index offset) {
      Eigen::MatrixXd V(n, d);
      for (int i = 0; i < n; ++i) V.row(i) = v.segment(offset + i * d, d);
      Eigen::MatrixXd out = A * V;
      Point flat(n * d);
      for (int i = 0; i < n; ++i) flat.segment(i * d, d) = out.row(i);
      return flat;
    };
    const Point px = blockwise(*proj, z, 0);
    const Point pw = blockwise(*proj, z, n * d);
    const Point sw = blockwise(*pinv, z, n * d);
    Point out(2 * n * d);
    out.segment(0, n * d) = (z.segment(0, n * d) + pw) / alpha;
    out.segment(n * d, n * d) = (px + sw) / alpha;
    return out;
  };
  return M;
}

// ---------------------------------------------------------------------------
// CT

Eigen::VectorXd shepp_logan_phantom(int size) {
  if (size < 2) throw ContractViolation("shepp_logan_phantom: size >= 2");
  // (intensity, a, b, x0, y0, phi_deg), modified contrast variant.
  static constexpr double E[10][6] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0}};
  Eigen::VectorXd img = Eigen::VectorXd::Zero(size * size);
  const double h = 2.0 / size;
  for (int i = 0; i < size; ++i) {
    const double y = -1.0 + (i + 0.5) * h;
    for (int j = 0; j < size; ++j) {
      const double x = -1.0 + (j + 0.5) * h;
      double v = 0.0;
      for (const auto& e : E) {
        const double phi = e[5] * M_PI / 180.0;
        const double dx = x - e[3], dy = y - e[4];
        const double xr = dx * std::cos(phi) + dy * std::sin(phi);
        const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
        if (xr * xr / (e[1] * e[1]) + yr * yr / (e[2] * e[2]) <= 1.0) v += e[0];
      }
      img(i * size + j) = v;
    }
  }
  return img;
}

Eigen::MatrixXd radon_matrix(int size, int n_angles, int n_detectors) {
  if (size < 2 || n_angles < 1 || n_detectors < 2) {
    throw ContractViolation("radon_matrix: bad geometry");
  }
  const int n = size * size;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n_angles * n_detectors, n);
  const double h = 2.0 / size;
  const double tmax = std::sqrt(2.0);
  const double dt = 2.0 * tmax / (n_detectors - 1);
  const double step = 0.5 * h;  // sample spacing along the ray
  const int n_samples = static_cast<int>(std::ceil(2.0 * tmax / step));
  for (int a = 0; a < n_angles; ++a) {
    const double theta = a * M_PI / n_angles;
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int dI = 0; dI < n_detectors; ++dI) {
      const double t = -tmax + dI * dt;
      const int row = a * n_detectors + dI;
      for (int s = 0; s <= n_samples; ++s) {
        const double arc = -tmax + s * step;
        const double px = t * ct - arc * st;
        const double py = t * st + arc * ct;
        // Bilinear footprint on pixel centers.
        const double fx = (px + 1.0) / h - 0.5;
        const double fy = (py + 1.0) / h - 0.5;
        const int j0 = static_cast<int>(std::floor(fx));
        const int i0 = static_cast<int>(std::floor(fy));
        const double wx = fx - j0, wy = fy - i0;
        const double weights[4] = {(1 - wx) * (1 - wy), wx * (1 - wy),
                                   (1 - wx) * wy, wx * wy};
        const int cols[4][2] = {{i0, j0}, {i0, j0 + 1}, {i0 + 1, j0}, {i0 + 1, j0 + 1}};
        for (int q = 0; q < 4; ++q) {
          const int ii = cols[q][0], jj = cols[q][1];
          if (ii >= 0 && ii < size && jj >= 0 && jj < size && weights[q] != 0.0) {
            E(row, ii * size + jj) += weights[q] * step;
          }
        }
      }
    }
  }
  return E;
}

namespace {

// Forward differences with a structurally zero last column/row, stacked as
// (horizontal, vertical) in R^{2n}.
Eigen::VectorXd grad_apply(int size, const Eigen::VectorXd& x) {
  const int n = size * size;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const int p = i * size + j;
      if (j + 1 < size) g(p) = x(p + 1) - x(p);
      if (i + 1 < size) g(n + p) = x(p + size) - x(p);
    }
  }
  return g;
}

Eigen::VectorXd grad_adjoint(int size, const Eigen::VectorXd& g) {
  const int n = size * size;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const int p = i * size + j;
      double v = 0.0;
      if (j + 1 < size) v -= g(p);
      if (j >= 1) v += g(p - 1);
      if (i + 1 < size) v -= g(n + p);
      if (i >= 1) v += g(n + p - size);
      x(p) = v;
    }
  }
  return x;
}

// Estimates the extreme eigenvalues of the (symmetric) metric with power
// iterations and rejects stepsizes that make it indefinite. Random quadratic
// forms alone miss thin negative cones, so the smallest eigenvalue is hunted
// through the shifted operator s I - M.
void check_metric_psd(const MetricMatrix& metric, const char* what,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Point z(metric.dimension);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
  z.normalize();
  double radius = 0.0;
  for (int it = 0; it < 40; ++it) {
    Point mz = metric.apply(z);
    radius = mz.norm();
    if (radius == 0.0) return;  // zero map is (degenerately) PSD
    z = mz / radius;
  }
  const double shift = 1.05 * radius;
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
  z.normalize();
  double lambda_min = 0.0;
  for (int it = 0; it < 80; ++it) {
    Point bz = shift * z - metric.apply(z);
    const double norm = bz.norm();
    z = bz / norm;
    lambda_min = shift - norm;
  }
  if (lambda_min < -1e-7 * radius) {
    throw NumericsError(std::string(what) +
                        ": metric indefinite at the given stepsizes (smallest "
                        "eigenvalue about " +
                        std::to_string(lambda_min) + ")");
  }
}

}  // namespace

CtProblem ct_pdhg(int image_size, int n_angles, double alpha, double beta,
                  double lambda_reg, const Eigen::VectorXd* phantom_override) {
  if (image_size < 2 || image_size > 64) {
    throw ContractViolation("ct_pdhg: image_size must be in [2, 64]");
  }
  if (alpha <= 0.0 || beta <= 0.0 || lambda_reg < 0.0) {
    throw ContractViolation("ct_pdhg: need alpha > 0, beta > 0, lambda >= 0");
  }
  CtProblem p;
  p.image_size = image_size;
  p.n_angles = n_angles;
  p.n_detectors = static_cast<int>(std::ceil(std::sqrt(2.0) * image_size)) | 1;
  p.alpha = alpha;
  p.beta = beta;
  p.lambda = lambda_reg;
  p.radon = radon_matrix(image_size, n_angles, p.n_detectors);
  if (phantom_override != nullptr) {
    if (phantom_override->size() !=
        static_cast<Eigen::Index>(image_size) * image_size) {
      throw ContractViolation("ct_pdhg: phantom override has the wrong size");
    }
    p.phantom = *phantom_override;
  } else {
    p.phantom = shepp_logan_phantom(image_size);
  }
  p.sinogram = p.radon * p.phantom;

  const int n = image_size * image_size;
  const int m = static_cast<int>(p.radon.rows());
  auto E = std::make_shared<Eigen::MatrixXd>(p.radon);
  auto b = std::make_shared<Eigen::VectorXd>(p.sinogram);
  const double clip = lambda_reg * alpha / beta;
  const int size = image_size;

  p.map.dimension = n + m + 2 * n;
  p.map.gamma = 1.0;
  p.map.evaluate = [=](const Point& z) -> Point {
    const Eigen::VectorXd x = z.segment(0, n);
    const Eigen::VectorXd u = z.segment(n, m);
    const Eigen::VectorXd v = z.segment(n + m, 2 * n);
    Eigen::VectorXd x_next =
        x - alpha * (E->transpose() * u) - beta * grad_adjoint(size, v);
    const Eigen::VectorXd overshoot = 2.0 * x_next - x;
    Eigen::VectorXd u_next =
        (u + alpha * (*E * overshoot) - alpha * *b) / (1.0 + alpha);
    Eigen::VectorXd v_next = v + beta * grad_apply(size, overshoot);
    for (int i = 0; i < 2 * n; ++i) {
      v_next(i) = std::clamp(v_next(i), -clip, clip);
    }
    Point out(n + m + 2 * n);
    out << x_next, u_next, v_next;
    return out;
  };

  // Dual diagonal blocks carry 1/alpha: this is the matrix under which one
  // sweep is a proximal-point step of the saddle operator, hence firmly
  // nonexpansive. With 1/beta there instead, trajectories show slowly growing
  // residuals, so that scaling is not a nonexpansiveness norm for this update.
  p.metric.dimension = p.map.dimension;
  p.metric.apply = [=](const Point& z) -> Point {
    const Eigen::VectorXd x = z.segment(0, n);
    const Eigen::VectorXd u = z.segment(n, m);
    const Eigen::VectorXd v = z.segment(n + m, 2 * n);
    Point out(n + m + 2 * n);
    out.segment(0, n) = x / alpha - E->transpose() * u -
                        (beta / alpha) * grad_adjoint(size, v);
    out.segment(n, m) = -(*E * x) + u / alpha;
    out.segment(n + m, 2 * n) = -(beta / alpha) * grad_apply(size, x) + v / alpha;
    return out;
  };
  check_metric_psd(p.metric, "ct_pdhg", 7u);
  return p;
}

// ---------------------------------------------------------------------------
// EMD

void validate_measures(const GridMeasurePair& measures) {
  const int n = measures.n;
  if (n < 2) throw ContractViolation("measures: grid size must be >= 2");
  if (measures.rho0.rows() != n || measures.rho0.cols() != n ||
      measures.rho1.rows() != n || measures.rho1.cols() != n) {
    throw ContractViolation("measures: grids must be n x n");
  }
  for (const auto* rho : {&measures.rho0, &measures.rho1}) {
    if ((rho->array() < 0.0).any()) {
      throw ContractViolation("measures: negative mass");
    }
    if (std::abs(rho->sum() - 1.0) > 1e-12) {
      throw ContractViolation("measures: total mass " +
                              std::to_string(rho->sum()) + " != 1");
    }
  }
}

GridMeasurePair two_circle_measures(int n) {
  GridMeasurePair m;
  m.n = n;
  m.rho0 = Eigen::MatrixXd::Zero(n, n);
  m.rho1 = Eigen::MatrixXd::Zero(n, n);
  const double h = 4.0 / n;  // domain [-2,2]^2
  for (int i = 0; i < n; ++i) {
    const double x = -2.0 + (i + 0.5) * h;
    for (int j = 0; j < n; ++j) {
      const double y = -2.0 + (j + 0.5) * h;
      if (x * x + y * y <= 0.09) m.rho0(i, j) = 1.0;
      for (double cx : {-1.0, 1.0}) {
        for (double cy : {-1.0, 1.0}) {
          const double dx = x - cx, dy = y - cy;
          if (dx * dx + dy * dy <= 0.04) m.rho1(i, j) = 1.0;
        }
      }
    }
  }
  const double s0 = m.rho0.sum(), s1 = m.rho1.sum();
  if (s0 == 0.0 || s1 == 0.0) {
    throw ContractViolation("two_circle_measures: grid too coarse");
  }
  m.rho0 /= s0;
  m.rho1 /= s1;
  return m;
}

namespace {

struct EmdOps {
  int n;

  // phi is n x n row-major; gradient components live on the padded grids.
  void grad(const Eigen::VectorXd& phi, Eigen::VectorXd& gx,
            Eigen::VectorXd& gy) const {
    gx.setZero();
    gy.setZero();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int p = i * n + j;
        if (i + 1 < n) gx(p) = phi(p + n) - phi(p);
        if (j + 1 < n) gy(p) = phi(p + 1) - phi(p);
      }
    }
  }

  Eigen::VectorXd div(const Eigen::VectorXd& mx, const Eigen::VectorXd& my) const {
    Eigen::VectorXd d(n * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int p = i * n + j;
        double v = mx(p) + my(p);
        if (i >= 1) v -= mx(p - n);
        if (j >= 1) v -= my(p - 1);
        d(p) = v;
      }
    }
    return d;
  }
};

}  // namespace

EmdProblem emd_pdhg(const GridMeasurePair& measures, double mu, double epsilon,
                    double tau) {
  validate_measures(measures);
  if (mu <= 0.0 || tau <= 0.0 || epsilon < 0.0) {
    throw ContractViolation("emd_pdhg: need mu > 0, tau > 0, epsilon >= 0");
  }
  EmdProblem p;
  p.measures = measures;
  p.mu = mu;
  p.epsilon = epsilon;
  p.tau = tau;

  const int n = measures.n;
  const int cells = n * n;
  auto ops = std::make_shared<EmdOps>(EmdOps{n});
  Eigen::VectorXd source(cells);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      source(i * n + j) = measures.rho1(i, j) - measures.rho0(i, j);
    }
  }
  auto src = std::make_shared<Eigen::VectorXd>(std::move(source));

  p.map.dimension = 3 * cells;
  p.map.gamma = 1.0;
  p.map.evaluate = [ops, src, mu, epsilon, tau, n, cells](const Point& z) -> Point {
    const Eigen::VectorXd mx = z.segment(0, cells);
    const Eigen::VectorXd my = z.segment(cells, cells);
    const Eigen::VectorXd phi = z.segment(2 * cells, cells);
    Eigen::VectorXd gx(cells), gy(cells);
    ops->grad(phi, gx, gy);
    const double damp = 1.0 / (1.0 + epsilon * mu);
    Eigen::VectorXd mx_next(cells), my_next(cells);
    for (int p2 = 0; p2 < cells; ++p2) {
      mx_next(p2) = damp * soft_threshold(mx(p2) + mu * gx(p2), mu);
      my_next(p2) = damp * soft_threshold(my(p2) + mu * gy(p2), mu);
    }
    // Keep the padding structural: last row of the x-part, last column of the
    // y-part.
    for (int j = 0; j < n; ++j) mx_next((n - 1) * n + j) = 0.0;
    for (int i = 0; i < n; ++i) my_next(i * n + (n - 1)) = 0.0;
    const Eigen::VectorXd phi_next =
        phi + tau * (ops->div(2.0 * mx_next - mx, 2.0 * my_next - my) + *src);
    Point out(3 * cells);
    out << mx_next, my_next, phi_next;
    return out;
  };

  p.metric.dimension = p.map.dimension;
  p.metric.apply = [ops, mu, tau, cells](const Point& z) -> Point {
    const Eigen::VectorXd mx = z.segment(0, cells);
    const Eigen::VectorXd my = z.segment(cells, cells);
    const Eigen::VectorXd phi = z.segment(2 * cells, cells);
    Eigen::VectorXd gx(cells), gy(cells);
    ops->grad(phi, gx, gy);
    Point out(3 * cells);
    out.segment(0, cells) = mx / mu + gx;
    out.segment(cells, cells) = my / mu + gy;
    out.segment(2 * cells, cells) = phi / tau - ops->div(mx, my);
    return out;
  };
  check_metric_psd(p.metric, "emd_pdhg", 11u);
  return p;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto r = rows.size();
  if (r == 0) return {};
  const auto c = rows.at(0).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j < c; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows.at(i).at(j).get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  }
  return v;
}

}  // namespace

std::string measures_to_json(const GridMeasurePair& measures) {
  json doc;
  doc["kind"] = "grid_measures";
  doc["n"] = measures.n;
  doc["rho0"] = matrix_to_json(measures.rho0);
  doc["rho1"] = matrix_to_json(measures.rho1);
  return doc.dump();
}

GridMeasurePair measures_from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.value("kind", "") != "grid_measures") {
    throw ContractViolation("measures_from_json: wrong document kind");
  }
  GridMeasurePair m;
  m.n = doc.at("n").get<int>();
  m.rho0 = matrix_from_json(doc.at("rho0"));
  m.rho1 = matrix_from_json(doc.at("rho1"));
  validate_measures(m);
  return m;
}

std::string network_to_json(const NetworkProblem& problem) {
  json doc;
  doc["kind"] = "network_problem";
  doc["nodes"] = problem.graph.nodes;
  json edges = json::array();
  for (auto [a, b] : problem.graph.edges) edges.push_back(json::array({a, b}));
  doc["edges"] = std::move(edges);
  doc["alpha"] = problem.alpha;
  doc["lambda"] = problem.lambda;
  doc["signal"] = vector_to_json(problem.signal);
  json sensing = json::array();
  for (const auto& A : problem.sensing) sensing.push_back(matrix_to_json(A));
  doc["sensing"] = std::move(sensing);
  json meas = json::array();
  for (const auto& b : problem.measurements) meas.push_back(vector_to_json(b));
  doc["measurements"] = std::move(meas);
  return doc.dump();
}

NetworkProblem network_from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.value("kind", "") != "network_problem") {
    throw ContractViolation("network_from_json: wrong document kind");
  }
  NetworkProblem p;
  p.graph.nodes = doc.at("nodes").get<int>();
  for (const auto& e : doc.at("edges")) {
    p.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  p.alpha = doc.at("alpha").get<double>();
  p.lambda = doc.at("lambda").get<double>();
  p.signal = vector_from_json(doc.at("signal"));
  for (const auto& A : doc.at("sensing")) p.sensing.push_back(matrix_from_json(A));
  for (const auto& b : doc.at("measurements")) {
    p.measurements.push_back(vector_from_json(b));
  }
  p.mixing = metropolis_weights(p.graph);
  return p;
}

std::string phantom_to_json(const Eigen::VectorXd& image, int size) {
  if (image.size() != static_cast<Eigen::Index>(size) * size) {
    throw ContractViolation("phantom_to_json: size mismatch");
  }
  json doc;
  doc["kind"] = "phantom";
  doc["size"] = size;
  doc["pixels"] = vector_to_json(image);
  return doc.dump();
}

Eigen::VectorXd phantom_from_json(const std::string& text, int* size) {
  const json doc = json::parse(text);
  if (doc.value("kind", "") != "phantom") {
    throw ContractViolation("phantom_from_json: wrong document kind");
  }
  const int s = doc.at("size").get<int>();
  Eigen::VectorXd img = vector_from_json(doc.at("pixels"));
  if (img.size() != static_cast<Eigen::Index>(s) * s) {
    throw ContractViolation("phantom_from_json: pixel count mismatch");
  }
  if (size != nullptr) *size = s;
  return img;
}

}  // namespace anchor::problems

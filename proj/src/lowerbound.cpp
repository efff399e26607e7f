#include "anchor/lowerbound.hpp"

#include <cmath>
#include <cstdio>

#include "anchor/solvers.hpp"

namespace anchor::lowerbound {

namespace {

// Orthonormal basis grown one vector at a time; classical Gram-Schmidt with a
// second orthogonalization pass.
class OrthoBasis {
 public:
  // Removes the component of v lying in the current span.
  Point project_out(Point v) const {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis_) v -= q.dot(v) * q;
    }
    return v;
  }

  // Adds v (orthogonalized) unless it is numerically inside the span already.
  // Returns true when the basis grew.
  bool add(const Point& v, double drop_tol = 1e-12) {
    const double scale = v.norm();
    if (scale == 0.0) return false;
    Point q = project_out(v);
    if (q.norm() <= drop_tol * scale) return false;
    q.normalize();
    basis_.push_back(std::move(q));
    return true;
  }

  double distance_to_span(const Point& v) const { return project_out(v).norm(); }

  size_t size() const { return basis_.size(); }

 private:
  std::vector<Point> basis_;
};

}  // namespace

Point WorstCaseInstance::apply_H(const Point& z) const {
  const Eigen::Index n = z.size();
  Point out(n);
  const double scale = 1.0 / (1.0 + gamma);
  out(0) = scale * (gamma * z(0) + z(n - 1));
  for (Eigen::Index i = 1; i < n; ++i) {
    out(i) = scale * (gamma * z(i) - z(i - 1));
  }
  return out;
}

Point WorstCaseInstance::apply_G(const Point& z) const {
  return apply_H(z) - b;
}

Eigen::MatrixXd WorstCaseInstance::dense_H() const {
  const Eigen::Index n = dimension();
  if (n > 64) {
    throw ContractViolation("dense_H: refusing to materialize H above 64x64");
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  const double scale = 1.0 / (1.0 + gamma);
  for (Eigen::Index i = 0; i < n; ++i) H(i, i) = scale * gamma;
  for (Eigen::Index i = 1; i < n; ++i) H(i, i - 1) = -scale;
  H(0, n - 1) = scale;
  return H;
}

WorstCaseOperator build_worst_case(int N, double gamma, double radius,
                                   const Point& y0) {
  if (N < 1) throw ContractViolation("build_worst_case: N must be >= 1");
  if (gamma < 1.0) throw ContractViolation("build_worst_case: gamma must be >= 1");
  if (radius <= 0.0) throw ContractViolation("build_worst_case: R must be > 0");
  require_dimension(N + 1, y0, "build_worst_case");

  WorstCaseOperator out;
  WorstCaseInstance& inst = out.instance;
  inst.horizon = N;
  inst.gamma = gamma;
  inst.radius = radius;
  inst.y0 = y0;

  const double phi_N = solvers::geometric_sum(gamma * gamma, N + 1);
  const double root = std::sqrt(phi_N);
  inst.b = Point::Zero(N + 1);
  inst.b(0) = radius * (1.0 + std::pow(gamma, N + 1)) / ((1.0 + gamma) * root);

  inst.y_star = Point(N + 1);
  for (int i = 0; i <= N; ++i) {
    inst.y_star(i) = radius * std::pow(gamma, N - i) / root;
  }
  inst.y_star += y0;

  const double c = (1.0 + gamma) / gamma;
  const WorstCaseInstance snapshot = inst;
  out.map.dimension = N + 1;
  out.map.gamma = gamma;
  out.map.evaluate = [snapshot, c](const Point& y) -> Point {
    Point z = y - snapshot.y0;
    return z - c * snapshot.apply_G(z) + snapshot.y0;
  };
  return out;
}

double lower_bound_value(int N, double gamma, double radius) {
  if (N < 0) throw ContractViolation("lower_bound_value: N must be >= 0");
  if (gamma < 1.0) throw ContractViolation("lower_bound_value: gamma must be >= 1");
  const double s = solvers::geometric_sum(gamma, N + 1);
  const double f = (1.0 + 1.0 / gamma) / s;
  return f * f * radius * radius;
}

bool verify_span_condition(const IterationTrace& trace, double tol) {
  if (trace.records.empty()) return true;
  if (trace.start.size() == 0) {
    throw ContractViolation("verify_span_condition: trace has no start point");
  }
  OrthoBasis span;
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const auto& rec = trace.records[i];
    if (rec.point.size() == 0 || rec.residual.size() == 0) {
      throw ContractViolation(
          "verify_span_condition: trace lacks recorded points/residuals");
    }
    if (i > 0) {
      const Point d = rec.point - trace.start;
      if (span.distance_to_span(d) > tol * d.norm()) return false;
    }
    span.add(rec.residual);
  }
  return true;
}

namespace {

constexpr double kSupportThreshold = 1e-13;

// Deterministic draw of a unit vector orthogonal to `constraints`: sweep the
// canonical basis and keep the first direction whose projection onto the
// orthogonal complement is substantial.
Point draw_orthogonal(const OrthoBasis& constraints, Eigen::Index n) {
  for (Eigen::Index j = 0; j < n; ++j) {
    Point v = Point::Zero(n);
    v(j) = 1.0;
    Point q = constraints.project_out(std::move(v));
    if (q.norm() > 1e-6) {
      q.normalize();
      return q;
    }
  }
  throw NumericsError(
      "resisting_oracle: constraint space exhausted; cannot draw a fresh "
      "orthogonal column");
}

}  // namespace

ResistingOracleReport resisting_oracle(const VictimStep& victim, int N, int n,
                                       const Point& y0, double gamma,
                                       double radius) {
  if (N < 1) throw ContractViolation("resisting_oracle: N must be >= 1");
  if (n < 2 * N) {
    throw ContractViolation("resisting_oracle: requires n >= 2N (n=" +
                            std::to_string(n) + ", N=" + std::to_string(N) + ")");
  }
  require_dimension(n, y0, "resisting_oracle");

  const int dim_base = N + 1;
  WorstCaseOperator base = build_worst_case(N, gamma, radius,
                                            Point::Zero(dim_base));
  const double c = (1.0 + gamma) / gamma;
  auto T0 = [&](const Point& z) -> Point {
    return z - c * base.instance.apply_G(z);
  };

  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, dim_base);
  std::vector<bool> chosen(static_cast<size_t>(dim_base), false);
  OrthoBasis constraints;  // span of answered queries and chosen columns
  std::vector<std::pair<Point, Point>> transcript;  // (query, answer)

  auto z_of = [&](const Point& d) -> Point {
    Point z = Point::Zero(dim_base);
    for (int i = 0; i < dim_base; ++i) {
      if (chosen[static_cast<size_t>(i)]) z(i) = U.col(i).dot(d);
    }
    return z;
  };

  auto lift = [&](const Point& w) -> Point {
    Point out = Point::Zero(n);
    for (int i = 0; i < dim_base; ++i) {
      if (w(i) == 0.0) continue;
      if (!chosen[static_cast<size_t>(i)]) {
        // Entries below the support threshold were ruled exact zeros when the
        // support was decided; anything larger here is a logic error.
        if (std::abs(w(i)) > 10 * kSupportThreshold) {
          throw NumericsError("resisting_oracle: lift touched an unchosen column");
        }
        continue;
      }
      out += w(i) * U.col(i);
    }
    return out;
  };

  auto answer_query = [&](const Point& y) -> Point {
    require_dimension(n, y, "resisting_oracle query");
    require_finite(y, "resisting_oracle query");
    const Point d = y - y0;
    // Repeat query: the answer must be reproducible or the interaction is
    // not a run of a deterministic algorithm against one fixed operator.
    const Point* previous = nullptr;
    for (const auto& [q, a] : transcript) {
      if ((q - d).lpNorm<Eigen::Infinity>() == 0.0) {
        previous = &a;
        break;
      }
    }
    constraints.add(d);
    const Point z = z_of(d);
    const Point w = T0(z);
    const Point rbase = z - w;
    for (int i = 0; i < dim_base; ++i) {
      if (!chosen[static_cast<size_t>(i)] &&
          std::abs(rbase(i)) > kSupportThreshold) {
        U.col(i) = draw_orthogonal(constraints, n);
        constraints.add(U.col(i));
        chosen[static_cast<size_t>(i)] = true;
      }
    }
    Point ans = d - lift(w);
    if (previous != nullptr &&
        (*previous - ans).lpNorm<Eigen::Infinity>() > 1e-12) {
      throw ContractViolation(
          "resisting_oracle: repeat query received a different answer; "
          "victim/oracle interaction is inconsistent");
    }
    transcript.emplace_back(d, ans);
    return ans;
  };

  Point y = y0;
  for (int t = 0; t < N; ++t) {
    Point r = answer_query(y);
    y = victim(t, y, r);
    require_dimension(n, y, "resisting_oracle victim iterate");
    require_finite(y, "resisting_oracle victim iterate");
  }

  // Completion: remaining columns stay orthogonal to everything answered so
  // that the transcript remains a truthful run against the finished T_U. The
  // final query point itself is not a constraint; if the last base direction
  // ends up correlated with it, orienting the column against the anchor
  // offset keeps the projection argument intact.
  const Point d_final = y - y0;
  for (int i = 0; i < dim_base; ++i) {
    if (!chosen[static_cast<size_t>(i)]) {
      U.col(i) = draw_orthogonal(constraints, n);
      constraints.add(U.col(i));
      chosen[static_cast<size_t>(i)] = true;
      if (i == dim_base - 1 && U.col(i).dot(d_final) > 0.0) {
        U.col(i) = -U.col(i);
      }
    }
  }

  ResistingOracleReport report;
  report.embedding = U;
  report.base = base.instance;
  report.queries_answered = N;
  const Point z_final = U.transpose() * d_final;
  report.final_point = y;
  report.final_residual = d_final - U * T0(z_final);
  report.final_residual_sq = report.final_residual.squaredNorm();
  report.transcript.reserve(transcript.size());
  for (auto& [d, ans] : transcript) {
    report.transcript.emplace_back(d + y0, std::move(ans));
  }
  return report;
}

std::string export_instance_text(const WorstCaseInstance& inst) {
  std::string out;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  };
  auto put_vector = [&](const char* name, const Point& v) {
    out += name;
    out += ' ' + std::to_string(v.size()) + '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i > 0) out += ' ';
      put(v(i));
    }
    out += '\n';
  };

  out += "worst_case_instance\n";
  out += "horizon " + std::to_string(inst.horizon) + '\n';
  out += "gamma ";
  put(inst.gamma);
  out += "\nradius ";
  put(inst.radius);
  out += '\n';
  const Eigen::MatrixXd H = inst.dense_H();
  out += "H " + std::to_string(H.rows()) + ' ' + std::to_string(H.cols()) + '\n';
  for (Eigen::Index r = 0; r < H.rows(); ++r) {
    for (Eigen::Index col = 0; col < H.cols(); ++col) {
      if (col > 0) out += ' ';
      put(H(r, col));
    }
    out += '\n';
  }
  put_vector("b", inst.b);
  put_vector("y0", inst.y0);
  put_vector("y_star", inst.y_star);
  return out;
}

}  // namespace anchor::lowerbound

#include <cmath>
#include <iostream>
#include <optional>
#include <random>

#include "anchor/analysis.hpp"
#include "anchor/lowerbound.hpp"
#include "anchor/problems.hpp"
#include "anchor/solvers.hpp"
#include "anchor/transforms.hpp"
#include "experiments.hpp"

namespace anchor::cli {

using nlohmann::json;

namespace {

using Failure = std::optional<std::string>;

Failure check_lyapunov_decrease(std::uint64_t seed) {
  for (double mu : {0.0, 0.1, 1.0}) {
    auto A = problems::random_linear_monotone(8, mu, seed + static_cast<int>(10 * mu));
    std::mt19937_64 rng(seed + 7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Point y0(8);
    for (int i = 0; i < 8; ++i) y0(i) = gauss(rng);
    const Point x_star = Point::Zero(8);
    auto trace = solvers::os_ppm(A, mu, y0, 60);
    const double v0 = 2.0 * y0.squaredNorm();
    double prev = v0;
    bool first = true;
    for (const auto& rec : trace.records) {
      analysis::LyapunovInputs in{rec.iter, rec.point, rec.residual, y0, x_star, mu};
      const double vp = analysis::lyapunov_value(in, analysis::LyapunovForm::primary);
      const double va = analysis::lyapunov_value(in, analysis::LyapunovForm::alternate);
      if (std::abs(vp - va) > 1e-12 * std::max(1.0, v0)) {
        return "primary/alternate forms disagree at k=" + std::to_string(rec.iter);
      }
      if (first && std::abs(vp - v0) > 1e-9 * v0) {
        return "V^1 != V^0 (mu=" + std::to_string(mu) + ")";
      }
      first = false;
      if (vp > prev + 1e-9 * v0) {
        return "V^{k+1} > V^k at k=" + std::to_string(rec.iter) +
               " (mu=" + std::to_string(mu) + ")";
      }
      prev = vp;
    }
  }
  return std::nullopt;
}

Failure check_exact_optimality(std::uint64_t) {
  for (int N = 1; N <= 15; ++N) {
    for (double gamma : {1.0, 1.05, 1.2}) {
      auto wc = lowerbound::build_worst_case(N, gamma, 1.0, Point::Zero(N + 1));
      auto trace = solvers::oc_halpern(wc.map, gamma, Point::Zero(N + 1), N);
      const double lb = lowerbound::lower_bound_value(N, gamma, 1.0);
      if (std::abs(trace.final_residual_sq() - lb) > 1e-8 * lb) {
        return "residual mismatch at N=" + std::to_string(N) +
               ", gamma=" + std::to_string(gamma);
      }
    }
  }
  return std::nullopt;
}

// With a corrupted phi-recurrence the reference anchored loop must diverge
// from the proximal run, and the property reports the discrepancy.
Failure check_method_equivalence(std::uint64_t seed, double phi_corruption) {
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 0.1 : 1.0);
    const double gamma = 1.0 + 2.0 * mu;
    auto A = problems::random_linear_monotone(8, mu, seed + trial);
    auto T = transforms::contraction_from_resolvent(A, mu);
    std::mt19937_64 rng(seed + 31 + trial);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Point y0(8);
    for (int i = 0; i < 8; ++i) y0(i) = gauss(rng);

    auto prox = solvers::os_ppm(A, mu, y0, 40);
    // Reference anchored iteration, phi built here so a corrupted recurrence
    // can be injected.
    std::vector<double> phi(41);
    double prev = 0.0;
    for (int k = 0; k <= 40; ++k) {
      prev = gamma * gamma * prev + 1.0 + phi_corruption;
      phi[static_cast<size_t>(k)] = prev;
    }
    Point y = y0;
    for (int k = 1; k <= 40; ++k) {
      y = (1.0 - 1.0 / phi[static_cast<size_t>(k)]) * T.evaluate(y) +
          (1.0 / phi[static_cast<size_t>(k)]) * y0;
      const Point& yr = *prox.records[static_cast<size_t>(k - 1)].anchor_point;
      if ((y - yr).norm() > 1e-10) {
        return "anchored and proximal iterates diverge at k=" +
               std::to_string(k) + " (trial " + std::to_string(trial) + ")";
      }
    }
  }
  return std::nullopt;
}

Failure check_span_condition(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int N : {4, 9}) {
    for (double gamma : {1.0, 1.1}) {
      Point y0(N + 1);
      for (int i = 0; i <= N; ++i) y0(i) = gauss(rng);
      auto wc = lowerbound::build_worst_case(N, gamma, 1.0, y0);
      auto trace = solvers::oc_halpern(wc.map, gamma, y0, N);
      if (!lowerbound::verify_span_condition(trace)) {
        return "anchored trace violates the span condition (N=" +
               std::to_string(N) + ")";
      }
      // Negative control: a perturbed iterate must be flagged.
      trace.records[1].point(N) += 1.0;
      if (lowerbound::verify_span_condition(trace)) {
        return "perturbed trace passed the span check (N=" + std::to_string(N) +
               ")";
      }
    }
  }
  return std::nullopt;
}

}  // namespace

int run_verify(const json& config) {
  const std::uint64_t seed = config.value("seed", std::uint64_t{0});
  const std::string fault = config.value("inject_fault", "");
  if (!fault.empty() && fault != "phi-recurrence") {
    throw ContractViolation("verify: unknown inject_fault '" + fault + "'");
  }
  const double phi_corruption = fault == "phi-recurrence" ? 1e-3 : 0.0;

  std::vector<std::string> suite = {"lyapunov-decrease", "exact-optimality",
                                    "method-equivalence", "span-condition"};
  if (config.contains("suite")) {
    suite.clear();
    for (const auto& name : config.at("suite")) {
      suite.push_back(name.get<std::string>());
    }
  }
  if (suite.empty()) {
    std::cout << "warning: 0 properties run\n";
    return kExitOk;
  }

  int failures = 0;
  for (const auto& name : suite) {
    Failure failure;
    if (name == "lyapunov-decrease") {
      failure = check_lyapunov_decrease(seed);
    } else if (name == "exact-optimality") {
      failure = check_exact_optimality(seed);
    } else if (name == "method-equivalence") {
      failure = check_method_equivalence(seed, phi_corruption);
    } else if (name == "span-condition") {
      failure = check_span_condition(seed);
    } else {
      throw ContractViolation("verify: unknown property '" + name + "'");
    }
    if (failure) {
      ++failures;
      std::cout << "FAIL " << name << ": " << *failure << '\n';
    } else {
      std::cout << "PASS " << name << '\n';
    }
  }
  return failures == 0 ? kExitOk : kExitFailure;
}

}  // namespace anchor::cli

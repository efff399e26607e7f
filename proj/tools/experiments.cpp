#include "experiments.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <iostream>

#include "anchor/analysis.hpp"
#include "anchor/lowerbound.hpp"
#include "anchor/problems.hpp"
#include "anchor/restart.hpp"
#include "anchor/solvers.hpp"
#include "anchor/transforms.hpp"

namespace anchor::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const IterationTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot open output file " + path.string());
  out << "iter,residual_sq,dist_sq,bound,lyapunov,wall_ns\n";
  for (const auto& rec : trace.records) {
    out << rec.iter << ',' << fmt17(rec.residual_sq) << ',';
    if (rec.dist_sq) out << fmt17(*rec.dist_sq);
    out << ',';
    if (rec.bound) out << fmt17(*rec.bound);
    out << ',';
    if (rec.lyapunov) out << fmt17(*rec.lyapunov);
    out << ',' << rec.wall_ns << '\n';
  }
  if (!out.good()) throw ContractViolation("failed writing " + path.string());
}

std::uint64_t seed_of(const json& config) {
  return config.value("seed", std::uint64_t{0});
}

int iterations_of(const json& config, int fallback) {
  const int n = config.value("N", fallback);
  if (n < 1) throw ContractViolation("config: N must be >= 1");
  return n;
}

std::vector<std::string> solver_list(const json& config,
                                     std::vector<std::string> fallback) {
  if (!config.contains("solvers")) return fallback;
  std::vector<std::string> out;
  for (const auto& s : config.at("solvers")) out.push_back(s.get<std::string>());
  if (out.empty()) throw ContractViolation("config: empty solver list");
  return out;
}

restart::RestartSchedule schedule_from_config(const json& config, int N) {
  const double lambda = config.value("schedule_lambda", 4.0);
  const double beta = config.value("schedule_beta", 0.75);
  return restart::schedule_from_parameters(lambda, beta, N,
                                           /*clamp_to_single_leg=*/true);
}

json schedule_to_json(const restart::RestartSchedule& s) {
  json out;
  out["lambda"] = s.lambda;
  out["beta"] = s.beta;
  out["inner_counts"] = s.inner_counts;
  return out;
}

struct NamedRun {
  std::string name;
  IterationTrace trace;
  json extra;  // per-solver manifest additions
};

// Shared dispatch for operators given through their resolvent. mu_strong is
// the strong monotonicity constant used by os_ppm; restarted runs take their
// schedule from the config (or the uniform-monotonicity parameters when
// present, as in the power-operator experiment).
NamedRun run_monotone_solver(const std::string& name, const ResolventOracle& A,
                             double mu_strong, const Point& y0, int N,
                             const SolveOptions& opts, const json& config) {
  NamedRun run;
  run.name = name;
  if (name == "ppm") {
    run.trace = solvers::ppm(A, y0, N, opts);
  } else if (name == "os_ppm") {
    run.trace = solvers::os_ppm(A, mu_strong, y0, N, opts);
  } else if (name == "os_ppm_anchored") {
    run.trace = solvers::os_ppm_anchored(A, mu_strong, y0, N, opts);
  } else if (name == "appm") {
    run.trace = solvers::os_ppm(A, 0.0, y0, N, opts);
    run.trace.solver = "appm";
  } else if (name == "restarted_os_ppm") {
    restart::RestartSchedule sched;
    if (config.contains("schedule_lambda") || !config.contains("uniform_mu")) {
      sched = schedule_from_config(config, N);
    } else {
      sched = restart::make_schedule(config.at("uniform_mu").get<double>(),
                                     config.at("uniform_alpha").get<double>(),
                                     config.at("dist0").get<double>(), N);
    }
    run.trace = restart::restarted_os_ppm(A, y0, sched, opts);
    run.extra["schedule"] = schedule_to_json(sched);
  } else {
    throw ContractViolation("unknown solver for a monotone experiment: " + name);
  }
  return run;
}

NamedRun run_contraction_solver(const std::string& name, const FixedPointMap& T,
                                double gamma, const Point& y0, int N,
                                const SolveOptions& opts, const json& config) {
  NamedRun run;
  run.name = name;
  if (name == "picard") {
    run.trace = solvers::picard(T, y0, N, opts);
  } else if (name == "km") {
    const double lk = config.value("km_lambda", 0.5);
    run.trace = solvers::km(T, y0, [lk](int) { return lk; }, N, opts);
  } else if (name == "halpern") {
    run.trace = solvers::halpern(T, y0, solvers::classic_halpern_lambda(), N, opts);
  } else if (name == "ohm") {
    run.trace = solvers::oc_halpern(T, 1.0, y0, N, opts);
    run.trace.solver = "ohm";
  } else if (name == "oc_halpern") {
    run.trace = solvers::oc_halpern(T, gamma, y0, N, opts);
  } else if (name == "restarted_oc_halpern") {
    if (config.value("schedule", "") == "grid") {
      // Run every candidate schedule, keep the best final residual.
      double best = std::numeric_limits<double>::infinity();
      for (const auto& sched :
           restart::grid_search_schedules(N, restart::default_grid())) {
        auto trace = restart::restarted_oc_halpern(T, y0, sched, opts);
        if (trace.final_residual_sq() < best) {
          best = trace.final_residual_sq();
          run.trace = std::move(trace);
          run.extra["schedule"] = schedule_to_json(sched);
        }
      }
      run.extra["grid_candidates"] = restart::default_grid().size();
    } else {
      auto sched = schedule_from_config(config, N);
      run.trace = restart::restarted_oc_halpern(T, y0, sched, opts);
      run.extra["schedule"] = schedule_to_json(sched);
    }
  } else {
    throw ContractViolation("unknown solver for an operator experiment: " + name);
  }
  return run;
}

Point point_from_config(const json& config, const char* key,
                        const Point& fallback) {
  if (!config.contains(key)) return fallback;
  const auto& arr = config.at(key);
  Point p(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) p(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

struct ExperimentResult {
  std::vector<NamedRun> runs;
  json manifest_extra;
};

ExperimentResult run_toy2d(const json& config) {
  ExperimentResult result;
  const int N = iterations_of(config, 101);
  const std::string kind = config.value("operator", "rotation");
  SolveOptions opts;
  opts.known_solution = Point::Zero(2);
  Point y0(2);
  y0 << 1.0, 0.0;
  y0 = point_from_config(config, "y0", y0);

  if (kind == "rotation") {
    const double theta = config.value("theta_deg", 15.0) * M_PI / 180.0;
    const double gamma = config.value("gamma", 1.0 / 0.95);
    auto T = problems::rotation_contraction(theta, gamma);
    for (const auto& name :
         solver_list(config, {"picard", "halpern", "oc_halpern"})) {
      result.runs.push_back(
          run_contraction_solver(name, T, gamma, y0, N, opts, config));
    }
  } else if (kind == "monotone") {
    const double mu = config.value("mu", 0.035);
    const int n_total = config.value("n_total", N);
    auto A = problems::toy_monotone(mu, n_total);
    for (const auto& name : solver_list(config, {"ppm", "appm", "os_ppm"})) {
      auto run = run_monotone_solver(name, A, mu, y0, N, opts, config);
      if (run.name == "os_ppm" || run.name == "os_ppm_anchored") {
        analysis::annotate_lyapunov(run.trace, *opts.known_solution, mu);
      }
      result.runs.push_back(std::move(run));
    }
  } else {
    throw ContractViolation("toy2d: unknown operator kind '" + kind + "'");
  }
  return result;
}

ExperimentResult run_worstcase(const json& config) {
  ExperimentResult result;
  const int horizon = config.value("horizon", config.value("N", 10));
  const double gamma = config.value("gamma", 1.05);
  const double radius = config.value("R", 1.0);
  auto wc = lowerbound::build_worst_case(horizon, gamma, radius,
                                         Point::Zero(horizon + 1));
  SolveOptions opts;
  opts.known_solution = wc.instance.y_star;
  const double lb = lowerbound::lower_bound_value(horizon, gamma, radius);
  result.manifest_extra["lower_bound"] = lb;
  result.manifest_extra["horizon"] = horizon;
  for (const auto& name : solver_list(config, {"oc_halpern"})) {
    auto run = run_contraction_solver(name, wc.map, gamma, wc.instance.y0,
                                      horizon, opts, config);
    run.extra["ratio_to_lower_bound"] = run.trace.final_residual_sq() / lb;
    result.runs.push_back(std::move(run));
  }
  return result;
}

ExperimentResult run_restart_power(const json& config) {
  ExperimentResult result;
  const int N = iterations_of(config, 10000);
  const double mu = config.value("mu", 1.0);
  const double alpha = config.value("alpha", 2.0);
  const int dim = config.value("dim", 5);
  const double x0_norm = config.value("x0_norm", 1.0);
  auto op = problems::power_monotone(mu, alpha, dim);

  std::mt19937_64 rng(seed_of(config));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Point x0(dim);
  for (int i = 0; i < dim; ++i) x0(i) = gauss(rng);
  x0 *= x0_norm / x0.norm();

  SolveOptions opts;
  opts.known_solution = Point::Zero(dim);
  opts.record_points = false;

  json enriched = config;
  enriched["uniform_mu"] = mu;
  enriched["uniform_alpha"] = alpha;
  enriched["dist0"] = x0_norm;
  result.manifest_extra["restarted_bound"] =
      analysis::restarted_bound(N, mu, alpha, x0_norm);
  auto ppm_bounds = analysis::ppm_uniform_bounds(N, mu, alpha, x0_norm);
  result.manifest_extra["ppm_residual_bound"] = ppm_bounds.residual_bound;

  for (const auto& name : solver_list(config, {"ppm", "restarted_os_ppm"})) {
    result.runs.push_back(
        run_monotone_solver(name, op.oracle, 0.0, x0, N, opts, enriched));
  }
  return result;
}

ExperimentResult run_ct(const json& config) {
  ExperimentResult result;
  const int N = iterations_of(config, 600);
  const int image_size = config.value("image_size", 32);
  const int n_angles = config.value("n_angles", 16);
  const double alpha = config.value("alpha", 0.01);
  const double beta = config.value("beta", 0.03);
  const double lambda = config.value("lambda", 1.0);

  problems::CtProblem problem;
  if (config.contains("instance_file")) {
    int size = 0;
    const Eigen::VectorXd img = problems::phantom_from_json(
        read_file(config.at("instance_file").get<std::string>()), &size);
    problem = problems::ct_pdhg(size, n_angles, alpha, beta, lambda, &img);
  } else {
    problem = problems::ct_pdhg(image_size, n_angles, alpha, beta, lambda);
  }
  SolveOptions opts;
  opts.metric = &problem.metric;
  opts.record_points = false;

  const Point z0 = Point::Zero(problem.map.dimension);
  for (const auto& name :
       solver_list(config, {"picard", "ohm", "restarted_oc_halpern"})) {
    result.runs.push_back(
        run_contraction_solver(name, problem.map, 1.0, z0, N, opts, config));
  }
  result.manifest_extra["image_size"] = problem.image_size;
  result.manifest_extra["n_detectors"] = problem.n_detectors;
  result.manifest_extra["norm"] = "metric";
  return result;
}

ExperimentResult run_emd(const json& config) {
  ExperimentResult result;
  const int N = iterations_of(config, 1000);
  const double mu = config.value("mu", 1e-6);
  const double epsilon = config.value("epsilon", 1.0);
  const double tau = config.value("tau", 1.0 / (16.0 * mu));

  problems::GridMeasurePair measures;
  if (config.contains("instance_file")) {
    measures = problems::measures_from_json(
        read_file(config.at("instance_file").get<std::string>()));
  } else {
    measures = problems::two_circle_measures(config.value("grid", 32));
  }
  auto problem = problems::emd_pdhg(measures, mu, epsilon, tau);
  SolveOptions opts;
  opts.metric = &problem.metric;
  opts.record_points = false;

  const Point z0 = Point::Zero(problem.map.dimension);
  for (const auto& name :
       solver_list(config, {"picard", "ohm", "restarted_oc_halpern"})) {
    result.runs.push_back(
        run_contraction_solver(name, problem.map, 1.0, z0, N, opts, config));
  }
  result.manifest_extra["grid"] = measures.n;
  result.manifest_extra["tau"] = tau;
  result.manifest_extra["norm"] = "metric";
  return result;
}

ExperimentResult run_pgextra(const json& config) {
  ExperimentResult result;
  const int N = iterations_of(config, 100);
  problems::NetworkProblem problem;
  if (config.contains("instance_file")) {
    problem = problems::network_from_json(
        read_file(config.at("instance_file").get<std::string>()));
  } else {
    problem = problems::make_network_problem(
        config.value("nodes", 10), config.value("edges", 18),
        config.value("dim", 50), config.value("sparsity", 10),
        config.value("sensors_per_node", 3), config.value("alpha", 0.005),
        config.value("lambda", 0.002), config.value("noise_sigma", 1e-3),
        seed_of(config));
  }
  auto T = problems::pg_extra(problem);

  SolveOptions opts;
  opts.record_points = false;
  MetricMatrix metric;
  const std::string norm = config.value("metric", "euclidean");
  if (norm == "splitting") {
    metric = problems::pg_extra_metric(problem);
    opts.metric = &metric;
  } else if (norm != "euclidean") {
    throw ContractViolation("pgextra: unknown metric '" + norm + "'");
  }

  const Point z0 = Point::Zero(T.dimension);
  for (const auto& name :
       solver_list(config, {"picard", "ohm", "restarted_oc_halpern"})) {
    result.runs.push_back(
        run_contraction_solver(name, T, 1.0, z0, N, opts, config));
  }
  result.manifest_extra["nodes"] = problem.graph.nodes;
  result.manifest_extra["edge_count"] = problem.graph.edges.size();
  result.manifest_extra["norm"] = norm;
  return result;
}

ExperimentResult run_custom(const json& config) {
  ExperimentResult result;
  const int N = iterations_of(config, 100);
  const int dim = config.value("dim", 10);
  const double mu = config.value("mu", 0.1);
  auto A = problems::random_linear_monotone(dim, mu, seed_of(config));

  std::mt19937_64 rng(seed_of(config) + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Point y0(dim);
  for (int i = 0; i < dim; ++i) y0(i) = gauss(rng);

  SolveOptions opts;
  opts.known_solution = Point::Zero(dim);
  for (const auto& name : solver_list(config, {"ppm", "os_ppm"})) {
    auto run = run_monotone_solver(name, A, mu, y0, N, opts, config);
    if ((run.name == "os_ppm" || run.name == "os_ppm_anchored") && N <= 1000) {
      analysis::annotate_lyapunov(run.trace, *opts.known_solution, mu);
    }
    result.runs.push_back(std::move(run));
  }
  result.manifest_extra["dim"] = dim;
  result.manifest_extra["mu"] = mu;
  return result;
}

ExperimentResult dispatch(const std::string& experiment, const json& config) {
  if (experiment == "toy2d") return run_toy2d(config);
  if (experiment == "worstcase") return run_worstcase(config);
  if (experiment == "restart-power") return run_restart_power(config);
  if (experiment == "ct") return run_ct(config);
  if (experiment == "emd") return run_emd(config);
  if (experiment == "pgextra") return run_pgextra(config);
  if (experiment == "custom") return run_custom(config);
  throw ContractViolation("unknown experiment '" + experiment + "'");
}

}  // namespace

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("config file not found: " + path);
  json config;
  try {
    in >> config;
  } catch (const json::parse_error& e) {
    throw ContractViolation("config parse error in " + path + ": " + e.what());
  }
  if (!config.is_object()) throw ContractViolation("config must be a JSON object");
  return config;
}

fs::path output_dir(const json& config) {
  if (const char* env = std::getenv("ANCHOR_OUTPUT_DIR"); env != nullptr) {
    return fs::path(env);
  }
  return fs::path(config.value("output_dir", "out"));
}

int run_experiment(const json& config) {
  if (!config.contains("experiment")) {
    throw ContractViolation("config: missing 'experiment'");
  }
  const std::string experiment = config.at("experiment").get<std::string>();
  ExperimentResult result = dispatch(experiment, config);

  const fs::path dir = output_dir(config);
  fs::create_directories(dir);
  json manifest;
  manifest["experiment"] = experiment;
  manifest["seed"] = seed_of(config);
  manifest["config"] = config;
  manifest["solvers"] = json::array();
  for (const auto& run : result.runs) {
    const std::string file = run.name + ".csv";
    write_csv(dir / file, run.trace);
    json entry = run.extra;
    entry["name"] = run.name;
    entry["csv"] = file;
    entry["iterations"] = run.trace.records.back().iter;
    entry["final_residual_sq"] = run.trace.final_residual_sq();
    entry["norm"] = run.trace.norm;
    if (!run.trace.restart_iters.empty()) {
      entry["restart_iters"] = run.trace.restart_iters;
    }
    manifest["solvers"].push_back(std::move(entry));
  }
  for (auto& [key, value] : result.manifest_extra.items()) {
    manifest[key] = value;
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ContractViolation("cannot write manifest.json");
  out << manifest.dump(2) << '\n';
  std::cout << "wrote " << result.runs.size() << " trace(s) to " << dir.string()
            << '\n';
  return kExitOk;
}

int export_instance(const json& config) {
  if (!config.contains("experiment")) {
    throw ContractViolation("config: missing 'experiment'");
  }
  const std::string experiment = config.at("experiment").get<std::string>();
  const fs::path dir = output_dir(config);
  fs::create_directories(dir);

  fs::path file;
  std::string payload;
  if (experiment == "worstcase") {
    const int horizon = config.value("horizon", config.value("N", 10));
    auto wc = lowerbound::build_worst_case(horizon, config.value("gamma", 1.05),
                                           config.value("R", 1.0),
                                           Point::Zero(horizon + 1));
    file = dir / "instance.txt";
    payload = lowerbound::export_instance_text(wc.instance);
  } else if (experiment == "ct") {
    const int size = config.value("image_size", 32);
    file = dir / "phantom.json";
    payload = problems::phantom_to_json(problems::shepp_logan_phantom(size), size);
    payload += '\n';
  } else if (experiment == "emd") {
    file = dir / "measures.json";
    payload = problems::measures_to_json(
        problems::two_circle_measures(config.value("grid", 32)));
    payload += '\n';
  } else if (experiment == "pgextra") {
    file = dir / "network.json";
    payload = problems::network_to_json(problems::make_network_problem(
        config.value("nodes", 10), config.value("edges", 18),
        config.value("dim", 50), config.value("sparsity", 10),
        config.value("sensors_per_node", 3), config.value("alpha", 0.005),
        config.value("lambda", 0.002), config.value("noise_sigma", 1e-3),
        seed_of(config)));
    payload += '\n';
  } else {
    throw ContractViolation("export-instance: experiment '" + experiment +
                            "' has no exportable instance");
  }
  std::ofstream out(file);
  if (!out) throw ContractViolation("cannot write " + file.string());
  out << payload;
  std::cout << "wrote " << file.string() << '\n';
  return kExitOk;
}

}  // namespace anchor::cli

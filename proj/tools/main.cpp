// Command-line front end: solve stopping boundaries, simulate observation
// paths, execute single tests, estimate risk, and self-check invariants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fbmseq/boundary.hpp"
#include "fbmseq/fbm.hpp"
#include "fbmseq/model.hpp"
#include "fbmseq/serialize.hpp"
#include "fbmseq/specfun.hpp"
#include "fbmseq/testbench.hpp"
#include "fbmseq/whitening.hpp"

namespace {

struct RunConfig {
  fbmseq::ModelParams params;
  int n_grid = 500;
  int n_paths = 10000;
  int n_time_steps = 512;
  double horizon_r = 0.999;
  double tolerance = 5e-3;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format = "json";

  // boundary-specific knobs
  double t_min_epsilon = 1e-4;
  double end_gap = 1e-5;
  double bisect_tol = 1e-10;
  bool extend_below_t0 = false;

  std::string table_path;
  std::string trajectory_path;
  std::string dump_path;
  std::optional<double> fixed_theta;
  double horizon_t = 1.0;
  std::string method = "mc";
};

// randomized commands either get --seed or have the generated one recorded
std::uint64_t resolve_seed(RunConfig& config) {
  if (!config.seed) {
    std::random_device rd;
    config.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::cout << "seed " << *config.seed << "\n";
  return *config.seed;
}

void add_model_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--mu", config.params.mu, "prior mean of the drift");
  cmd->add_option("--sigma", config.params.sigma,
                  "prior standard deviation of the drift")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hurst", config.params.hurst,
                  "Hurst parameter of the observation noise")
      ->required()
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));
}

int run_boundary(RunConfig& config) {
  fbmseq::SolveOptions options;
  options.n_grid = config.n_grid;
  options.t_min_epsilon = config.t_min_epsilon;
  options.end_gap = config.end_gap;
  options.bisect_tol = config.bisect_tol;
  options.residual_tolerance = config.tolerance;
  options.extend_below_t0 = config.extend_below_t0;

  const fbmseq::Model model = fbmseq::make_model(config.params);
  const fbmseq::BoundaryTable table = fbmseq::solve_boundary(model, options);
  fbmseq::save_boundary(table, config.output, config.format);
  std::cout << "boundary sigma=" << table.sigma << " hurst=" << table.hurst
            << " nodes=" << table.grid.size()
            << " t_min=" << table.meta.t_min
            << " max_residual=" << table.meta.max_residual << "\n"
            << "wrote " << config.output << "\n";
  if (table.meta.residual_warning) {
    std::cout << "warning: residual above tolerance " << config.tolerance
              << "\n";
  }
  return 0;
}

int run_simulate(RunConfig& config) {
  const std::uint64_t seed = resolve_seed(config);
  const fbmseq::Model model = fbmseq::make_model(config.params);
  const fbmseq::DrawnScenario scenario = fbmseq::sample_observation(
      model, config.fixed_theta, config.n_time_steps, config.horizon_t, seed);
  fbmseq::atomic_write(config.output, fbmseq::to_csv(scenario.path));
  std::cout << "theta " << scenario.theta << "\nwrote " << config.output
            << "\n";
  return 0;
}

int run_single(RunConfig& config) {
  const std::uint64_t seed = resolve_seed(config);
  const fbmseq::Model model = fbmseq::make_model(config.params);
  const fbmseq::BoundaryTable table = fbmseq::load_boundary(config.table_path);

  const double horizon_t = fbmseq::time_change(config.horizon_r, model);
  const fbmseq::DrawnScenario scenario = fbmseq::sample_observation(
      model, config.fixed_theta, config.n_time_steps, horizon_t, seed);
  const bool keep_traj = !config.trajectory_path.empty();
  const fbmseq::TestOutcome outcome =
      fbmseq::run_test(scenario, table, model, config.horizon_r, keep_traj);

  std::string json = "{\n  \"seed\": " + std::to_string(seed);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", scenario.theta);
  json += std::string(",\n  \"theta\": ") + buf;
  std::snprintf(buf, sizeof buf, "%.17g", outcome.tau);
  json += std::string(",\n  \"tau\": ") + buf;
  std::snprintf(buf, sizeof buf, "%.17g", outcome.rho);
  json += std::string(",\n  \"rho\": ") + buf;
  json += ",\n  \"decision\": " + std::to_string(outcome.decision);
  json += std::string(",\n  \"stopped_by_horizon\": ") +
          (outcome.stopped_by_horizon ? "true" : "false") + "\n}\n";
  fbmseq::atomic_write(config.output, json);
  std::cout << "tau " << outcome.tau << " decision " << outcome.decision
            << "\nwrote " << config.output << "\n";
  if (keep_traj) {
    fbmseq::atomic_write(config.trajectory_path,
                         fbmseq::to_csv(*outcome.trajectory));
    std::cout << "wrote " << config.trajectory_path << "\n";
  }
  return 0;
}

int run_risk(RunConfig& config) {
  const std::uint64_t seed = resolve_seed(config);
  const fbmseq::Model model = fbmseq::make_model(config.params);
  const fbmseq::BoundaryTable table = fbmseq::load_boundary(config.table_path);

  fbmseq::RiskReport report;
  std::vector<fbmseq::PathOutcome> outcomes;
  std::vector<fbmseq::PathOutcome>* dump =
      config.dump_path.empty() ? nullptr : &outcomes;
  if (config.method == "mc" || config.method == "both") {
    report = fbmseq::estimate_risk(model, table, config.n_paths,
                                   config.n_time_steps, config.horizon_r,
                                   seed, dump);
    if (config.method == "both") {
      const fbmseq::RiskReport value = fbmseq::risk_via_value(
          model, table, config.n_paths, seed, config.horizon_r);
      report.comparison->transformed_risk = value.mean_risk;
      report.comparison->transformed_std_error = value.std_error;
    }
  } else if (config.method == "value") {
    report = fbmseq::risk_via_value(model, table, config.n_paths, seed,
                                    config.horizon_r);
  } else {
    throw std::invalid_argument("risk: unknown method " + config.method);
  }

  fbmseq::atomic_write(config.output, fbmseq::to_json(report));
  std::cout << "mean_risk " << report.mean_risk << " +- " << report.std_error
            << "\nwrote " << config.output << "\n";
  if (dump != nullptr) {
    fbmseq::atomic_write(config.dump_path, fbmseq::outcomes_csv(outcomes));
    std::cout << "wrote " << config.dump_path << "\n";
  }
  if (report.truncation_warning) {
    std::cout << "warning: " << 100.0 * report.truncated_fraction
              << "% of paths hit the monitoring horizon; the mean stopping "
                 "time is biased low\n";
  }
  return 0;
}

int run_check(RunConfig& config) {
  const fbmseq::Model model = fbmseq::make_model(config.params);
  int failures = 0;
  auto report = [&failures](const std::string& name, bool ok,
                            const std::string& detail = "") {
    std::cout << (ok ? "ok" : "FAIL") << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  // derived-constant identities
  {
    const auto& c = model.consts;
    const double lhs = c.l_h;
    const double rhs = c.c_h *
                       std::exp(2.0 * fbmseq::ln_gamma(1.5 - config.params.hurst) -
                                fbmseq::ln_gamma(2.0 - 2.0 * config.params.hurst));
    report("constant identity L = C Gamma(3/2-H)^2 / Gamma(2-2H)",
           std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
  // time change round trip
  {
    bool ok = true;
    for (double r : {0.1, 0.5, 0.9}) {
      const double t = fbmseq::time_change(r, model);
      ok = ok && std::abs(fbmseq::inverse_time_change(t, model) - r) <= 1e-10;
    }
    report("time change round trip", ok);
  }

  fbmseq::BoundaryTable table;
  try {
    if (!config.table_path.empty()) {
      table = fbmseq::load_boundary(config.table_path);
      fbmseq::require_matching(table, model);
    } else {
      fbmseq::SolveOptions options;
      options.n_grid = config.n_grid;
      options.extend_below_t0 = config.extend_below_t0;
      table = fbmseq::solve_boundary(model, options);
    }
    report("boundary table available", true);
  } catch (const std::exception& e) {
    report("boundary table available", false, e.what());
    std::cout << failures << " check(s) failed\n";
    return 1;
  }

  try {
    fbmseq::require_shape(table);
    report("boundary shape: positive, non-increasing, within bound", true);
  } catch (const std::exception& e) {
    report("boundary shape: positive, non-increasing, within bound", false,
           e.what());
  }
  {
    // residual on a thinned set of interior nodes
    std::vector<double> pts;
    const Eigen::Index step = std::max<Eigen::Index>(1, table.grid.size() / 40);
    for (Eigen::Index i = 1; i + 1 < table.grid.size(); i += step) {
      pts.push_back(table.grid[i]);
    }
    const double res = fbmseq::residual(table, model, pts);
    std::ostringstream detail;
    detail << "max residual " << res << ", tolerance " << config.tolerance;
    report("integral equation residual", res <= config.tolerance,
           detail.str());
  }
  {
    const std::string json = fbmseq::to_json(table);
    const fbmseq::BoundaryTable back = fbmseq::boundary_from_json(json);
    const bool ok = (back.grid.array() == table.grid.array()).all() &&
                    (back.a.array() == table.a.array()).all() &&
                    back.sigma == table.sigma && back.hurst == table.hurst;
    report("JSON round trip is value exact", ok);
  }

  if (failures > 0) {
    std::cout << failures << " check(s) failed\n";
    return 1;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact Bayesian sequential test for the drift sign of a fractional "
      "Brownian observation"};
  app.require_subcommand(1);
  RunConfig config;

  CLI::App* boundary = app.add_subcommand(
      "boundary", "solve the stopping boundary and write the table");
  add_model_options(boundary, config);
  boundary->add_option("--n-grid", config.n_grid)->check(CLI::PositiveNumber);
  boundary->add_option("--t-min-epsilon", config.t_min_epsilon)
      ->check(CLI::PositiveNumber);
  boundary->add_option("--end-gap", config.end_gap)
      ->check(CLI::PositiveNumber);
  boundary->add_option("--bisect-tol", config.bisect_tol)
      ->check(CLI::PositiveNumber);
  boundary->add_flag("--extend-below-t0", config.extend_below_t0,
                     "formally continue the solve below t0 (H < 1/2)");
  boundary->add_option("--tolerance", config.tolerance,
                       "residual warning threshold");
  boundary->add_option("--output", config.output)->required();
  boundary->add_option("--format", config.format)
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* simulate = app.add_subcommand(
      "simulate", "draw one observation path and write it as CSV");
  add_model_options(simulate, config);
  simulate->add_option("--theta", config.fixed_theta,
                       "fix the drift instead of drawing from the prior");
  simulate->add_option("--n-steps", config.n_time_steps)
      ->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", config.horizon_t,
                       "observation horizon in original time")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", config.seed);
  simulate->add_option("--output", config.output)->required();

  CLI::App* run = app.add_subcommand(
      "run", "execute the sequential test on one simulated scenario");
  add_model_options(run, config);
  run->add_option("--table", config.table_path)->required();
  run->add_option("--theta", config.fixed_theta);
  run->add_option("--n-steps", config.n_time_steps)
      ->check(CLI::PositiveNumber);
  run->add_option("--horizon-r", config.horizon_r)
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  run->add_option("--seed", config.seed);
  run->add_option("--output", config.output)->required();
  run->add_option("--trajectory", config.trajectory_path,
                  "also write the posterior trajectory CSV");

  CLI::App* risk = app.add_subcommand(
      "risk", "Monte Carlo estimate of the Bayes risk");
  add_model_options(risk, config);
  risk->add_option("--table", config.table_path)->required();
  risk->add_option("--n-paths", config.n_paths)->check(CLI::PositiveNumber);
  risk->add_option("--n-steps", config.n_time_steps)
      ->check(CLI::PositiveNumber);
  risk->add_option("--horizon-r", config.horizon_r)
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  risk->add_option("--seed", config.seed);
  risk->add_option("--method", config.method)
      ->check(CLI::IsMember({"mc", "value", "both"}));
  risk->add_option("--output", config.output)->required();
  risk->add_option("--dump", config.dump_path,
                   "also write per-path outcomes CSV");

  CLI::App* check = app.add_subcommand(
      "check", "run the invariant suite and exit nonzero on violation");
  add_model_options(check, config);
  check->add_option("--table", config.table_path,
                    "check an existing table instead of solving one");
  check->add_option("--n-grid", config.n_grid)->check(CLI::PositiveNumber);
  check->add_flag("--extend-below-t0", config.extend_below_t0);
  check->add_option("--tolerance", config.tolerance)
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(boundary)) return run_boundary(config);
    if (app.got_subcommand(simulate)) return run_simulate(config);
    if (app.got_subcommand(run)) return run_single(config);
    if (app.got_subcommand(risk)) return run_risk(config);
    if (app.got_subcommand(check)) return run_check(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

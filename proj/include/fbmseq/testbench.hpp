#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fbmseq/boundary.hpp"
#include "fbmseq/fbm.hpp"
#include "fbmseq/model.hpp"
#include "fbmseq/whitening.hpp"

namespace fbmseq {

// One sequential test executed against a whitened path.
struct TestOutcome {
  double tau = 0.0;       // stopping time in original (observation) time
  double rho = 0.0;       // stopping time in transformed time, in [0, 1)
  int decision = 0;       // +1 or -1
  bool stopped_by_horizon = false;  // no crossing before the monitoring horizon
  std::optional<PosteriorTrajectory> trajectory;
};

// Sample-mean decomposition of the simulated risk; the two terms sum to
// mean_risk exactly.
struct RiskComponents {
  double observation_cost = 0.0;  // mean stopping time
  double decision_loss = 0.0;     // mean terminal penalty
};

// Cross-checks attached to a report.
struct RiskComparison {
  double immediate_stop_risk = 0.0;  // closed form, regularized_payoff at the prior
  std::optional<double> transformed_risk;  // risk_via_value on the same table
  std::optional<double> transformed_std_error;
};

struct RiskReport {
  double mean_risk = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
  double mean_tau = 0.0;
  std::optional<double> error_rate;
  RiskComponents components;
  std::optional<RiskComparison> comparison;
  double truncated_fraction = 0.0;  // paths force-stopped at the horizon
  bool truncation_warning = false;  // truncated_fraction above 1 percent
};

struct PathOutcome {
  std::uint64_t seed = 0;
  double theta = 0.0;
  double tau = 0.0;
  double rho = 0.0;
  int decision = 0;
  double loss = 0.0;
};

// Runs the stopping rule on one scenario. Monitoring is restricted to
// transformed times in [grid.front(), horizon_r]; if the trajectory never
// leaves the continuation region there, the test is force-stopped at the
// last monitored sample.
TestOutcome run_test(const DrawnScenario& scenario, const BoundaryTable& table,
                     const Model& model, double horizon_r,
                     bool keep_trajectory = false);

// Full Monte Carlo pipeline: draw theta from the prior, simulate the
// observation, whiten, run the test, average tau + |theta| 1{wrong sign}.
// Path p uses seed `seed + p`, matching sample_observation exactly.
RiskReport estimate_risk(const Model& model, const BoundaryTable& table,
                         int n_paths, Eigen::Index n_steps, double horizon_r,
                         std::uint64_t seed,
                         std::vector<PathOutcome>* dump = nullptr);

// Independent estimate through the value identity: simulate the posterior
// mean process directly in transformed time on the table grid, stop at the
// (optionally scaled) boundary, and average
//   (sigma / 2) (f(rho) - |W_rho + mu/sigma|) + regularized_payoff(a0, b0).
RiskReport risk_via_value(const Model& model, const BoundaryTable& table,
                          int n_paths, std::uint64_t seed,
                          double horizon_r = 0.999, double scale = 1.0,
                          std::vector<double>* per_path_values = nullptr);

// risk_via_value at each boundary scale, common random numbers across scales.
std::map<double, RiskReport> perturbation_study(
    const Model& model, const BoundaryTable& table,
    std::span<const double> scales, int n_paths, std::uint64_t seed,
    double horizon_r = 0.999);

}  // namespace fbmseq

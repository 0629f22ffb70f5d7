#include "fbmseq/testbench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fbmseq/specfun.hpp"

namespace fbmseq {

namespace {

constexpr Eigen::Index kBlockPaths = 1024;  // fixed, so results never depend
                                            // on how work is batched
constexpr std::uint64_t kValueStream = 0x77616c6b65723031ULL;

int sign_decision(double a) { return a > 0.0 ? 1 : -1; }

int sign_theta(double theta) { return theta > 0.0 ? 1 : -1; }

void check_horizon(double horizon_r) {
  if (!(horizon_r > 0.0) || !(horizon_r < 1.0)) {
    std::ostringstream msg;
    msg << "horizon_r must lie in (0, 1), got " << horizon_r;
    throw std::invalid_argument(msg.str());
  }
}

struct Welford {
  double sum = 0.0;
  double sum_sq = 0.0;
  long n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / double(n); }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - double(n) * m * m) / double(n - 1));
    return std::sqrt(var / double(n));
  }
};

}  // namespace

TestOutcome run_test(const DrawnScenario& scenario, const BoundaryTable& table,
                     const Model& model, double horizon_r,
                     bool keep_trajectory) {
  validate(model.params);
  require_matching(table, model);
  check_horizon(horizon_r);

  PosteriorTrajectory traj =
      posterior_trajectory(whiten(scenario.path, model), model);
  const Eigen::Index n = traj.r.size();
  if (traj.r[n - 1] + 1e-12 < horizon_r) {
    std::ostringstream msg;
    msg << "run_test: scenario reaches r=" << traj.r[n - 1]
        << " but the monitoring horizon is " << horizon_r;
    throw std::invalid_argument(msg.str());
  }

  const double sigma = model.params.sigma;
  const double front = table.grid[0];

  TestOutcome out;
  // No boundary level is tabulated below grid.front(); the start point is
  // gated against the first tabulated level so a degenerate A == 0 table
  // reproduces the immediate-stop test exactly.
  if (std::abs(model.params.mu / sigma) >= boundary_at(table, front)) {
    out.tau = 0.0;
    out.rho = 0.0;
    out.decision = sign_decision(traj.a[0]);
    if (keep_trajectory) out.trajectory = std::move(traj);
    return out;
  }

  Eigen::Index last_monitored = -1;
  Eigen::Index stop = -1;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (traj.r[i] < front) continue;
    if (traj.r[i] > horizon_r) break;
    last_monitored = i;
    const double stat = std::abs(traj.a[i]) / (sigma * traj.b[i]);
    if (stat >= boundary_at(table, traj.r[i])) {
      stop = i;
      break;
    }
  }
  if (stop < 0 && last_monitored < 0) {
    throw std::invalid_argument(
        "run_test: no sample falls inside [grid.front(), horizon_r]");
  }
  if (stop < 0) {
    stop = last_monitored;
    out.stopped_by_horizon = true;
  }
  out.tau = traj.times[stop];
  out.rho = traj.r[stop];
  out.decision = sign_decision(traj.a[stop]);
  if (keep_trajectory) out.trajectory = std::move(traj);
  return out;
}

RiskReport estimate_risk(const Model& model, const BoundaryTable& table,
                         int n_paths, Eigen::Index n_steps, double horizon_r,
                         std::uint64_t seed, std::vector<PathOutcome>* dump) {
  validate(model.params);
  require_matching(table, model);
  check_horizon(horizon_r);
  if (n_paths < 100) {
    throw std::invalid_argument("estimate_risk: n_paths must be >= 100");
  }
  if (n_steps < 2) {
    throw std::invalid_argument("estimate_risk: n_steps must be >= 2");
  }

  const double sigma = model.params.sigma;
  const double hurst = model.params.hurst;
  const double horizon_t = time_change(horizon_r, model);
  const FbmSampler sampler(n_steps, horizon_t, hurst);
  const Whitener whitener(sampler.times(), model);
  const Eigen::VectorXd& times = sampler.times();

  // deterministic pieces of the posterior recursion, shared by all paths
  const double inv_var = 1.0 / (sigma * sigma);
  const double a0 = model.params.mu * inv_var;
  const double l_h = model.consts.l_h;
  const double two_minus_2h = 2.0 - 2.0 * hurst;
  Eigen::VectorXd mpow(n_steps), b(n_steps + 1), r(n_steps + 1);
  b[0] = inv_var;
  r[0] = 0.0;
  for (Eigen::Index i = 1; i <= n_steps; ++i) {
    const double mid = 0.5 * (times[i - 1] + times[i]);
    mpow[i - 1] = l_h * std::pow(mid, 0.5 - hurst);
    b[i] = inv_var + l_h * l_h * std::pow(times[i], two_minus_2h) / two_minus_2h;
    r[i] = 1.0 - inv_var / b[i];
  }

  const double front = table.grid[0];
  Eigen::Index first_mon = -1, last_mon = -1;
  for (Eigen::Index i = 1; i <= n_steps; ++i) {
    if (r[i] < front || r[i] > horizon_r) continue;
    if (first_mon < 0) first_mon = i;
    last_mon = i;
  }
  if (first_mon < 0) {
    throw std::invalid_argument(
        "estimate_risk: no grid sample falls inside [grid.front(), horizon_r]");
  }
  Eigen::VectorXd level = Eigen::VectorXd::Zero(n_steps + 1);
  for (Eigen::Index i = first_mon; i <= last_mon; ++i) {
    level[i] = boundary_at(table, r[i]);
  }
  const bool start_inside_stop_set =
      std::abs(model.params.mu / sigma) >= boundary_at(table, front);

  Welford loss_acc;
  double sum_tau = 0.0, sum_penalty = 0.0;
  long wrong = 0, truncated = 0;
  if (dump != nullptr) {
    dump->clear();
    dump->reserve(static_cast<std::size_t>(n_paths));
  }

  for (int block = 0; block < n_paths; block += static_cast<int>(kBlockPaths)) {
    const Eigen::Index width =
        std::min<Eigen::Index>(kBlockPaths, n_paths - block);
    const std::uint64_t base = seed + static_cast<std::uint64_t>(block);

    Eigen::MatrixXd values = sampler.sample_block(base, width);
    Eigen::VectorXd thetas(width);
    for (Eigen::Index p = 0; p < width; ++p) {
      thetas[p] = draw_theta(model, base + static_cast<std::uint64_t>(p));
    }
    values.noalias() += times * thetas.transpose();
    const Eigen::MatrixXd x = whitener.apply_block(values);
    Eigen::MatrixXd ainc = x.bottomRows(n_steps) - x.topRows(n_steps);
    ainc.array().colwise() *= mpow.array();

    for (Eigen::Index p = 0; p < width; ++p) {
      double tau = 0.0, rho = 0.0;
      int decision;
      bool by_horizon = false;
      if (start_inside_stop_set) {
        decision = sign_decision(a0);
      } else {
        double a_cur = a0;
        Eigen::Index stop = -1;
        for (Eigen::Index i = 1; i <= last_mon; ++i) {
          a_cur += ainc(i - 1, p);
          if (i < first_mon) continue;
          if (std::abs(a_cur) / (sigma * b[i]) >= level[i]) {
            stop = i;
            break;
          }
        }
        if (stop < 0) {
          stop = last_mon;
          by_horizon = true;
        }
        tau = times[stop];
        rho = r[stop];
        decision = sign_decision(a_cur);
      }

      const double theta = thetas[p];
      const double penalty =
          decision != sign_theta(theta) ? std::abs(theta) : 0.0;
      loss_acc.add(tau + penalty);
      sum_tau += tau;
      sum_penalty += penalty;
      if (decision != sign_theta(theta)) ++wrong;
      if (by_horizon) ++truncated;
      if (dump != nullptr) {
        dump->push_back(PathOutcome{base + static_cast<std::uint64_t>(p),
                                    theta, tau, rho, decision, tau + penalty});
      }
    }
  }

  RiskReport report;
  report.n_paths = n_paths;
  report.mean_risk = loss_acc.mean();
  report.std_error = loss_acc.std_error();
  report.mean_tau = sum_tau / double(n_paths);
  report.error_rate = double(wrong) / double(n_paths);
  report.components.observation_cost = report.mean_tau;
  report.components.decision_loss = sum_penalty / double(n_paths);
  report.comparison = RiskComparison{bayes_payoff(a0, inv_var), {}, {}};
  report.truncated_fraction = double(truncated) / double(n_paths);
  report.truncation_warning = report.truncated_fraction > 0.01;
  return report;
}

RiskReport risk_via_value(const Model& model, const BoundaryTable& table,
                          int n_paths, std::uint64_t seed, double horizon_r,
                          double scale, std::vector<double>* per_path_values) {
  validate(model.params);
  require_matching(table, model);
  check_horizon(horizon_r);
  if (n_paths < 100) {
    throw std::invalid_argument("risk_via_value: n_paths must be >= 100");
  }
  if (!(scale > 0.0)) {
    throw std::invalid_argument("risk_via_value: scale must be positive");
  }

  const double sigma = model.params.sigma;
  const double mu = model.params.mu;
  const double x0 = mu / sigma;
  const double a0 = mu / (sigma * sigma);
  const double b0 = 1.0 / (sigma * sigma);
  // h~(a0, b0) in closed form
  const double h_tilde = sigma * std_normal_pdf(mu / sigma) +
                         std::abs(mu) * (0.5 - std_normal_cdf(-std::abs(mu) / sigma));

  // monitored nodes: the table's own grid, capped by the horizon
  const Eigen::Index n = table.grid.size();
  std::vector<double> rs, levels;
  rs.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (table.grid[i] >= 1.0 || table.grid[i] > horizon_r) break;
    rs.push_back(table.grid[i]);
    levels.push_back(scale * table.a[i]);
  }
  if (rs.empty()) {
    throw std::invalid_argument(
        "risk_via_value: no table node lies below the horizon");
  }

  if (per_path_values != nullptr) {
    per_path_values->clear();
    per_path_values->reserve(static_cast<std::size_t>(n_paths));
  }

  Welford value_acc;
  double sum_tau = 0.0;
  long truncated = 0;

  if (std::abs(x0) >= levels.front()) {
    // the start point is already in the stopping set: rho = 0 for every path
    const double v = 0.5 * sigma * (0.0 - std::abs(x0)) + h_tilde;
    for (int p = 0; p < n_paths; ++p) {
      value_acc.add(v);
      if (per_path_values != nullptr) per_path_values->push_back(v);
    }
  } else {
    const std::size_t n_nodes = rs.size();
    for (int p = 0; p < n_paths; ++p) {
      std::mt19937_64 gen(
          splitmix64((seed + static_cast<std::uint64_t>(p)) ^ kValueStream));
      std::normal_distribution<double> normal(0.0, 1.0);
      double w = 0.0;
      double r_prev = 0.0;
      double rho = rs.back();
      bool crossed = false;
      for (std::size_t k = 0; k < n_nodes; ++k) {
        w += std::sqrt(rs[k] - r_prev) * normal(gen);
        r_prev = rs[k];
        if (std::abs(w + x0) >= levels[k]) {
          rho = rs[k];
          crossed = true;
          break;
        }
      }
      if (!crossed) ++truncated;
      const double v =
          0.5 * sigma * (cost(rho, model) - std::abs(w + x0)) + h_tilde;
      value_acc.add(v);
      sum_tau += time_change(rho, model);
      if (per_path_values != nullptr) per_path_values->push_back(v);
    }
  }

  RiskReport report;
  report.n_paths = n_paths;
  report.mean_risk = value_acc.mean();
  report.std_error = value_acc.std_error();
  report.mean_tau = sum_tau / double(n_paths);
  report.components.observation_cost = report.mean_tau;
  report.components.decision_loss = report.mean_risk - report.mean_tau;
  report.comparison = RiskComparison{bayes_payoff(a0, b0), {}, {}};
  report.truncated_fraction = double(truncated) / double(n_paths);
  report.truncation_warning = report.truncated_fraction > 0.01;
  return report;
}

std::map<double, RiskReport> perturbation_study(
    const Model& model, const BoundaryTable& table,
    std::span<const double> scales, int n_paths, std::uint64_t seed,
    double horizon_r) {
  if (std::find(scales.begin(), scales.end(), 1.0) == scales.end()) {
    throw std::invalid_argument(
        "perturbation_study: scales must include 1.0 as the reference");
  }
  std::map<double, RiskReport> out;
  for (double c : scales) {
    // same seed for every scale: common random numbers
    out[c] = risk_via_value(model, table, n_paths, seed, horizon_r, c);
  }
  return out;
}

}  // namespace fbmseq

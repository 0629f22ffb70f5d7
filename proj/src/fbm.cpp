#include "fbmseq/fbm.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fbmseq {

namespace {

// Stream tags keep the drift draw and the path noise decorrelated while
// sharing one user-facing seed.
constexpr std::uint64_t kPathStream = 0x706174686e6f6973ULL;
constexpr std::uint64_t kThetaStream = 0x7468657461647277ULL;

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ stream));
}

void fill_standard_normal(Eigen::Ref<Eigen::VectorXd> out,
                          std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal(gen);
}

}  // namespace

void validate(const SamplePath& path) {
  if (path.times.size() != path.values.size()) {
    throw std::invalid_argument("SamplePath: times/values size mismatch");
  }
  if (path.times.size() < 2) {
    throw std::invalid_argument("SamplePath: needs at least two samples");
  }
  if (path.times[0] != 0.0 || path.values[0] != 0.0) {
    throw std::invalid_argument("SamplePath: must start at (0, 0)");
  }
  for (Eigen::Index i = 1; i < path.times.size(); ++i) {
    if (!(path.times[i] > path.times[i - 1])) {
      throw std::invalid_argument("SamplePath: times must be increasing");
    }
  }
  if (!path.values.allFinite()) {
    throw std::invalid_argument("SamplePath: values must be finite");
  }
}

double grid_step(const Eigen::VectorXd& times) {
  if (times.size() < 2) {
    throw std::invalid_argument("grid_step: needs at least two nodes");
  }
  const double h = times[1] - times[0];
  for (Eigen::Index i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - h) > 1e-9 * h) {
      throw std::invalid_argument("grid_step: grid is not uniform");
    }
  }
  return h;
}

double fbm_covariance(double s, double t, double hurst) {
  if (!(s >= 0.0) || !(t >= 0.0)) {
    throw std::invalid_argument("fbm_covariance: requires s, t >= 0");
  }
  if (!(hurst > 0.0) || !(hurst < 1.0)) {
    throw std::invalid_argument("fbm_covariance: requires H in (0, 1)");
  }
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) -
                std::pow(std::abs(t - s), two_h));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

FbmSampler::FbmSampler(Eigen::Index n_steps, double horizon, double hurst)
    : hurst_(hurst) {
  if (n_steps < 1) {
    throw std::invalid_argument("FbmSampler: n_steps must be >= 1");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("FbmSampler: horizon must be positive");
  }
  if (!(hurst > 0.0) || !(hurst < 1.0)) {
    throw std::invalid_argument("FbmSampler: requires H in (0, 1)");
  }
  times_ = Eigen::VectorXd::LinSpaced(n_steps + 1, 0.0, horizon);

  // Increment covariance is Toeplitz:
  //   c(k) = h^2H ((k+1)^2H - 2 k^2H + (k-1)^2H) / 2,  c(0) = h^2H.
  const double h = horizon / static_cast<double>(n_steps);
  const double two_h = 2.0 * hurst;
  const double h2h = std::pow(h, two_h);
  Eigen::VectorXd c(n_steps);
  c[0] = h2h;
  for (Eigen::Index k = 1; k < n_steps; ++k) {
    const double kd = static_cast<double>(k);
    c[k] = 0.5 * h2h *
           (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) +
            std::pow(kd - 1.0, two_h));
  }
  Eigen::MatrixXd cov(n_steps, n_steps);
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    for (Eigen::Index j = 0; j < n_steps; ++j) {
      cov(i, j) = c[std::abs(i - j)];
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "FbmSampler: increment covariance failed Cholesky at n_steps="
        << n_steps << ", H=" << hurst
        << "; the exact covariance is positive definite, so this indicates "
           "roundoff at extreme parameters";
    throw std::runtime_error(msg.str());
  }
  chol_ = llt.matrixL();
}

SamplePath FbmSampler::sample(std::uint64_t seed) const {
  const Eigen::Index n = n_steps();
  auto gen = make_engine(seed, kPathStream);
  Eigen::VectorXd xi(n);
  fill_standard_normal(xi, gen);
  Eigen::VectorXd inc = chol_.triangularView<Eigen::Lower>() * xi;

  SamplePath path;
  path.times = times_;
  path.values.resize(n + 1);
  path.values[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    path.values[i + 1] = path.values[i] + inc[i];
  }
  path.kind = PathKind::fbm;
  return path;
}

Eigen::MatrixXd FbmSampler::sample_block(std::uint64_t seed,
                                         Eigen::Index n_paths) const {
  if (n_paths < 1) {
    throw std::invalid_argument("sample_block: n_paths must be >= 1");
  }
  const Eigen::Index n = n_steps();
  Eigen::MatrixXd xi(n, n_paths);
  for (Eigen::Index p = 0; p < n_paths; ++p) {
    auto gen = make_engine(seed + static_cast<std::uint64_t>(p), kPathStream);
    fill_standard_normal(xi.col(p), gen);
  }
  // Column-by-column so each column is bitwise identical to sample(seed + p);
  // a blocked matrix product would round differently.
  Eigen::MatrixXd inc(n, n_paths);
  for (Eigen::Index p = 0; p < n_paths; ++p) {
    inc.col(p) = chol_.triangularView<Eigen::Lower>() * xi.col(p);
  }

  Eigen::MatrixXd values(n + 1, n_paths);
  values.row(0).setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    values.row(i + 1) = values.row(i) + inc.row(i);
  }
  return values;
}

SamplePath sample_fbm(Eigen::Index n_steps, double horizon, double hurst,
                      std::uint64_t seed) {
  return FbmSampler(n_steps, horizon, hurst).sample(seed);
}

double draw_theta(const Model& model, std::uint64_t seed) {
  auto gen = make_engine(seed, kThetaStream);
  std::normal_distribution<double> prior(model.params.mu, model.params.sigma);
  return prior(gen);
}

DrawnScenario sample_observation(const Model& model,
                                 std::optional<double> fixed_theta,
                                 Eigen::Index n_steps, double horizon,
                                 std::uint64_t seed,
                                 const FbmSampler* sampler) {
  validate(model.params);
  std::optional<FbmSampler> local;
  if (sampler == nullptr) {
    local.emplace(n_steps, horizon, model.params.hurst);
    sampler = &*local;
  } else {
    const bool grid_matches =
        sampler->n_steps() == n_steps && sampler->hurst() == model.params.hurst &&
        std::abs(sampler->times()[sampler->times().size() - 1] - horizon) <=
            1e-12 * horizon;
    if (!grid_matches) {
      throw std::invalid_argument(
          "sample_observation: provided sampler does not match the requested "
          "grid");
    }
  }

  DrawnScenario scenario;
  scenario.seed = seed;
  scenario.theta = fixed_theta ? *fixed_theta : draw_theta(model, seed);
  scenario.path = sampler->sample(seed);
  scenario.path.values += scenario.theta * scenario.path.times;
  scenario.path.kind = PathKind::observation;
  return scenario;
}

}  // namespace fbmseq

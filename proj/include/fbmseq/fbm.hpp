#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>

#include "fbmseq/model.hpp"

namespace fbmseq {

enum class PathKind { fbm, observation, whitened };

// Path sampled on a uniform grid over [0, horizon]; times[0] = 0, values[0] = 0.
struct SamplePath {
  Eigen::VectorXd times;
  Eigen::VectorXd values;
  PathKind kind = PathKind::fbm;
};

void validate(const SamplePath& path);

// Step of the (uniform) grid; throws if the grid is not uniform.
double grid_step(const Eigen::VectorXd& times);

// Exact fBm covariance (s^2H + t^2H - |t-s|^2H) / 2 for s, t >= 0.
double fbm_covariance(double s, double t, double hurst);

// splitmix64; used to derive decorrelated substream seeds from one seed.
std::uint64_t splitmix64(std::uint64_t x);

// Exact sampler. The Cholesky factor of the increment covariance is built
// once per (n_steps, horizon, hurst) and reused across draws.
class FbmSampler {
 public:
  FbmSampler(Eigen::Index n_steps, double horizon, double hurst);

  const Eigen::VectorXd& times() const { return times_; }
  double hurst() const { return hurst_; }
  Eigen::Index n_steps() const { return times_.size() - 1; }

  // One path; deterministic in the seed.
  SamplePath sample(std::uint64_t seed) const;

  // Paths as columns of an (n_steps+1) x n_paths matrix; column p is the
  // path that sample(seed + p) would produce.
  Eigen::MatrixXd sample_block(std::uint64_t seed, Eigen::Index n_paths) const;

 private:
  Eigen::VectorXd times_;
  Eigen::MatrixXd chol_;  // lower-triangular factor of the increment covariance
  double hurst_;
};

SamplePath sample_fbm(Eigen::Index n_steps, double horizon, double hurst,
                      std::uint64_t seed);

// Observation together with the drift that generated it.
struct DrawnScenario {
  double theta = 0.0;
  SamplePath path;  // kind == observation
  std::uint64_t seed = 0;
};

// fixed_theta set: use that drift; unset: draw theta from the N(mu, sigma^2)
// prior. The theta stream is decorrelated from the path-noise stream, so the
// same seed yields the same fBm path under both modes. An existing sampler
// for the same (n_steps, horizon, hurst) may be passed to skip the Cholesky.
DrawnScenario sample_observation(const Model& model,
                                 std::optional<double> fixed_theta,
                                 Eigen::Index n_steps, double horizon,
                                 std::uint64_t seed,
                                 const FbmSampler* sampler = nullptr);

// Draw of theta alone for the given seed (the substream sample_observation uses).
double draw_theta(const Model& model, std::uint64_t seed);

}  // namespace fbmseq

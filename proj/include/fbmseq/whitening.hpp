#pragma once

#include <Eigen/Core>

#include "fbmseq/fbm.hpp"
#include "fbmseq/model.hpp"

namespace fbmseq {

// Volterra kernel of the whitening transform for 0 < s < t:
// K_H(t, s) = (t-s)^(1/2-H) * 2F1(1/2-H, 1/2-H; 3/2-H; (s-t)/s).
// This is the kernel whose integral against ds produces the L_H drift
// constant; it makes the transformed process a standard Brownian motion.
double whitening_kernel(double t, double s, double hurst);

// Midpoint-rule discretization of X_t = C_H int_0^t K_H(t, s) dZ_s on a
// uniform grid. Midpoints keep the kernel away from its endpoint
// singularities at s = t and s = 0. The weight matrix is built once per
// grid and reused across paths.
class Whitener {
 public:
  Whitener(const Eigen::VectorXd& times, const Model& model);

  const Eigen::VectorXd& times() const { return times_; }

  SamplePath apply(const SamplePath& z) const;

  // Columnwise transform; input and output are (n+1) x n_paths value blocks.
  Eigen::MatrixXd apply_block(const Eigen::MatrixXd& values) const;

 private:
  Eigen::VectorXd times_;
  Eigen::MatrixXd weights_;  // lower triangular, row i-1 holds C_H K_H(t_i, m_j)
};

SamplePath whiten(const SamplePath& z, const Model& model);

// Posterior state along a whitened path. Law(theta | F_t) = N(a_t/b_t, 1/b_t);
// r is the transformed time and w = a/(sigma b) - mu/sigma the Brownian
// coordinate of the transformed problem.
struct PosteriorTrajectory {
  Eigen::VectorXd times;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd r;
  Eigen::VectorXd w;
};

PosteriorTrajectory posterior_trajectory(const SamplePath& x, const Model& model);

}  // namespace fbmseq

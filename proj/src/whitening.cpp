#include "fbmseq/whitening.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbmseq/specfun.hpp"

namespace fbmseq {

double whitening_kernel(double t, double s, double hurst) {
  if (!(s > 0.0) || !(s < t)) {
    std::ostringstream msg;
    msg << "whitening_kernel: requires 0 < s < t, got s=" << s << " t=" << t;
    throw std::invalid_argument(msg.str());
  }
  const double a = 0.5 - hurst;
  // (s - t)/s sweeps (-inf, 0); gauss_2f1 covers it for this a = b family.
  return std::pow(t - s, a) * gauss_2f1(a, a, 1.5 - hurst, (s - t) / s);
}

Whitener::Whitener(const Eigen::VectorXd& times, const Model& model)
    : times_(times) {
  validate(model.params);
  grid_step(times_);  // throws unless uniform
  if (times_[0] != 0.0) {
    throw std::invalid_argument("Whitener: grid must start at 0");
  }
  const Eigen::Index n = times_.size() - 1;
  const double hurst = model.params.hurst;
  const double c_h = model.consts.c_h;

  // Row i-1 discretizes C_H int_0^{t_i} K_H(t_i, s) dZ_s with the kernel
  // frozen at panel midpoints, which stay clear of the s = 0 and s = t_i
  // endpoint singularities.
  weights_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i <= n; ++i) {
    const double t_i = times_[i];
    for (Eigen::Index j = 1; j <= i; ++j) {
      const double mid = 0.5 * (times_[j - 1] + times_[j]);
      weights_(i - 1, j - 1) = c_h * whitening_kernel(t_i, mid, hurst);
    }
  }
}

SamplePath Whitener::apply(const SamplePath& z) const {
  validate(z);
  if (z.times.size() != times_.size() ||
      (z.times - times_).cwiseAbs().maxCoeff() >
          1e-12 * times_[times_.size() - 1]) {
    throw std::invalid_argument("Whitener: path grid does not match");
  }
  const Eigen::Index n = times_.size() - 1;
  Eigen::VectorXd dz = z.values.tail(n) - z.values.head(n);

  SamplePath x;
  x.times = times_;
  x.values.resize(n + 1);
  x.values[0] = 0.0;
  x.values.tail(n) = weights_.triangularView<Eigen::Lower>() * dz;
  x.kind = PathKind::whitened;
  return x;
}

Eigen::MatrixXd Whitener::apply_block(const Eigen::MatrixXd& values) const {
  const Eigen::Index n = times_.size() - 1;
  if (values.rows() != n + 1) {
    throw std::invalid_argument("Whitener: block row count does not match");
  }
  Eigen::MatrixXd dz = values.bottomRows(n) - values.topRows(n);
  Eigen::MatrixXd x(n + 1, values.cols());
  x.row(0).setZero();
  x.bottomRows(n) = weights_.triangularView<Eigen::Lower>() * dz;
  return x;
}

SamplePath whiten(const SamplePath& z, const Model& model) {
  return Whitener(z.times, model).apply(z);
}

PosteriorTrajectory posterior_trajectory(const SamplePath& x,
                                         const Model& model) {
  validate(x);
  const Eigen::Index n = x.times.size() - 1;
  const double sigma = model.params.sigma;
  const double l_h = model.consts.l_h;
  const double hurst = model.params.hurst;
  const double two_minus_2h = 2.0 - 2.0 * hurst;
  const double inv_var = 1.0 / (sigma * sigma);

  PosteriorTrajectory traj;
  traj.times = x.times;
  traj.a.resize(n + 1);
  traj.b.resize(n + 1);
  traj.r.resize(n + 1);
  traj.w.resize(n + 1);

  traj.a[0] = model.params.mu * inv_var;
  traj.b[0] = inv_var;
  traj.r[0] = 0.0;
  traj.w[0] = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    // d a_t = L s^(1/2 - H) dX_s, frozen at panel midpoints like the kernel
    const double mid = 0.5 * (x.times[i - 1] + x.times[i]);
    traj.a[i] = traj.a[i - 1] + l_h * std::pow(mid, 0.5 - hurst) *
                                    (x.values[i] - x.values[i - 1]);
    const double growth =
        l_h * l_h * std::pow(x.times[i], two_minus_2h) / two_minus_2h;
    traj.b[i] = inv_var + growth;
    traj.r[i] = 1.0 - inv_var / traj.b[i];
    traj.w[i] = traj.a[i] / (sigma * traj.b[i]) - model.params.mu / sigma;
  }
  return traj;
}

}  // namespace fbmseq

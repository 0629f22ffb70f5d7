#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "fbmseq/fbm.hpp"
#include "fbmseq/whitening.hpp"

using namespace fbmseq;

TEST_CASE("whitening kernel matches high-precision reference values") {
  // reference values computed with 50-digit arithmetic
  CHECK(whitening_kernel(1.0, 0.3, 0.3) ==
        doctest::Approx(0.88592957992396721487).epsilon(1e-13));
  CHECK(whitening_kernel(0.8, 0.5, 0.7) ==
        doctest::Approx(1.2374366986705436865).epsilon(1e-13));
  CHECK(whitening_kernel(1.0, 0.999, 0.3) ==
        doctest::Approx(0.25118026455919381378).epsilon(1e-13));
  // near s = 0 the H > 1/2 kernel dips negative; both tails are exercised
  CHECK(whitening_kernel(1.0, 0.004, 0.3) ==
        doctest::Approx(0.6781425536551752921).epsilon(1e-13));
  CHECK(whitening_kernel(1.0, 0.004, 0.7) ==
        doctest::Approx(-0.54575699334060789044).epsilon(1e-13));

  // scaling both arguments rescales the kernel by lambda^(1/2 - H)
  CHECK(whitening_kernel(2.0, 0.6, 0.3) ==
        doctest::Approx(std::pow(2.0, 0.2) * whitening_kernel(1.0, 0.3, 0.3))
            .epsilon(1e-13));

  // the Brownian kernel is identically one
  CHECK(whitening_kernel(0.7, 0.2, 0.5) == 1.0);
  CHECK(whitening_kernel(123.0, 0.001, 0.5) == 1.0);

  CHECK_THROWS_AS(whitening_kernel(1.0, 0.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(whitening_kernel(1.0, 1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(whitening_kernel(0.5, 0.7, 0.3), std::invalid_argument);
}

TEST_CASE("kernel integral reproduces the drift constant") {
  // int_0^t K(t,s) ds = t^(3/2-H) Gamma(3/2-H)^2 / ((3/2-H) Gamma(2-2H)),
  // equivalently C_H int K ds = L_H int s^(1/2-H) ds. This identity pins
  // down the kernel; a midpoint sum resolves the endpoint singularities
  // well enough for a 1e-3 relative comparison.
  const int n = 50000;
  for (double hurst : {0.3, 0.7}) {
    const Model model = make_model({0.0, 1.0, hurst});
    const double t = 0.8;
    const double h = t / n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += whitening_kernel(t, (j + 0.5) * h, hurst);
    }
    acc *= h * model.consts.c_h;
    const double expected = model.consts.l_h * std::pow(t, 1.5 - hurst) /
                            (1.5 - hurst);
    CHECK(acc == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("whitening is the identity for Brownian observations") {
  const Model model = make_model({0.0, 1.0, 0.5});
  const SamplePath z = sample_fbm(64, 1.0, 0.5, 9);
  const SamplePath x = whiten(z, model);
  CHECK(x.kind == PathKind::whitened);
  CHECK((x.times - z.times).cwiseAbs().maxCoeff() == 0.0);
  // weights are all one, so the transform just re-telescopes the increments
  CHECK((x.values - z.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("whitener validates grids and path shapes") {
  const Model model = make_model({0.0, 1.0, 0.3});

  Eigen::VectorXd skew = Eigen::VectorXd::LinSpaced(9, 0.0, 1.0);
  skew[4] += 1e-3;
  CHECK_THROWS_AS(Whitener(skew, model), std::invalid_argument);

  Eigen::VectorXd shifted = Eigen::VectorXd::LinSpaced(9, 0.5, 1.5);
  CHECK_THROWS_AS(Whitener(shifted, model), std::invalid_argument);

  const Whitener whitener(Eigen::VectorXd::LinSpaced(9, 0.0, 1.0), model);
  const SamplePath other = sample_fbm(16, 1.0, 0.3, 1);
  CHECK_THROWS_AS(whitener.apply(other), std::invalid_argument);
  CHECK_THROWS_AS(whitener.apply_block(Eigen::MatrixXd::Zero(4, 3)),
                  std::invalid_argument);
}

TEST_CASE("block transform agrees with the per-path transform") {
  const Model model = make_model({0.0, 1.0, 0.7});
  const FbmSampler sampler(32, 1.0, 0.7);
  const Whitener whitener(sampler.times(), model);

  const Eigen::MatrixXd block = sampler.sample_block(40, 4);
  const Eigen::MatrixXd white = whitener.apply_block(block);
  for (Eigen::Index p = 0; p < 4; ++p) {
    const SamplePath x =
        whitener.apply(sampler.sample(40 + static_cast<std::uint64_t>(p)));
    CHECK((white.col(p) - x.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("whitened driftless observations have Brownian moments") {
  // X should be standard Brownian motion: Var X_t = t and independent
  // increments. Monte Carlo with 4 standard errors of slack; the midpoint
  // discretization bias at this step count sits well inside that band.
  const Eigen::Index n_steps = 64;
  const Eigen::Index n_paths = 5000;
  for (double hurst : {0.3, 0.7}) {
    const Model model = make_model({0.0, 1.0, hurst});
    const FbmSampler sampler(n_steps, 1.0, hurst);
    const Whitener whitener(sampler.times(), model);
    const Eigen::MatrixXd x = whitener.apply_block(sampler.sample_block(71, n_paths));

    for (Eigen::Index i : {n_steps / 4, n_steps / 2, n_steps}) {
      const double t = sampler.times()[i];
      const double var = x.row(i).array().square().mean();
      CHECK(std::abs(var - t) <= 4.0 * t * std::sqrt(2.0 / n_paths));
    }

    // disjoint increments are uncorrelated
    const Eigen::ArrayXd first = x.row(n_steps / 2).transpose().array();
    const Eigen::ArrayXd second = x.row(n_steps).transpose().array() - first;
    const double cross = (first * second).mean();
    CHECK(std::abs(cross) <= 4.0 * 0.5 / std::sqrt(static_cast<double>(n_paths)));
  }
}

TEST_CASE("posterior state reduces to the Brownian closed form at H = 1/2") {
  const Model model = make_model({0.5, 2.0, 0.5});
  const DrawnScenario obs = sample_observation(model, std::nullopt, 64, 1.0, 23);
  const SamplePath x = whiten(obs.path, model);
  const PosteriorTrajectory traj = posterior_trajectory(x, model);

  // a_t = mu/sigma^2 + X_t and b_t = 1/sigma^2 + t
  for (Eigen::Index i = 0; i <= 64; ++i) {
    const double t = traj.times[i];
    CHECK(traj.a[i] ==
          doctest::Approx(0.5 / 4.0 + x.values[i]).epsilon(1e-12));
    CHECK(traj.b[i] == doctest::Approx(0.25 + t).epsilon(1e-13));
  }
}

TEST_CASE("posterior state follows the deterministic time change") {
  const Model model = make_model({-0.3, 1.5, 0.3});
  const SamplePath x = whiten(
      sample_observation(model, std::nullopt, 64, 1.0, 31).path, model);
  const PosteriorTrajectory traj = posterior_trajectory(x, model);

  CHECK(traj.r[0] == 0.0);
  CHECK(traj.w[0] == 0.0);
  CHECK(traj.a[0] == doctest::Approx(-0.3 / 2.25).epsilon(1e-15));
  CHECK(traj.b[0] == doctest::Approx(1.0 / 2.25).epsilon(1e-15));

  for (Eigen::Index i = 1; i <= 64; ++i) {
    const double t = traj.times[i];
    // information only accumulates
    CHECK(traj.b[i] > traj.b[i - 1]);
    CHECK(traj.r[i] > traj.r[i - 1]);
    CHECK(traj.r[i] < 1.0);
    // r matches the model's time change and maps back to t
    CHECK(traj.r[i] ==
          doctest::Approx(inverse_time_change(t, model)).epsilon(1e-12));
    CHECK(time_change(traj.r[i], model) == doctest::Approx(t).epsilon(1e-9));
    // w is an affine readout of the posterior state
    CHECK(traj.w[i] ==
          doctest::Approx(traj.a[i] / (1.5 * traj.b[i]) + 0.3 / 1.5)
              .epsilon(1e-12));
  }
}

TEST_CASE("posterior mean concentrates at the posterior rate") {
  // theta | F_t is N(a/b, 1/b): the mean squared error of a/b against the
  // drawn drift should match 1/b_t, and w should carry variance r_t. At
  // H = 1/2 the transform is exact, so only Monte Carlo noise remains;
  // away from it a small extra band absorbs the midpoint-rule bias left
  // at this step count.
  const Eigen::Index n_steps = 64;
  const int n_paths = 5000;
  struct Setup {
    double hurst, w_band;
  };
  for (const Setup setup : {Setup{0.5, 0.0}, Setup{0.3, 0.04}}) {
    const Model model = make_model({0.5, 1.0, setup.hurst});
    const FbmSampler sampler(n_steps, 1.0, setup.hurst);
    const Whitener whitener(sampler.times(), model);

    double sq_err = 0.0, w_sq = 0.0;
    double b_end = 0.0, r_end = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      const std::uint64_t seed = 900 + static_cast<std::uint64_t>(p);
      const DrawnScenario obs =
          sample_observation(model, std::nullopt, n_steps, 1.0, seed, &sampler);
      const PosteriorTrajectory traj =
          posterior_trajectory(whitener.apply(obs.path), model);
      const double err = traj.a[n_steps] / traj.b[n_steps] - obs.theta;
      sq_err += err * err;
      w_sq += traj.w[n_steps] * traj.w[n_steps];
      b_end = traj.b[n_steps];
      r_end = traj.r[n_steps];
    }
    sq_err /= n_paths;
    w_sq /= n_paths;
    const double slack = 4.0 * std::sqrt(2.0 / n_paths);
    CHECK(std::abs(sq_err - 1.0 / b_end) <= (slack + setup.w_band) / b_end);
    CHECK(std::abs(w_sq - r_end) <= (slack + setup.w_band) * r_end);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fbmseq/boundary.hpp"
#include "fbmseq/model.hpp"

using namespace fbmseq;

namespace {

Model unit_model(double hurst) { return make_model({0.0, 1.0, hurst}); }

BoundaryTable solve_at(double hurst, int n_grid, bool extend = false) {
  SolveOptions opt;
  opt.n_grid = n_grid;
  opt.extend_below_t0 = extend;
  return solve_boundary(unit_model(hurst), opt);
}

}  // namespace

TEST_CASE("stopping payoff matches high-precision reference values") {
  // reference values computed with 50-digit arithmetic
  CHECK(g_func(0.5, 1.3) ==
        doctest::Approx(0.018314321820883006744).epsilon(1e-13));
  CHECK(g_func(0.75, 0.0) ==
        doctest::Approx(0.39894228040143267794).epsilon(1e-13));
  CHECK(g_func(0.5, -0.7) ==
        doctest::Approx(1.5200982658914622171).epsilon(1e-13));
  // cross-checked against the integral of |z sqrt(1-t) + x| against the
  // standard normal density
  CHECK(g_func(0.2, 0.35) ==
        doctest::Approx(0.41760176549623299928).epsilon(1e-13));

  // at the horizon the payoff collapses to |x| - x exactly
  CHECK(g_func(1.0, 2.0) == 0.0);
  CHECK(g_func(1.0, 0.0) == 0.0);
  CHECK(g_func(1.0, -1.5) == 3.0);

  // at x = 0 the payoff is twice the survival-scaled density peak
  CHECK(g_func(0.36, 0.0) ==
        doctest::Approx(2.0 * 0.8 * 0.3989422804014327).epsilon(1e-14));

  CHECK_THROWS_AS(g_func(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(g_func(1.0 + 1e-12, 0.5), std::invalid_argument);
}

TEST_CASE("stopping payoff decreases in the threshold and dies off") {
  // derivative in x is -2 Phi(-x / sqrt(1 - t)) < 0
  double prev = g_func(0.4, -1.0);
  for (double x : {-0.5, 0.0, 0.4, 1.0, 2.5}) {
    const double cur = g_func(0.4, x);
    CHECK(cur < prev);
    prev = cur;
  }
  // far above the boundary the continuation payoff is negligible
  CHECK(g_func(0.4, 40.0) < 1e-300);
  CHECK(g_func(0.4, 40.0) >= 0.0);
}

TEST_CASE("continuation kernel matches reference values") {
  // reference values computed with 50-digit arithmetic
  CHECK(f_func(0.5, 0.1, 0.75, 0.2, unit_model(0.5)) ==
        doctest::Approx(9.7602109340489421679).epsilon(1e-13));
  CHECK(f_func(0.5, 0.1, 0.75, 0.2, unit_model(0.3)) ==
        doctest::Approx(4.8918578985331963701).epsilon(1e-13));

  // a collapsed band contributes nothing
  CHECK(f_func(0.3, 0.5, 0.6, 0.0, unit_model(0.5)) == 0.0);
  CHECK(f_func(0.3, -0.5, 0.6, 0.0, unit_model(0.7)) == 0.0);

  // far from the band the transition mass vanishes
  CHECK(f_func(0.3, 60.0, 0.6, 0.2, unit_model(0.5)) == 0.0);

  // widening the band only adds transition mass
  const Model m = unit_model(0.5);
  double prev = 0.0;
  for (double y : {0.05, 0.1, 0.3, 0.8}) {
    const double cur = f_func(0.4, 0.2, 0.7, y, m);
    CHECK(cur > prev);
    prev = cur;
  }

  const Model m3 = unit_model(0.3);
  CHECK_THROWS_AS(f_func(0.5, 0.1, 0.5, 0.2, m3), std::invalid_argument);
  CHECK_THROWS_AS(f_func(0.5, 0.1, 0.4, 0.2, m3), std::invalid_argument);
  CHECK_THROWS_AS(f_func(0.5, 0.1, 1.0, 0.2, m3), std::invalid_argument);
  CHECK_THROWS_AS(f_func(0.5, 0.1, 0.75, -0.01, m3), std::invalid_argument);
}

TEST_CASE("solver produces certified boundaries for all noise regimes") {
  for (double hurst : {0.3, 0.5, 0.7}) {
    CAPTURE(hurst);
    const BoundaryTable tb = solve_at(hurst, 250);
    CHECK_NOTHROW(validate(tb));
    CHECK_NOTHROW(require_shape(tb));
    CHECK(tb.meta.n_grid == 250);
    CHECK(tb.meta.max_residual <= 1e-5);
    CHECK_FALSE(tb.meta.residual_warning);
    CHECK(tb.grid(tb.grid.size() - 1) == 1.0);
    CHECK(tb.a(tb.a.size() - 1) == 0.0);
    CHECK(tb.a.head(tb.a.size() - 1).minCoeff() > 0.0);
    // grid starts one epsilon above the monotonicity time
    const Model m = unit_model(hurst);
    CHECK(tb.grid(0) ==
          doctest::Approx(m.consts.t0 + 1e-4).epsilon(1e-12));
    CHECK(tb.meta.extended_below_t0 == false);
  }

  // rough noise forbids stopping early; smooth and standard noise do not
  CHECK(unit_model(0.3).consts.t0 ==
        doctest::Approx(0.4 / 2.8).epsilon(1e-15));
  CHECK(unit_model(0.5).consts.t0 == 0.0);
  CHECK(unit_model(0.7).consts.t0 == 0.0);
}

TEST_CASE("solved boundary satisfies the integral equation off the grid") {
  const Model m = unit_model(0.5);
  const BoundaryTable tb = solve_at(0.5, 250);
  const std::vector<double> pts = {0.013, 0.2, 0.41, 0.55, 0.77, 0.93, 0.995};
  CHECK(residual(tb, m, pts) <= 5e-3);

  const Model m3 = unit_model(0.3);
  const BoundaryTable tb3 = solve_at(0.3, 250);
  const std::vector<double> pts3 = {0.2, 0.41, 0.55, 0.77, 0.93, 0.995};
  CHECK(residual(tb3, m3, pts3) <= 5e-3);

  // check points must lie strictly inside the table's time range
  const std::vector<double> at_front = {tb.grid(0)};
  CHECK_THROWS_AS(residual(tb, m, at_front), std::invalid_argument);
  const std::vector<double> at_end = {1.0};
  CHECK_THROWS_AS(residual(tb, m, at_end), std::invalid_argument);
}

TEST_CASE("grid refinement tightens the certificate") {
  const Model m = unit_model(0.5);
  const BoundaryTable coarse = solve_at(0.5, 120);
  const BoundaryTable fine = solve_at(0.5, 240);
  const double lo = 1.5 * std::max(coarse.grid(0), fine.grid(0));
  std::vector<double> pts;
  for (int k = 0; k < 25; ++k) {
    pts.push_back(lo + (0.995 - lo) * k / 24.0);
  }
  const double rc = residual(coarse, m, pts);
  const double rf = residual(fine, m, pts);
  CAPTURE(rc);
  CAPTURE(rf);
  CHECK(rf < rc);
  CHECK(rc / rf >= 1.5);
}

TEST_CASE("perturbed and degenerate boundaries fail the certificate") {
  const Model m = unit_model(0.5);
  const BoundaryTable tb = solve_at(0.5, 250);
  const double base = residual(tb, m);
  CHECK(base <= 1e-5);

  BoundaryTable doubled = tb;
  doubled.a *= 2.0;
  CHECK(residual(doubled, m) > 1e-3);
  CHECK(residual(doubled, m) > 100.0 * base);

  // with A identically zero the defect at each node is the bare payoff,
  // maximised at the earliest interior node
  BoundaryTable flat = tb;
  flat.a.setZero();
  CHECK_NOTHROW(validate(flat));
  CHECK_THROWS_AS(require_shape(flat), std::invalid_argument);
  CHECK(residual(flat, m) ==
        doctest::Approx(g_func(flat.grid(1), 0.0)).epsilon(1e-12));
}

TEST_CASE("boundary depends only on sigma and hurst not the prior mean") {
  SolveOptions opt;
  opt.n_grid = 120;
  const BoundaryTable a = solve_boundary(make_model({0.0, 1.0, 0.5}), opt);
  const BoundaryTable b = solve_boundary(make_model({5.0, 1.0, 0.5}), opt);
  REQUIRE(a.grid.size() == b.grid.size());
  for (Eigen::Index i = 0; i < a.grid.size(); ++i) {
    CHECK(a.grid(i) == b.grid(i));
    CHECK(a.a(i) == b.a(i));
  }
}

TEST_CASE("spot values are stable under grid refinement") {
  for (double hurst : {0.3, 0.5, 0.7}) {
    CAPTURE(hurst);
    const BoundaryTable c = solve_at(hurst, 250);
    const BoundaryTable f = solve_at(hurst, 500);
    for (double t : {0.5, 0.7, 0.9}) {
      CAPTURE(t);
      CHECK(std::abs(boundary_at(c, t) - boundary_at(f, t)) <= 1e-4);
    }
  }
}

TEST_CASE("early-time extension reaches the requested start") {
  const BoundaryTable tb = solve_at(0.3, 250, /*extend=*/true);
  CHECK(tb.meta.extended_below_t0);
  CHECK(tb.grid(0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(tb.grid(0) < tb.t0);
  CHECK(tb.a(0) > 0.0);
  // monotonicity is only promised from t0 onwards, so shape still certifies
  CHECK_NOTHROW(require_shape(tb));
  CHECK(tb.meta.max_residual <= 1e-5);

  // beyond t0 the extension agrees with the plain solve
  const BoundaryTable plain = solve_at(0.3, 250);
  for (double t : {0.3, 0.5, 0.8}) {
    CAPTURE(t);
    CHECK(std::abs(boundary_at(tb, t) - boundary_at(plain, t)) <= 2e-4);
  }
}

TEST_CASE("table lookup interpolates linearly and pins the horizon") {
  const BoundaryTable tb = solve_at(0.5, 120);
  const Eigen::Index n = tb.grid.size();

  CHECK(boundary_at(tb, 1.0) == 0.0);
  CHECK(boundary_at(tb, tb.grid(0)) == tb.a(0));
  CHECK(boundary_at(tb, tb.grid(n / 2)) ==
        doctest::Approx(tb.a(n / 2)).epsilon(1e-14));

  const double mid = 0.5 * (tb.grid(10) + tb.grid(11));
  CHECK(boundary_at(tb, mid) ==
        doctest::Approx(0.5 * (tb.a(10) + tb.a(11))).epsilon(1e-13));

  CHECK_THROWS_AS(boundary_at(tb, tb.grid(0) - 1e-6), std::out_of_range);
  CHECK_THROWS_AS(boundary_at(tb, 1.0 + 1e-12), std::out_of_range);
}

TEST_CASE("tables are checked for structure shape and fingerprint") {
  const BoundaryTable tb = solve_at(0.5, 120);

  BoundaryTable bad = tb;
  bad.a(5) = -1e-9;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = tb;
  bad.a(bad.a.size() - 1) = 1e-12;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = tb;
  bad.grid(7) = bad.grid(6);
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = tb;
  bad.grid(bad.grid.size() - 1) = 0.999999;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = tb;
  bad.a.conservativeResize(bad.a.size() - 1);
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = tb;
  bad.m_const *= 1.01;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  // a bump after t0 breaks the monotone shape but not raw structure
  bad = tb;
  bad.a(60) = bad.a(59) * 1.5;
  CHECK_NOTHROW(validate(bad));
  CHECK_THROWS_AS(require_shape(bad), std::invalid_argument);

  CHECK_NOTHROW(require_matching(tb, unit_model(0.5)));
  CHECK_THROWS_AS(require_matching(tb, unit_model(0.7)),
                  std::invalid_argument);
  CHECK_THROWS_AS(require_matching(tb, make_model({0.0, 2.0, 0.5})),
                  std::invalid_argument);
}

TEST_CASE("solver rejects unusable options") {
  const Model m = unit_model(0.5);
  SolveOptions opt;

  opt.n_grid = 49;
  CHECK_THROWS_AS(solve_boundary(m, opt), std::invalid_argument);

  opt = SolveOptions{};
  opt.t_min_epsilon = 0.0;
  CHECK_THROWS_AS(solve_boundary(m, opt), std::invalid_argument);

  opt = SolveOptions{};
  opt.bisect_tol = -1.0;
  CHECK_THROWS_AS(solve_boundary(m, opt), std::invalid_argument);

  opt = SolveOptions{};
  opt.end_gap = 1.5;
  CHECK_THROWS_AS(solve_boundary(m, opt), std::invalid_argument);
}

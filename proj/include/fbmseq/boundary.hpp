#pragma once

#include <Eigen/Core>

#include <span>

#include "fbmseq/model.hpp"

namespace fbmseq {

// Both sides of the boundary equation live in transformed time t in (t0, 1]:
//   G(t, A(t)) = int_t^1 F(t, A(t), s, A(s)) ds,  A(1) = 0.

// G(t, x) = E|Z sqrt(1-t) + x| - x, Z standard normal; G(1, x) = |x| - x.
double g_func(double t, double x);

// F(t, x, s, y) = f'(s) * P(|Z sqrt(s-t) + x| <= y), requires t < s < 1, y >= 0.
double f_func(double t, double x, double s, double y, const Model& model);

struct SolveOptions {
  int n_grid = 500;
  double t_min_epsilon = 1e-4;     // grid starts at t0 + epsilon
  double end_gap = 1e-5;           // last geometric node sits at 1 - end_gap
  double bisect_tol = 1e-10;       // absolute tolerance on boundary values
  double residual_tolerance = 5e-3;  // in the units of G; exceeding it only
                                     // sets a warning flag in the meta record
  bool extend_below_t0 = false;    // formal continuation below t0 (H < 1/2
                                   // only); no monotonicity guarantee there
};

struct SolveMeta {
  int n_grid = 0;
  double t_min = 0.0;
  double end_gap = 0.0;
  double bisect_tol = 0.0;
  bool extended_below_t0 = false;
  double max_residual = 0.0;  // over interior grid nodes, filled by the solver
  bool residual_warning = false;
};

// Stopping boundary on a grid refined geometrically toward 1.
// Depends on (sigma, hurst) only; mu never enters the equation.
struct BoundaryTable {
  double sigma = 0.0;
  double hurst = 0.0;
  double gamma_exp = 0.0;
  double m_const = 0.0;
  double t0 = 0.0;
  Eigen::VectorXd grid;  // strictly increasing, last node exactly 1
  Eigen::VectorXd a;     // boundary values, a[last] == 0
  SolveMeta meta;
};

// Backward induction from A(1) = 0 with per-node bisection on
// [0, upper bound from the stopping-set inclusions].
BoundaryTable solve_boundary(const Model& model, const SolveOptions& options = {});

// Max absolute defect |G(t, A(t)) - int_t^1 F ds| over check points inside
// (grid.front(), 1), evaluated with an adaptive quadrature finer than and
// independent of the solver's rule.
double residual(const BoundaryTable& table, const Model& model,
                std::span<const double> check_points);

// Residual over the table's own interior grid nodes.
double residual(const BoundaryTable& table, const Model& model);

// Linear interpolation; t must lie in [grid.front(), 1]; t = 1 returns 0.
double boundary_at(const BoundaryTable& table, double t);

// Structural checks shared by the solver and loaders (sizes, grid shape,
// endpoint values, constant consistency); throws on violation.
void validate(const BoundaryTable& table);

// Theorem-shape checks on top of validate: strictly positive before 1,
// non-increasing on [t0, 1], a priori bound beyond 2 t0. Deliberately not
// part of validate so that degenerate tables can still be executed.
void require_shape(const BoundaryTable& table);

// (sigma, hurst) fingerprint check before a table is used with a model.
void require_matching(const BoundaryTable& table, const Model& model);

}  // namespace fbmseq

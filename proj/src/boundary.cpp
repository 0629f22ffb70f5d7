#include "fbmseq/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fbmseq/specfun.hpp"

namespace fbmseq {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr double kGaussNode[8] = {
    -0.96028985649753623, -0.79666647741362674, -0.52553240991632899,
    -0.18343464249564980, 0.18343464249564980,  0.52553240991632899,
    0.79666647741362674,  0.96028985649753623};
constexpr double kGaussWeight[8] = {
    0.10122853629037626, 0.22238103445337447, 0.31370664587788729,
    0.36268378337836198, 0.36268378337836198, 0.31370664587788729,
    0.22238103445337447, 0.10122853629037626};

// The exact form of P(|Z u + x| <= y) cancels catastrophically once
// y << u; switch to the width-times-density limit there.
constexpr double kLinearizeRatio = 1e-4;

double interval_prob(double x, double y, double u) {
  if (y <= 0.0) return 0.0;
  if (y < kLinearizeRatio * u) {
    return 2.0 * (y / u) * std_normal_pdf(x / u);
  }
  return std_normal_cdf((y - x) / u) - std_normal_cdf((-y - x) / u);
}

double rate(double s, double m_gamma, double gamma) {
  return m_gamma * std::pow(s, gamma - 1.0) * std::pow(1.0 - s, -gamma - 1.0);
}

// Leading tail behaviour A(s) ~ (1-s)^(gamma+1) / (2 M gamma): with this
// decay the rate blow-up and the shrinking crossing window balance so that
// rate(s) A(s) -> 1/2, which is exactly what the equation demands as t -> 1.
double tail_asymptote(double one_minus_t, double m_const, double gamma) {
  return std::pow(one_minus_t, gamma + 1.0) / (2.0 * m_const * gamma);
}

double a_priori_bound(double t, const Model& model) {
  const double g = model.consts.gamma_exp;
  const double m = model.consts.m_const;
  const double t0 = model.consts.t0;
  if (t > 2.0 * t0) {
    return std::pow(1.0 - t, g) / (2.0 * m * std::pow(t, g - 1.0));
  }
  // below 2 t0 the rate is smallest at t0, so 1 / (2 f'(t0)) still bounds
  return 1.0 / (2.0 * rate(t0, m * g, g));
}

// Precomputed quadrature for int_t^1 F(t_i, a, s, A(s)) ds at one backward
// induction node. Everything that does not depend on the bisection
// candidate a is frozen up front: per Gauss node either
//   exact:      contribution = coef * P(|Z u + a| <= y),  coef = w 2u f'(s)
//   linearized: contribution = coef * phi(a / u),         coef = w 4 f'(s) y
// using u = sqrt(s - t_i), with the terminal panel's f'(s) y(s) product
// taken in its analytically cancelled form.
struct NodeRule {
  double t_i = 0.0;
  double dt = 0.0;      // first panel width t_{i+1} - t_i
  double a_next = 0.0;  // A(t_{i+1})
  double m_gamma = 0.0;
  double gamma = 0.0;
  std::vector<double> ex_coef, ex_y, ex_invu;
  std::vector<double> lin_coef, lin_invu;

  double eval(double a) const;
  double first_panel(double a) const;
};

double NodeRule::first_panel(double a) const {
  const double u_end = std::sqrt(dt);
  // the second CDF term turns on over the scale u ~ a; resolve that scale
  // with a geometric ladder of panel edges a/2, a, 2a, ..., capped at u_end
  double edges[10];
  int n_edges = 0;
  edges[n_edges++] = 0.0;
  if (a > 0.0) {
    for (double e = 0.5 * a; e < u_end && n_edges < 9; e *= 2.0) {
      edges[n_edges++] = e;
    }
  }
  edges[n_edges++] = u_end;
  double total = 0.0;
  for (int p = 0; p + 1 < n_edges; ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    const double mid = 0.5 * (edges[p + 1] + edges[p]);
    for (int k = 0; k < 8; ++k) {
      const double u = mid + half * kGaussNode[k];
      if (u <= 0.0) continue;
      const double s = t_i + u * u;
      const double y = a + (a_next - a) * (u * u / dt);
      total += kGaussWeight[k] * half * 2.0 * u * rate(s, m_gamma, gamma) *
               interval_prob(a, y, u);
    }
  }
  return total;
}

double NodeRule::eval(double a) const {
  double total = first_panel(a);
  for (std::size_t k = 0; k < ex_coef.size(); ++k) {
    total += ex_coef[k] * (std_normal_cdf((ex_y[k] - a) * ex_invu[k]) -
                           std_normal_cdf((-ex_y[k] - a) * ex_invu[k]));
  }
  for (std::size_t k = 0; k < lin_coef.size(); ++k) {
    total += lin_coef[k] * std_normal_pdf(a * lin_invu[k]);
  }
  return total;
}

NodeRule build_rule(Eigen::Index i, const Eigen::VectorXd& grid,
                    const Eigen::VectorXd& avals, const Model& model) {
  const Eigen::Index n = grid.size();
  NodeRule rule;
  rule.t_i = grid[i];
  rule.dt = grid[i + 1] - grid[i];
  rule.a_next = avals[i + 1];
  rule.gamma = model.consts.gamma_exp;
  rule.m_gamma = model.consts.m_const * model.consts.gamma_exp;

  const std::size_t expect = static_cast<std::size_t>(8 * (n - i));
  rule.ex_coef.reserve(expect);
  rule.ex_y.reserve(expect);
  rule.ex_invu.reserve(expect);

  auto push = [&rule](double coef_fp, double y, double u) {
    // coef_fp = weight * f'(s); decide the branch once since (y, u) are fixed
    if (y < kLinearizeRatio * u) {
      rule.lin_coef.push_back(coef_fp * 4.0 * y);
      rule.lin_invu.push_back(1.0 / u);
    } else {
      rule.ex_coef.push_back(coef_fp * 2.0 * u);
      rule.ex_y.push_back(y);
      rule.ex_invu.push_back(1.0 / u);
    }
  };

  // interior panels [t_j, t_{j+1}] for j = i+1 .. n-3, in u = sqrt(s - t_i)
  for (Eigen::Index j = i + 1; j + 2 < n; ++j) {
    const double u_lo = std::sqrt(grid[j] - grid[i]);
    const double u_hi = std::sqrt(grid[j + 1] - grid[i]);
    const double half = 0.5 * (u_hi - u_lo);
    const double mid = 0.5 * (u_hi + u_lo);
    const double slope = (avals[j + 1] - avals[j]) / (grid[j + 1] - grid[j]);
    for (int k = 0; k < 8; ++k) {
      const double u = mid + half * kGaussNode[k];
      const double s = grid[i] + u * u;
      const double y = avals[j] + slope * (s - grid[j]);
      push(kGaussWeight[k] * half * rate(s, rule.m_gamma, rule.gamma), y, u);
    }
  }

  // terminal panel [t_{n-2}, 1] with the anchored power-law tail
  // y(s) = A(t_{n-2}) ((1-s)/end_gap)^(gamma+1); linear interpolation is
  // useless here because the integrand f'(s) y(s) must stay bounded.
  // Integrated in u like all other panels: in u-coordinates the panel edge
  // s = t_{n-2} is regular, and with f'(s) y(s) in its analytically
  // cancelled form the integrand is smooth all the way to s = 1.
  const double g_end = 1.0 - grid[n - 2];
  const double a_term = avals[n - 2];
  const double fy_scale = rule.m_gamma * a_term / std::pow(g_end, rule.gamma + 1.0);
  const double u_lo = std::sqrt(grid[n - 2] - grid[i]);
  const double u_hi = std::sqrt(1.0 - grid[i]);
  // two geometric sub-panels to cover the wide relative span at tail nodes
  const double u_mid = std::sqrt(u_lo * u_hi);
  const double sub[3] = {u_lo, u_mid, u_hi};
  for (int p = 0; p < 2; ++p) {
    const double half = 0.5 * (sub[p + 1] - sub[p]);
    const double mid = 0.5 * (sub[p + 1] + sub[p]);
    for (int k = 0; k < 8; ++k) {
      const double u = mid + half * kGaussNode[k];
      const double s = grid[i] + u * u;
      const double v = std::max(0.0, 1.0 - s);
      const double y = a_term * std::pow(v / g_end, rule.gamma + 1.0);
      const double w2u = kGaussWeight[k] * half * 2.0 * u;
      if (y < kLinearizeRatio * u) {
        // f'(s) y(s) = m_gamma s^(gamma-1) a_term / end_gap^(gamma+1):
        // the (1-s) powers cancel exactly
        const double fy = fy_scale * std::pow(s, rule.gamma - 1.0);
        rule.lin_coef.push_back(w2u * 2.0 * fy / u);
        rule.lin_invu.push_back(1.0 / u);
      } else {
        push(kGaussWeight[k] * half * rate(s, rule.m_gamma, rule.gamma), y, u);
      }
    }
  }
  return rule;
}

template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol,
                        int depth) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Independent evaluation of int_t^1 F(t, x, s, A(s)) ds for the checker:
// adaptive Simpson in u = sqrt(s - t) panel by panel, with the same
// power-law tail on the terminal panel that the solver commits to.
double checker_integral(const BoundaryTable& table, double t, double x) {
  const Eigen::Index n = table.grid.size();
  const double gamma = table.gamma_exp;
  const double m_gamma = table.m_const * gamma;
  const double t_term = table.grid[n - 2];
  const double g_end = 1.0 - t_term;
  const double a_term = table.a[n - 2];

  auto psi = [&](double u) -> double {
    if (u <= 0.0) return 0.0;
    const double s = t + u * u;
    if (s >= t_term) {
      const double v = std::max(0.0, 1.0 - s);
      const double y = a_term * std::pow(v / g_end, gamma + 1.0);
      if (y < kLinearizeRatio * u) {
        const double fy = m_gamma * std::pow(s, gamma - 1.0) * a_term /
                          std::pow(g_end, gamma + 1.0);
        return 4.0 * fy * std_normal_pdf(x / u);
      }
      return 2.0 * u * rate(s, m_gamma, gamma) * interval_prob(x, y, u);
    }
    const double y = boundary_at(table, s);
    return 2.0 * u * rate(s, m_gamma, gamma) * interval_prob(x, y, u);
  };

  // panel edges: the grid nodes ahead of t, so that the kinks of the
  // piecewise-linear A sit on panel boundaries
  std::vector<double> edges;
  edges.push_back(0.0);
  for (Eigen::Index j = 0; j < n - 1; ++j) {
    if (table.grid[j] > t) edges.push_back(std::sqrt(table.grid[j] - t));
  }
  edges.push_back(std::sqrt(1.0 - t));

  double total = 0.0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    total += adaptive_simpson(psi, edges[e], edges[e + 1], 1e-11, 24);
  }
  return total;
}

struct GridSpec {
  double t_min = 0.0;
  bool extended = false;
};

GridSpec resolve_grid_start(const Model& model, const SolveOptions& options) {
  GridSpec spec;
  spec.extended = options.extend_below_t0 && model.consts.t0 > 0.0;
  spec.t_min = spec.extended ? options.t_min_epsilon
                             : model.consts.t0 + options.t_min_epsilon;
  return spec;
}

}  // namespace

double g_func(double t, double x) {
  if (!(t >= 0.0) || !(t <= 1.0)) {
    std::ostringstream msg;
    msg << "g_func: requires t in [0, 1], got " << t;
    throw std::invalid_argument(msg.str());
  }
  if (t == 1.0) return std::abs(x) - x;
  const double sd = std::sqrt(1.0 - t);
  const double z = x / sd;
  return 2.0 * (sd * std_normal_pdf(z) - x * std_normal_cdf(-z));
}

double f_func(double t, double x, double s, double y, const Model& model) {
  if (!(s > t) || !(s < 1.0)) {
    std::ostringstream msg;
    msg << "f_func: requires t < s < 1, got t=" << t << " s=" << s;
    throw std::invalid_argument(msg.str());
  }
  if (!(y >= 0.0)) {
    throw std::invalid_argument("f_func: requires y >= 0");
  }
  const double u = std::sqrt(s - t);
  return cost_rate(s, model) *
         (std_normal_cdf((y - x) / u) - std_normal_cdf((-y - x) / u));
}

BoundaryTable solve_boundary(const Model& model, const SolveOptions& options) {
  validate(model.params);
  if (options.n_grid < 50) {
    throw std::invalid_argument("solve_boundary: n_grid must be >= 50");
  }
  if (!(options.t_min_epsilon > 0.0)) {
    throw std::invalid_argument("solve_boundary: t_min_epsilon must be > 0");
  }
  if (!(options.bisect_tol > 0.0)) {
    throw std::invalid_argument("solve_boundary: bisect_tol must be > 0");
  }
  const GridSpec start = resolve_grid_start(model, options);
  if (!(options.end_gap > 0.0) || !(options.end_gap < 1.0 - start.t_min)) {
    throw std::invalid_argument(
        "solve_boundary: end_gap must lie in (0, 1 - t_min)");
  }

  const Eigen::Index n = options.n_grid;
  const double gamma = model.consts.gamma_exp;
  const double m_const = model.consts.m_const;
  const double t0 = model.consts.t0;

  // geometric refinement toward 1, where the cost rate blows up
  Eigen::VectorXd grid(n);
  const double span = 1.0 - start.t_min;
  const double q = std::pow(options.end_gap / span, 1.0 / double(n - 2));
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    grid[k] = 1.0 - span * std::pow(q, double(k));
  }
  grid[n - 2] = 1.0 - options.end_gap;
  grid[n - 1] = 1.0;

  Eigen::VectorXd avals = Eigen::VectorXd::Zero(n);
  avals[n - 2] = tail_asymptote(options.end_gap, m_const, gamma);

  const double eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = n - 3; i >= 0; --i) {
    const double t_i = grid[i];
    const NodeRule rule = build_rule(i, grid, avals, model);
    const double bound = a_priori_bound(t_i, model);
    const double asym = tail_asymptote(1.0 - t_i, m_const, gamma);

    const double f_lo = g_func(t_i, 0.0) - rule.eval(0.0);
    if (f_lo <= 0.0) {
      // Deep in the tail the sign margin at a = 0 is of the order of A
      // itself and can be swamped by quadrature roundoff; there the
      // asymptote is more accurate than any bisection could be.
      const bool tail = (1.0 - t_i) < 1e-2 && avals[i + 1] <= 4.0 * asym;
      if (tail) {
        avals[i] = std::min(bound, asym);
        continue;
      }
      std::ostringstream msg;
      msg << "solve_boundary: bracket failure at t=" << t_i
          << " (equation defect " << f_lo << " at a=0, bracket [0," << bound
          << "])";
      throw std::runtime_error(msg.str());
    }
    // at extreme bounds both sides can underflow to an exact 0, which still
    // brackets (0 is the stopping side for the bisection below)
    const double f_hi = g_func(t_i, bound) - rule.eval(bound);
    if (f_hi > 0.0) {
      std::ostringstream msg;
      msg << "solve_boundary: bracket failure at t=" << t_i
          << " (equation defect " << f_hi << " at the a priori bound "
          << bound << ")";
      throw std::runtime_error(msg.str());
    }

    // near t = 1 the default absolute tolerance is coarser than A itself,
    // so tighten it to a fraction of the local scale
    const double tol =
        std::max(4.0 * eps * bound,
                 std::min(options.bisect_tol, 1e-3 * std::max(asym, avals[i + 1])));
    double lo = 0.0;
    double hi = bound;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (g_func(t_i, mid) - rule.eval(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    avals[i] = 0.5 * (lo + hi);

    // the solution is non-increasing on [t0, 1]; tolerate only
    // quadrature-level jitter
    if (t_i >= t0 && avals[i] < avals[i + 1]) {
      const double slack = std::max(1e-6, 1e-4 * avals[i + 1]);
      if (avals[i + 1] - avals[i] > slack) {
        std::ostringstream msg;
        msg << "solve_boundary: non-monotone step at t=" << t_i << " ("
            << avals[i] << " -> " << avals[i + 1] << ")";
        throw std::runtime_error(msg.str());
      }
      avals[i] = avals[i + 1];
    }
  }

  BoundaryTable table;
  table.sigma = model.params.sigma;
  table.hurst = model.params.hurst;
  table.gamma_exp = gamma;
  table.m_const = m_const;
  table.t0 = t0;
  table.grid = std::move(grid);
  table.a = std::move(avals);
  table.meta.n_grid = static_cast<int>(n);
  table.meta.t_min = start.t_min;
  table.meta.end_gap = options.end_gap;
  table.meta.bisect_tol = options.bisect_tol;
  table.meta.extended_below_t0 = start.extended;
  table.meta.max_residual = residual(table, model);
  table.meta.residual_warning = table.meta.max_residual > options.residual_tolerance;
  return table;
}

double residual(const BoundaryTable& table, const Model& model,
                std::span<const double> check_points) {
  require_matching(table, model);
  double worst = 0.0;
  for (double t : check_points) {
    if (!(t > table.grid[0]) || !(t < 1.0)) {
      std::ostringstream msg;
      msg << "residual: check point " << t
          << " outside the open grid range";
      throw std::invalid_argument(msg.str());
    }
    const double x = boundary_at(table, t);
    const double defect =
        std::abs(g_func(t, x) - checker_integral(table, t, x));
    worst = std::max(worst, defect);
  }
  return worst;
}

double residual(const BoundaryTable& table, const Model& model) {
  std::vector<double> pts;
  pts.reserve(table.grid.size());
  for (Eigen::Index i = 1; i + 1 < table.grid.size(); ++i) {
    pts.push_back(table.grid[i]);
  }
  return residual(table, model, pts);
}

double boundary_at(const BoundaryTable& table, double t) {
  const Eigen::Index n = table.grid.size();
  if (!(t >= table.grid[0]) || !(t <= 1.0)) {
    std::ostringstream msg;
    msg << "boundary_at: t=" << t << " outside the tabulated range ["
        << table.grid[0] << ", 1]";
    throw std::out_of_range(msg.str());
  }
  if (t >= table.grid[n - 1]) return table.a[n - 1];
  const double* begin = table.grid.data();
  const double* pos = std::upper_bound(begin, begin + n, t);
  const Eigen::Index j = pos - begin;  // grid[j-1] <= t < grid[j]
  const double w = (t - table.grid[j - 1]) / (table.grid[j] - table.grid[j - 1]);
  return table.a[j - 1] + w * (table.a[j] - table.a[j - 1]);
}

void validate(const BoundaryTable& table) {
  const Eigen::Index n = table.grid.size();
  if (n < 2 || table.a.size() != n) {
    throw std::invalid_argument("BoundaryTable: grid/a size mismatch");
  }
  if (!(table.sigma > 0.0) || !(table.hurst > 0.0) || !(table.hurst < 1.0)) {
    throw std::invalid_argument("BoundaryTable: invalid fingerprint params");
  }
  const DerivedConstants ref =
      derive_constants(ModelParams{0.0, table.sigma, table.hurst});
  const double tol = 1e-12;
  if (std::abs(table.gamma_exp - ref.gamma_exp) >
          tol * std::abs(ref.gamma_exp) ||
      std::abs(table.m_const - ref.m_const) > tol * std::abs(ref.m_const) ||
      std::abs(table.t0 - ref.t0) > tol * std::max(1.0, std::abs(ref.t0))) {
    throw std::invalid_argument(
        "BoundaryTable: derived constants do not match (sigma, hurst)");
  }
  if (!(table.grid[0] > 0.0) || table.grid[n - 1] != 1.0) {
    throw std::invalid_argument(
        "BoundaryTable: grid must lie in (0, 1] and end exactly at 1");
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(table.grid[i] > table.grid[i - 1])) {
      throw std::invalid_argument("BoundaryTable: grid must be increasing");
    }
  }
  if (!table.a.allFinite() || table.a.minCoeff() < 0.0) {
    throw std::invalid_argument(
        "BoundaryTable: boundary values must be finite and non-negative");
  }
  if (table.a[n - 1] != 0.0) {
    throw std::invalid_argument("BoundaryTable: A(1) must be exactly 0");
  }
}

void require_shape(const BoundaryTable& table) {
  validate(table);
  const Eigen::Index n = table.grid.size();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (!(table.a[i] > 0.0)) {
      std::ostringstream msg;
      msg << "BoundaryTable: A must be strictly positive before 1, got "
          << table.a[i] << " at t=" << table.grid[i];
      throw std::invalid_argument(msg.str());
    }
    const bool in_monotone_range = table.grid[i] >= table.t0;
    if (in_monotone_range && table.a[i] < table.a[i + 1]) {
      std::ostringstream msg;
      msg << "BoundaryTable: A must be non-increasing on [t0, 1], violated "
          << "at t=" << table.grid[i];
      throw std::invalid_argument(msg.str());
    }
    if (table.grid[i] > 2.0 * table.t0) {
      const double bound = std::pow(1.0 - table.grid[i], table.gamma_exp) /
                           (2.0 * table.m_const *
                            std::pow(table.grid[i], table.gamma_exp - 1.0));
      if (table.a[i] > bound * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "BoundaryTable: a priori bound violated at t=" << table.grid[i]
            << " (A=" << table.a[i] << " > " << bound << ")";
        throw std::invalid_argument(msg.str());
      }
    }
  }
}

void require_matching(const BoundaryTable& table, const Model& model) {
  if (table.sigma != model.params.sigma || table.hurst != model.params.hurst) {
    std::ostringstream msg;
    msg << "BoundaryTable: fingerprint (sigma=" << table.sigma
        << ", H=" << table.hurst << ") does not match model (sigma="
        << model.params.sigma << ", H=" << model.params.hurst << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace fbmseq

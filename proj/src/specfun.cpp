#include "fbmseq/specfun.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fbmseq {

namespace {

// Lanczos approximation, g = 7, 9 coefficients (Godfrey's set).
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,      -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,    12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6,  1.5056327351493116e-7};

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // ln(2 pi) / 2
constexpr double kInvSqrtTwoPi = 0.39894228040143267794;  // 1 / sqrt(2 pi)
constexpr double kEulerGamma = 0.57721566490153286061;

// Valid for x >= 0.5.
double ln_gamma_shifted(double x) {
  double acc = kLanczos[0];
  for (int k = 1; k < 9; ++k) acc += kLanczos[k] / (x - 1.0 + k);
  double base = x + 6.5;  // x + g - 0.5
  return kHalfLogTwoPi + (x - 0.5) * std::log(base) - base + std::log(acc);
}

// Plain power series around z = 0; converges geometrically for |z| < 1,
// used here only for z in (-0.5, 0.5).
double series_2f1(double a, double b, double c, double z) {
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  const double eps = std::numeric_limits<double>::epsilon();
  for (int k = 0; k < 500; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (1.0 + k)) * z;
    sum += term;
    // two consecutive negligible terms guard against alternating-sign stalls
    if (std::abs(term) <= eps * std::abs(sum) &&
        std::abs(prev) <= eps * std::abs(sum)) {
      return sum;
    }
    prev = term;
  }
  std::ostringstream msg;
  msg << "gauss_2f1: series did not converge for a=" << a << " b=" << b
      << " c=" << c << " z=" << z;
  throw std::runtime_error(msg.str());
}

// Shift above 10, then the Bernoulli asymptotic series; absolute error
// stays below ~2e-14. Valid away from the poles at 0, -1, -2, ...
double digamma(double x) {
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double tail =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 - inv2 * (1.0 / 132)))));
  return acc + std::log(x) - 0.5 * inv - tail;
}

// 2F1(a, b; a+b; w) for w in [1/2, 1) via the logarithmic connection
// formula: the series runs in powers of 1 - w, so it converges where the
// plain series stalls. Requires non-integer a in (-1, 0) or a > 0, b > 0.
double log_case_2f1(double a, double b, double w) {
  const double one_minus_w = 1.0 - w;
  const double log_term = -std::log(one_minus_w);
  // Gamma(a+b) / (Gamma(a) Gamma(b)); for a < 0 route through Gamma(a+1).
  const double pref =
      a > 0.0 ? std::exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b))
              : a * std::exp(ln_gamma(a + b) - ln_gamma(a + 1.0) - ln_gamma(b));
  double coef = 1.0;            // (a)_k (b)_k / (k!)^2
  double psi1 = -kEulerGamma;   // psi(k + 1)
  double psia = digamma(a);     // psi(a + k)
  double psib = digamma(b);     // psi(b + k)
  double pw = 1.0;              // (1 - w)^k
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  const double eps = std::numeric_limits<double>::epsilon();
  for (int k = 0; k < 500; ++k) {
    const double term = coef * (2.0 * psi1 - psia - psib + log_term) * pw;
    sum += term;
    if (std::abs(term) <= eps * std::abs(sum) &&
        std::abs(prev) <= eps * std::abs(sum)) {
      return pref * sum;
    }
    prev = term;
    coef *= (a + k) * (b + k) / ((k + 1.0) * (k + 1.0));
    psi1 += 1.0 / (k + 1.0);
    psia += 1.0 / (a + k);
    psib += 1.0 / (b + k);
    pw *= one_minus_w;
  }
  std::ostringstream msg;
  msg << "gauss_2f1: connection series did not converge for a=" << a
      << " b=" << b << " w=" << w;
  throw std::runtime_error(msg.str());
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0)) {
    std::ostringstream msg;
    msg << "ln_gamma: requires x > 0, got " << x;
    throw std::invalid_argument(msg.str());
  }
  if (x < 0.5) return ln_gamma_shifted(x + 1.0) - std::log(x);
  return ln_gamma_shifted(x);
}

double beta(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) {
    std::ostringstream msg;
    msg << "beta: requires x, y > 0, got x=" << x << " y=" << y;
    throw std::invalid_argument(msg.str());
  }
  return std::exp(ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y));
}

double gauss_2f1(double a, double b, double c, double z) {
  if (!(z <= 0.0)) {
    std::ostringstream msg;
    msg << "gauss_2f1: requires z <= 0, got " << z;
    throw std::invalid_argument(msg.str());
  }
  if (c <= 0.0 && c == std::floor(c)) {
    std::ostringstream msg;
    msg << "gauss_2f1: c must not be a non-positive integer, got " << c;
    throw std::invalid_argument(msg.str());
  }
  if (z == 0.0 || a == 0.0 || b == 0.0) return 1.0;
  if (z < -1.0) {
    // Pfaff sends z to w = z/(z-1) in (1/2, 1), where the plain series
    // stalls. For a = b the transformed parameters (a, c-a; c) land in the
    // logarithmic case c = a' + b', which has a fast expansion in 1 - w.
    if (a != b || !(a > -1.0) || !(c - a > 0.0)) {
      std::ostringstream msg;
      msg << "gauss_2f1: z < -1 is supported only for a = b in (-1, inf) "
             "with c > a, got a="
          << a << " b=" << b << " c=" << c;
      throw std::invalid_argument(msg.str());
    }
    return std::pow(1.0 - z, -a) * log_case_2f1(a, c - a, z / (z - 1.0));
  }
  if (z < -0.5) {
    // Pfaff: 2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1));
    // the new argument lies in (1/3, 1/2], where the series is fast.
    return std::pow(1.0 - z, -a) * series_2f1(a, c - b, c, z / (z - 1.0));
  }
  return series_2f1(a, b, c, z);
}

double std_normal_pdf(double x) {
  return kInvSqrtTwoPi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);  // x / sqrt(2)
}

}  // namespace fbmseq

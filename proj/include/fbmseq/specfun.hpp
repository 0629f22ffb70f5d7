#pragma once

namespace fbmseq {

// Natural logarithm of the gamma function, x > 0.
double ln_gamma(double x);

// Euler beta function B(x, y), x > 0, y > 0.
double beta(double x, double y);

// Gauss hypergeometric function 2F1(a, b; c; z) for z <= 0.
// c must not be a non-positive integer. Arguments in [-1, -1/2) are moved
// into the fast-converging range by the Pfaff transformation; z < -1 is
// supported for the a = b family (a > -1, c > a), where the transformed
// series falls into the logarithmic case and is resummed accordingly.
double gauss_2f1(double a, double b, double c, double z);

// Standard normal density and distribution function. The CDF is evaluated
// through erfc so that small tail probabilities keep relative accuracy.
double std_normal_pdf(double x);
double std_normal_cdf(double x);

}  // namespace fbmseq

#pragma once

namespace fbmseq {

// Observation Z_t = theta * t + B^H_t with unknown drift theta ~ N(mu, sigma^2).
struct ModelParams {
  double mu = 0.0;
  double sigma = 1.0;
  double hurst = 0.5;
};

// Constants derived from (sigma, hurst) once and carried immutably.
//   c_h:       normalizer of the whitening kernel
//   l_h:       drift factor of the whitened observation
//   gamma_exp: time-change exponent 1/(2-2H)
//   t0:        lower edge of the monotone boundary regime, max(0, (1-2H)/(4(1-H)))
//   m_const:   cost scale of the transformed problem, (2/sigma)*((2-2H)/(sigma^2 L^2))^gamma
struct DerivedConstants {
  double c_h = 1.0;
  double l_h = 1.0;
  double gamma_exp = 1.0;
  double t0 = 0.0;
  double m_const = 2.0;
};

struct Model {
  ModelParams params;
  DerivedConstants consts;
};

void validate(const ModelParams& params);
DerivedConstants derive_constants(const ModelParams& params);
Model make_model(const ModelParams& params);

// Observation cost accumulated by transformed time t in [0, 1):
// f(t) = M * (t/(1-t))^gamma, with f(t) -> infinity as t -> 1.
double cost(double t, const Model& model);

// f'(t) = M * gamma * t^(gamma-1) * (1-t)^(-gamma-1). Diverges at t = 0
// when gamma < 1, which is signalled as a domain error.
double cost_rate(double t, const Model& model);

// Monotone bijection between transformed time r in [0, 1) and original
// time t >= 0.
double time_change(double r, const Model& model);
double inverse_time_change(double t, const Model& model);

// Expected loss of an immediately optimal decision under the posterior
// N(a/b, 1/b): h(a, b) = min(E xi^+, E xi^-), and the regularized variant
// h(a, b) + |a|/(2b) whose value at the prior has a closed form.
double bayes_payoff(double a, double b);
double regularized_payoff(double a, double b);

}  // namespace fbmseq

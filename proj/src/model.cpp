#include "fbmseq/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbmseq/specfun.hpp"

namespace fbmseq {

void validate(const ModelParams& params) {
  if (!std::isfinite(params.mu)) {
    throw std::invalid_argument("ModelParams: mu must be finite");
  }
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) {
    std::ostringstream msg;
    msg << "ModelParams: sigma must be positive, got " << params.sigma;
    throw std::invalid_argument(msg.str());
  }
  if (!(params.hurst > 0.0) || !(params.hurst < 1.0)) {
    std::ostringstream msg;
    msg << "ModelParams: hurst must lie in (0, 1), got " << params.hurst;
    throw std::invalid_argument(msg.str());
  }
}

DerivedConstants derive_constants(const ModelParams& params) {
  validate(params);
  const double h = params.hurst;
  const double sigma = params.sigma;

  DerivedConstants c;
  // C_H = ( Gamma(2-2H) / (2H Gamma(1/2+H) Gamma(3/2-H)^3) )^(1/2)
  c.c_h = std::exp(0.5 * (ln_gamma(2.0 - 2.0 * h) - std::log(2.0 * h) -
                          ln_gamma(0.5 + h) - 3.0 * ln_gamma(1.5 - h)));
  // L_H = ( 2H (3/2-H) B(1/2+H, 2-2H) )^(-1/2)
  c.l_h = std::exp(-0.5 * (std::log(2.0 * h) + std::log(1.5 - h) +
                           ln_gamma(0.5 + h) + ln_gamma(2.0 - 2.0 * h) -
                           ln_gamma(2.5 - h)));
  c.gamma_exp = 1.0 / (2.0 - 2.0 * h);
  c.t0 = std::max(0.0, (1.0 - 2.0 * h) / (4.0 * (1.0 - h)));
  const double l2 = c.l_h * c.l_h;
  c.m_const = (2.0 / sigma) *
              std::pow((2.0 - 2.0 * h) / (sigma * sigma * l2), c.gamma_exp);
  return c;
}

Model make_model(const ModelParams& params) {
  return Model{params, derive_constants(params)};
}

double cost(double t, const Model& model) {
  if (!(t >= 0.0) || !(t < 1.0)) {
    std::ostringstream msg;
    msg << "cost: requires t in [0, 1), got " << t;
    throw std::invalid_argument(msg.str());
  }
  const double g = model.consts.gamma_exp;
  return model.consts.m_const * std::pow(t / (1.0 - t), g);
}

double cost_rate(double t, const Model& model) {
  if (!(t >= 0.0) || !(t < 1.0)) {
    std::ostringstream msg;
    msg << "cost_rate: requires t in [0, 1), got " << t;
    throw std::invalid_argument(msg.str());
  }
  const double g = model.consts.gamma_exp;
  const double m = model.consts.m_const;
  if (t == 0.0) {
    if (g < 1.0) {
      throw std::invalid_argument("cost_rate: diverges at t = 0 for H < 1/2");
    }
    return g == 1.0 ? m : 0.0;
  }
  return m * g * std::pow(t, g - 1.0) * std::pow(1.0 - t, -g - 1.0);
}

double time_change(double r, const Model& model) {
  if (!(r >= 0.0) || !(r < 1.0)) {
    std::ostringstream msg;
    msg << "time_change: requires r in [0, 1), got " << r;
    throw std::invalid_argument(msg.str());
  }
  const double sigma = model.params.sigma;
  const double l2 = model.consts.l_h * model.consts.l_h;
  const double two_minus_2h = 2.0 - 2.0 * model.params.hurst;
  return std::pow(two_minus_2h * r / (sigma * sigma * l2 * (1.0 - r)),
                  model.consts.gamma_exp);
}

double inverse_time_change(double t, const Model& model) {
  if (!(t >= 0.0)) {
    std::ostringstream msg;
    msg << "inverse_time_change: requires t >= 0, got " << t;
    throw std::invalid_argument(msg.str());
  }
  const double sigma = model.params.sigma;
  const double l2 = model.consts.l_h * model.consts.l_h;
  const double two_minus_2h = 2.0 - 2.0 * model.params.hurst;
  return 1.0 -
         1.0 / (1.0 + sigma * sigma * l2 * std::pow(t, two_minus_2h) /
                          two_minus_2h);
}

double bayes_payoff(double a, double b) {
  if (!(b > 0.0)) {
    std::ostringstream msg;
    msg << "bayes_payoff: requires b > 0, got " << b;
    throw std::invalid_argument(msg.str());
  }
  const double root_b = std::sqrt(b);
  const double z = std::abs(a) / root_b;
  return std_normal_pdf(z) / root_b - (std::abs(a) / b) * std_normal_cdf(-z);
}

double regularized_payoff(double a, double b) {
  return bayes_payoff(a, b) + std::abs(a) / (2.0 * b);
}

}  // namespace fbmseq

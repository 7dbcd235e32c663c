#pragma once

// First-order asymptotic predictions (o(1) terms dropped). Compare against
// Monte Carlo estimates across a threshold ladder, not at a single point.

#include <cmath>
#include <string>

#include "mixcpd/errors.hpp"

namespace mixcpd {

struct Prediction {
  std::string quantity;
  double value = 0.0;
  std::string regime = "first-order";
};

// m-th moment of the MS detection delay: (log A / (I + mu))^m.
inline double ms_delay_prediction(double a, double info, double mu, double m) {
  if (!(a > 1.0) || !(info > 0.0) || !(mu >= 0.0) || !(m >= 1.0))
    throw DomainError("ms_delay_prediction: requires A > 1, I > 0, mu >= 0, m >= 1");
  return std::pow(std::log(a) / (info + mu), m);
}

// MSR rule: (log A / I)^m; the prior's tail exponent does not enter.
inline double msr_delay_prediction(double a, double info, double m) { return ms_delay_prediction(a, info, 0.0, m); }

// Integrated risk D c |log c|^r.
inline double integrated_risk_prediction(double c, double r, double d) {
  if (!(c > 0.0 && c < 1.0) || !(r >= 1.0) || !(d > 0.0))
    throw DomainError("integrated_risk_prediction: requires 0 < c < 1, r >= 1, D > 0");
  return d * c * std::pow(std::fabs(std::log(c)), r);
}

// Flat-prior (mu = 0) delay moments in terms of the PFA level: (|log alpha| / I)^m.
inline double flat_prior_prediction(double alpha, double info, double m) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(info > 0.0) || !(m >= 1.0))
    throw DomainError("flat_prior_prediction: requires 0 < alpha < 1, I > 0, m >= 1");
  return std::pow(std::fabs(std::log(alpha)) / info, m);
}

}  // namespace mixcpd

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mixcpd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(e^a + e^b); logsum(-inf, b) == b exactly.
inline double log_add(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(sum_i e^{x_i}) with max-shift. A single finite element is returned unchanged.
inline double log_sum_exp(std::span<const double> xs) noexcept {
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == kNegInf || hi == kInf) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// log(sum_i e^{a_i + b_i}) without materializing the sum vector.
inline double log_sum_exp_weighted(std::span<const double> log_w, std::span<const double> xs) noexcept {
  double hi = kNegInf;
  const std::size_t n = std::min(log_w.size(), xs.size());
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, log_w[i] + xs[i]);
  if (hi == kNegInf || hi == kInf) return hi;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(log_w[i] + xs[i] - hi);
  return hi + std::log(acc);
}

// log(1 - e^x) for x <= 0.
inline double log1m_exp(double x) noexcept {
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

// 1 / (1 + e^x), computed without overflow.
inline double logistic_complement(double x) noexcept {
  if (x == kNegInf) return 1.0;
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

}  // namespace mixcpd

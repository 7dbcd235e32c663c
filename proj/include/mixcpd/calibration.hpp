#pragma once

// Threshold selection: PFA-constrained thresholds for MS and MSR, the
// mixture constant D_{mu,r}, and the Bayes-cost threshold equation
//   r D A (log A)^{r-1} = rhs / c.

#include <cmath>
#include <map>
#include <span>
#include <string>

#include "mixcpd/errors.hpp"
#include "mixcpd/measures.hpp"

namespace mixcpd {

enum class ThresholdKind { kMsPfa, kMsrPfa, kBayesCost, kMsrBayesCost, kFixed };

inline std::string to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::kMsPfa: return "ms_pfa";
    case ThresholdKind::kMsrPfa: return "msr_pfa";
    case ThresholdKind::kBayesCost: return "bayes_cost";
    case ThresholdKind::kMsrBayesCost: return "msr_bayes_cost";
    case ThresholdKind::kFixed: return "fixed";
  }
  return {};
}

struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::kFixed;
  std::map<std::string, double> inputs;  // alpha, q, omega, b, nu_bar, c, r, D ...
  double log_threshold = 0.0;
  std::string provenance;

  double threshold() const { return std::exp(log_threshold); }
};

// A = (1 - alpha) / alpha guarantees PFA(T_A) <= alpha for the MS rule.
inline ThresholdSpec ms_threshold(double alpha, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw DomainError("ms_threshold: q must lie in [0,1)");
  if (!(alpha > 0.0 && alpha < 1.0 - q)) throw DomainError("ms_threshold: alpha must satisfy 0 < alpha < 1 - q");
  ThresholdSpec t;
  t.kind = ThresholdKind::kMsPfa;
  t.inputs = {{"alpha", alpha}, {"q", q}};
  t.log_threshold = std::log1p(-alpha) - std::log(alpha);
  t.provenance = "MS PFA bound: PFA <= 1/(1+A), A = (1-alpha)/alpha";
  return t;
}

// A = (omega b + nu_bar) / alpha guarantees PFA <= alpha for the MSR rule.
inline ThresholdSpec msr_threshold(double alpha, double omega, const ChangePrior& prior) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("msr_threshold: alpha must lie in (0,1)");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw DomainError("msr_threshold: omega must be finite and >= 0");
  if (!std::isfinite(prior.mean())) throw DomainError("msr_threshold: prior mean is infinite");
  const double b = prior.b();
  const double numerator = omega * b + prior.mean();
  if (!(numerator > 0.0)) throw DomainError("msr_threshold: omega*b + nu_bar must be positive");
  ThresholdSpec t;
  t.kind = ThresholdKind::kMsrPfa;
  t.inputs = {{"alpha", alpha}, {"omega", omega}, {"b", b}, {"nu_bar", prior.mean()}};
  t.log_threshold = std::log(numerator) - std::log(alpha);
  t.provenance = "MSR PFA bound: PFA <= (omega b + nu_bar)/A, A = (omega b + nu_bar)/alpha";
  return t;
}

// D_{mu,r} = sum_i w_i (I_i + mu)^{-r}.
inline double d_constant(const MixingGrid& grid, std::span<const double> info, double mu, double r) {
  if (info.size() != grid.size()) throw DomainError("d_constant: one information number per atom required");
  if (!(r >= 1.0)) throw DomainError("d_constant: r must be >= 1");
  if (!(mu >= 0.0)) throw DomainError("d_constant: mu must be >= 0");
  double d = 0.0;
  for (std::size_t i = 0; i < info.size(); ++i) {
    if (!(info[i] > 0.0)) throw DomainError("d_constant: information numbers must be positive");
    d += grid.weight(i) * std::pow(info[i] + mu, -r);
  }
  return d;
}

namespace detail {

// Root in log A in [1, 100] of r D A (log A)^{r-1} = rhs / c, by bisection.
inline double solve_bayes_log_threshold(double c, double r, double d, double rhs) {
  if (!(c > 0.0)) throw DomainError("bayes_threshold: cost c must be positive");
  if (!(r >= 1.0)) throw DomainError("bayes_threshold: r must be >= 1");
  if (!(d > 0.0)) throw DomainError("bayes_threshold: D must be positive");
  if (!(rhs > 0.0)) throw DomainError("bayes_threshold: right-hand side must be positive");
  // Compare in logs: log r + log D + y + (r-1) log y  vs  log(rhs/c).
  const double target = std::log(rhs) - std::log(c);
  auto f = [&](double y) { return std::log(r) + std::log(d) + y + (r - 1.0) * std::log(y) - target; };
  double lo = 1.0;
  double hi = 100.0;
  if (!(f(lo) < 0.0) || !(f(hi) > 0.0))
    throw DomainError("bayes_threshold: no root with log A in [1, 100]; cost c out of range");
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::fabs(f(lo)) <= std::fabs(f(hi)) ? lo : hi;
}

}  // namespace detail

// Minimizer of G(A) = 1/A + c D (log A)^r for the MS rule.
inline ThresholdSpec bayes_threshold(double c, double r, double d) {
  ThresholdSpec t;
  t.kind = ThresholdKind::kBayesCost;
  t.inputs = {{"c", c}, {"r", r}, {"D", d}};
  t.log_threshold = detail::solve_bayes_log_threshold(c, r, d, 1.0);
  t.provenance = "Bayes cost: r D A (log A)^(r-1) = 1/c";
  return t;
}

// MSR variant with right-hand side (omega b + nu_bar) / c, D = D_{0,r}.
inline ThresholdSpec msr_bayes_threshold(double c, double r, double d, double omega, const ChangePrior& prior) {
  if (!std::isfinite(prior.mean())) throw DomainError("msr_bayes_threshold: prior mean is infinite");
  const double rhs = omega * prior.b() + prior.mean();
  ThresholdSpec t;
  t.kind = ThresholdKind::kMsrBayesCost;
  t.inputs = {{"c", c}, {"r", r}, {"D", d}, {"omega", omega}, {"b", prior.b()}, {"nu_bar", prior.mean()}};
  t.log_threshold = detail::solve_bayes_log_threshold(c, r, d, rhs);
  t.provenance = "MSR Bayes cost: r D A (log A)^(r-1) = (omega b + nu_bar)/c";
  return t;
}

inline ThresholdSpec fixed_threshold(double log_threshold) {
  if (!std::isfinite(log_threshold)) throw DomainError("fixed threshold: log threshold must be finite");
  ThresholdSpec t;
  t.kind = ThresholdKind::kFixed;
  t.inputs = {{"log_threshold", log_threshold}};
  t.log_threshold = log_threshold;
  t.provenance = "fixed log threshold";
  return t;
}

// Approximate integrated risk G_{c,r}(A) = 1/A + c D (log A)^r.
inline double bayes_cost_objective(double a, double c, double r, double d) {
  return 1.0 / a + c * d * std::pow(std::log(a), r);
}

}  // namespace mixcpd

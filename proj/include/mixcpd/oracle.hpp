#pragma once

// Direct double-sum evaluation of the mixture statistics, O(n^2 |grid|).
// Reference implementation for cross-checking the recursions; refuses n > 50.

#include <cstdint>
#include <span>
#include <vector>

#include "mixcpd/errors.hpp"
#include "mixcpd/logmath.hpp"
#include "mixcpd/measures.hpp"

namespace mixcpd {

using IncrementMatrix = std::vector<std::vector<double>>;  // [time step][atom]

inline constexpr std::int64_t kBruteForceMaxN = 50;

// log Lambda^W_{k,n} = log sum_i w_i exp(sum_{j=k+1}^{n} l_j(theta_i)).
inline double brute_force_log_mixture_lr(const IncrementMatrix& incs, const MixingGrid& grid, std::int64_t k,
                                         std::int64_t n) {
  std::vector<double> terms(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double llr = 0.0;
    for (std::int64_t j = k + 1; j <= n; ++j) llr += incs[static_cast<std::size_t>(j - 1)][i];
    terms[i] = grid.log_weights()[i] + llr;
  }
  return log_sum_exp(terms);
}

namespace detail {
inline void check_brute_force_n(const IncrementMatrix& incs, std::int64_t n) {
  if (n < 0) throw DomainError("brute force: n must be >= 0");
  if (n > kBruteForceMaxN) throw DomainError("brute force: n > 50 refused");
  if (static_cast<std::size_t>(n) > incs.size()) throw DomainError("brute force: fewer increments than n");
}
}  // namespace detail

// log S_n^W = log[q Lambda_{0,n} + sum_{k<n} pi_k Lambda_{k,n}] - log P(nu >= n).
inline double brute_force_ms(const IncrementMatrix& incs, const ChangePrior& prior, const MixingGrid& grid,
                             std::int64_t n) {
  detail::check_brute_force_n(incs, n);
  if (n == 0) return std::log(prior.q()) - std::log1p(-prior.q());
  std::vector<double> terms;
  terms.push_back(std::log(prior.q()) + brute_force_log_mixture_lr(incs, grid, 0, n));
  for (std::int64_t k = 0; k < n; ++k)
    terms.push_back(prior.log_pmf(k) + brute_force_log_mixture_lr(incs, grid, k, n));
  return log_sum_exp(terms) - prior.log_tail(n);
}

// log R_n^W = log[omega Lambda_{0,n} + sum_{k<n} Lambda_{k,n}].
inline double brute_force_msr(const IncrementMatrix& incs, const MixingGrid& grid, double omega, std::int64_t n) {
  detail::check_brute_force_n(incs, n);
  if (n == 0) return std::log(omega);
  std::vector<double> terms;
  terms.push_back(std::log(omega) + brute_force_log_mixture_lr(incs, grid, 0, n));
  for (std::int64_t k = 0; k < n; ++k) terms.push_back(brute_force_log_mixture_lr(incs, grid, k, n));
  return log_sum_exp(terms);
}

}  // namespace mixcpd

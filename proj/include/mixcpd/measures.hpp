#pragma once

// Change-point priors and discrete mixing measures over the post-change
// parameter space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mixcpd/errors.hpp"
#include "mixcpd/logmath.hpp"

namespace mixcpd {

namespace detail {

// Hurwitz zeta(s, a) = sum_{k>=0} (k + a)^{-s} for s > 1, a > 0, by
// Euler-Maclaurin summation shifted to a + N >= 16.
inline double hurwitz_zeta(double s, double a) {
  constexpr double kBernoulli[] = {1.0 / 6.0,    -1.0 / 30.0,      1.0 / 42.0, -1.0 / 30.0,
                                   5.0 / 66.0,   -691.0 / 2730.0,  7.0 / 6.0};
  double head = 0.0;
  double x = a;
  while (x < 16.0) {
    head += std::pow(x, -s);
    x += 1.0;
  }
  double tail = std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
  // term_j = B_{2j}/(2j)! * s(s+1)...(s+2j-2) * x^{-s-2j+1}
  double rising = s;          // s(s+1)...(s+2j-2)
  double factorial = 2.0;     // (2j)!
  double power = std::pow(x, -s - 1.0);
  for (int j = 1; j <= 7; ++j) {
    tail += kBernoulli[j - 1] / factorial * rising * power;
    rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
    factorial *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
    power /= x * x;
  }
  return head + tail;
}

}  // namespace detail

enum class PriorFamily { kGeometric, kHeavyTail, kPointMass };

// Distribution of the change point nu. Mass q sits on nu <= -1; the rest is a
// pmf pi_k on k >= 0 with tail Pi(n) = P(nu >= n) (so Pi(0) = 1 - q).
// Immutable after construction.
class ChangePrior {
 public:
  // pi_k = (1-q) rho (1-rho)^k.
  static ChangePrior geometric(double rho, double q) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("geometric prior: rho must lie in (0,1)");
    check_q(q);
    ChangePrior p(PriorFamily::kGeometric, q);
    p.param_ = rho;
    p.log_rho_ = std::log(rho);
    p.log1m_rho_ = std::log1p(-rho);
    p.mu_ = -p.log1m_rho_;
    p.mean_ = (1.0 - q) * (1.0 - rho) / rho;
    return p;
  }

  // pi_k proportional to (k+2)^{-c}; zero exponential tail rate.
  static ChangePrior heavy_tail(double c_exponent, double q) {
    if (!(c_exponent > 1.0)) throw DomainError("heavy-tail prior: c_exponent must exceed 1");
    check_q(q);
    ChangePrior p(PriorFamily::kHeavyTail, q);
    p.param_ = c_exponent;
    p.log_norm_ = std::log(detail::hurwitz_zeta(c_exponent, 2.0));
    p.mu_ = 0.0;
    if (c_exponent > 2.0) {
      // sum_k k (k+2)^{-c} = zeta(c-1, 2) - 2 zeta(c, 2)
      const double z = detail::hurwitz_zeta(c_exponent, 2.0);
      p.mean_ = (1.0 - q) * (detail::hurwitz_zeta(c_exponent - 1.0, 2.0) - 2.0 * z) / z;
    } else {
      p.mean_ = kInf;
    }
    return p;
  }

  // All of the nonnegative mass at nu = k0.
  static ChangePrior point_mass(std::int64_t k0, double q) {
    if (k0 < 0) throw DomainError("point-mass prior: location must be >= 0");
    check_q(q);
    ChangePrior p(PriorFamily::kPointMass, q);
    p.param_ = static_cast<double>(k0);
    p.location_ = k0;
    p.mu_ = kInf;
    p.mean_ = (1.0 - q) * static_cast<double>(k0);
    return p;
  }

  PriorFamily family() const noexcept { return family_; }
  // rho (geometric), c_exponent (heavy tail) or the location (point mass).
  double parameter() const noexcept { return param_; }
  double q() const noexcept { return q_; }
  double mu() const noexcept { return mu_; }
  // nu-bar = sum_{k>=0} k pi_k (infinite for heavy tails with c <= 2).
  double mean() const noexcept { return mean_; }
  // b = sum_{k>=1} pi_k = Pi(1).
  double b() const { return tail(1); }

  double log_pmf(std::int64_t k) const {
    if (k < 0) return kNegInf;
    switch (family_) {
      case PriorFamily::kGeometric:
        return log1m_q_ + log_rho_ + static_cast<double>(k) * log1m_rho_;
      case PriorFamily::kHeavyTail:
        return log1m_q_ - param_ * std::log(static_cast<double>(k) + 2.0) - log_norm_;
      case PriorFamily::kPointMass:
        return k == location_ ? log1m_q_ : kNegInf;
    }
    return kNegInf;
  }

  // log Pi(n) = log P(nu >= n).
  double log_tail(std::int64_t n) const {
    if (n <= 0) return log1m_q_;
    switch (family_) {
      case PriorFamily::kGeometric:
        return log1m_q_ + static_cast<double>(n) * log1m_rho_;
      case PriorFamily::kHeavyTail:
        return log1m_q_ + std::log(detail::hurwitz_zeta(param_, static_cast<double>(n) + 2.0)) - log_norm_;
      case PriorFamily::kPointMass:
        return n <= location_ ? log1m_q_ : kNegInf;
    }
    return kNegInf;
  }

  double pmf(std::int64_t k) const { return std::exp(log_pmf(k)); }
  double tail(std::int64_t n) const { return std::exp(log_tail(n)); }

  // Draws nu from the prior conditioned on nu >= 0.
  template <class Rng>
  std::int64_t sample_nonnegative(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    const double log_u = std::log(u);
    if (family_ == PriorFamily::kPointMass) return location_;
    if (family_ == PriorFamily::kGeometric) {
      // P(nu >= k | nu >= 0) = (1-rho)^k; nu = floor(log u / log(1-rho)).
      return static_cast<std::int64_t>(std::floor(log_u / log1m_rho_));
    }
    // Smallest k with P(nu > k | nu >= 0) < u.
    auto survives = [&](std::int64_t k) { return log_tail(k + 1) - log1m_q_ >= log_u; };
    std::int64_t lo = 0;
    if (!survives(lo)) return 0;
    std::int64_t hi = 1;
    while (survives(hi)) {
      lo = hi;
      hi *= 2;
    }
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      (survives(mid) ? lo : hi) = mid;
    }
    return hi;
  }

  std::string describe() const {
    switch (family_) {
      case PriorFamily::kGeometric: return "geometric(rho=" + std::to_string(param_) + ")";
      case PriorFamily::kHeavyTail: return "heavy_tail(c=" + std::to_string(param_) + ")";
      case PriorFamily::kPointMass: return "point_mass(k=" + std::to_string(location_) + ")";
    }
    return {};
  }

 private:
  ChangePrior(PriorFamily family, double q) : family_(family), q_(q), log1m_q_(std::log1p(-q)) {}

  static void check_q(double q) {
    if (!(q >= 0.0 && q < 1.0)) throw DomainError("prior: q must lie in [0,1)");
  }

  PriorFamily family_;
  double q_;
  double log1m_q_;
  double param_ = 0.0;
  double mu_ = 0.0;
  double mean_ = 0.0;
  double log_rho_ = 0.0;
  double log1m_rho_ = 0.0;
  double log_norm_ = 0.0;
  std::int64_t location_ = 0;
};

// Partial CP2 sum sum_{k<=horizon} pi_k |log pi_k|^r. Finiteness of the full
// series cannot be established numerically; `consistent` only records that the
// summands are decreasing at the horizon and below 1e-8.
struct Cp2Report {
  double partial_sum = 0.0;
  double last_summand = 0.0;
  bool consistent = false;
};

inline Cp2Report check_cp2_partial(const ChangePrior& prior, double r, std::int64_t horizon) {
  if (horizon < 1) throw DomainError("check_cp2_partial: horizon must be >= 1");
  if (!(r >= 1.0)) throw DomainError("check_cp2_partial: r must be >= 1");
  auto summand = [&](std::int64_t k) {
    const double lp = prior.log_pmf(k);
    if (lp == kNegInf || lp == 0.0) return 0.0;
    return std::exp(lp + r * std::log(std::fabs(lp)));
  };
  Cp2Report rep;
  double prev = 0.0;
  for (std::int64_t k = 0; k <= horizon; ++k) {
    const double s = summand(k);
    rep.partial_sum += s;
    prev = rep.last_summand;
    rep.last_summand = s;
  }
  rep.consistent = rep.last_summand < 1e-8 && rep.last_summand <= prev;
  return rep;
}

using Atom = std::vector<double>;

// Discrete mixing measure W: atoms with strictly positive weights summing to 1.
class MixingGrid {
 public:
  MixingGrid() = default;

  // Weights need only be positive; they are normalized here.
  MixingGrid(std::vector<Atom> atoms, std::span<const double> weights) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw DomainError("mixing grid: at least one atom required");
    if (weights.size() != atoms_.size()) throw DomainError("mixing grid: one weight per atom required");
    const std::size_t dim = atoms_.front().size();
    if (dim == 0) throw DomainError("mixing grid: atoms must have dimension >= 1");
    for (const auto& a : atoms_) {
      if (a.size() != dim) throw DomainError("mixing grid: atoms differ in dimension");
      for (double v : a)
        if (!std::isfinite(v)) throw DomainError("mixing grid: non-finite atom coordinate");
    }
    log_weights_.reserve(weights.size());
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("mixing grid: weights must be positive");
      log_weights_.push_back(std::log(w));
    }
    const double log_total = log_sum_exp(log_weights_);
    for (double& lw : log_weights_) lw -= log_total;

    std::vector<Atom> sorted = atoms_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DomainError("mixing grid: atoms must be pairwise distinct");
  }

  static MixingGrid equal_weights(std::vector<Atom> atoms) {
    const std::vector<double> w(atoms.size(), 1.0);
    return MixingGrid(std::move(atoms), w);
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t dimension() const noexcept { return atoms_.empty() ? 0 : atoms_.front().size(); }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const Atom& atom(std::size_t i) const { return atoms_.at(i); }
  std::span<const double> log_weights() const noexcept { return log_weights_; }
  double weight(std::size_t i) const { return std::exp(log_weights_.at(i)); }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> log_weights_;
};

// Tensor-product grid with equal weights. A coordinate with count 1 places its
// single atom at the midpoint of [lower, upper], which may be degenerate.
inline MixingGrid uniform_grid(std::span<const double> lower, std::span<const double> upper,
                               std::span<const int> counts) {
  const std::size_t d = lower.size();
  if (d == 0 || upper.size() != d || counts.size() != d)
    throw DomainError("uniform_grid: lower/upper/counts dimension mismatch");
  std::vector<std::vector<double>> axes(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (counts[j] < 1) throw DomainError("uniform_grid: counts must be >= 1");
    if (!(lower[j] <= upper[j]) || (counts[j] > 1 && !(lower[j] < upper[j])))
      throw DomainError("uniform_grid: lower must be < upper");
    if (counts[j] == 1) {
      axes[j].push_back(0.5 * (lower[j] + upper[j]));
      continue;
    }
    const double step = (upper[j] - lower[j]) / (counts[j] - 1);
    for (int i = 0; i < counts[j]; ++i)
      axes[j].push_back(i + 1 == counts[j] ? upper[j] : lower[j] + step * i);
  }
  std::vector<Atom> atoms{Atom{}};
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<Atom> next;
    next.reserve(atoms.size() * axes[j].size());
    for (const auto& prefix : atoms)
      for (double v : axes[j]) {
        Atom a = prefix;
        a.push_back(v);
        next.push_back(std::move(a));
      }
    atoms = std::move(next);
  }
  return MixingGrid::equal_weights(std::move(atoms));
}

}  // namespace mixcpd

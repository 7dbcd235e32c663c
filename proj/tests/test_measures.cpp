#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mixcpd/measures.hpp"

using namespace mixcpd;

namespace {

// Compensated sum of pi_k for k in [from, to].
double kahan_pmf_sum(const ChangePrior& p, std::int64_t from, std::int64_t to) {
  double sum = 0.0, comp = 0.0;
  for (std::int64_t k = from; k <= to; ++k) {
    const double y = p.pmf(k) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

// sum_{k>=m} (k+2)^{-c} by the integral plus the first two Euler-Maclaurin
// corrections; independent of the library's zeta routine.
double polynomial_tail_remainder(double c, std::int64_t m) {
  const double x = static_cast<double>(m) + 2.0;
  return std::pow(x, 1.0 - c) / (c - 1.0) + 0.5 * std::pow(x, -c) + c / 12.0 * std::pow(x, -c - 1.0);
}

}  // namespace

TEST(HurwitzZeta, KnownValues) {
  const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
  EXPECT_NEAR(detail::hurwitz_zeta(2.0, 1.0), pi2_6, 1e-14);
  EXPECT_NEAR(detail::hurwitz_zeta(2.0, 2.0), pi2_6 - 1.0, 1e-14);
  EXPECT_NEAR(detail::hurwitz_zeta(3.0, 1.0), 1.2020569031595942, 1e-14);
  EXPECT_NEAR(detail::hurwitz_zeta(4.0, 1.0), std::pow(std::numbers::pi, 4) / 90.0, 1e-14);
}

TEST(GeometricPrior, SpecExamples) {
  const auto p = ChangePrior::geometric(0.1, 0.0);
  EXPECT_DOUBLE_EQ(p.tail(0), 1.0);
  EXPECT_NEAR(p.pmf(0), 0.1, 1e-15);
  EXPECT_NEAR(p.mu(), 0.105360516, 1e-9);
  EXPECT_NEAR(p.mean(), 9.0, 1e-12);
  EXPECT_NEAR(p.b(), 0.9, 1e-15);
}

TEST(GeometricPrior, DomainErrors) {
  EXPECT_THROW(ChangePrior::geometric(0.0, 0.0), DomainError);
  EXPECT_THROW(ChangePrior::geometric(1.0, 0.0), DomainError);
  EXPECT_THROW(ChangePrior::geometric(0.5, 1.0), DomainError);
  EXPECT_THROW(ChangePrior::geometric(0.5, -0.1), DomainError);
}

TEST(GeometricPrior, TailExponentConverges) {
  const auto p = ChangePrior::geometric(0.1, 0.0);
  const double n = 1e4;
  EXPECT_LT(std::fabs(std::fabs(p.log_tail(10000)) / n - p.mu()) / p.mu(), 1e-6);

  // With q > 0 the deviation is log(1-q)/n and shrinks along the ladder.
  const auto pq = ChangePrior::geometric(0.1, 0.3);
  double prev = 1e300;
  for (std::int64_t m : {100, 1000, 10000}) {
    const double dev = std::fabs(std::fabs(pq.log_tail(m)) / static_cast<double>(m) - pq.mu());
    EXPECT_LT(dev, prev);
    prev = dev;
  }
}

TEST(HeavyTailPrior, SpecExamples) {
  const auto p = ChangePrior::heavy_tail(2.0, 0.0);
  EXPECT_EQ(p.mu(), 0.0);
  EXPECT_NEAR(p.tail(0), 1.0, 1e-15);
  EXPECT_NEAR(p.pmf(0) / p.pmf(1), 2.25, 1e-12);
  EXPECT_TRUE(std::isinf(p.mean()));
  EXPECT_THROW(ChangePrior::heavy_tail(1.0, 0.0), DomainError);
}

TEST(HeavyTailPrior, FiniteMeanMatchesDirectSum) {
  const auto p = ChangePrior::heavy_tail(3.5, 0.2);
  double direct = 0.0;
  for (std::int64_t k = 1; k <= 1000000; ++k) direct += static_cast<double>(k) * p.pmf(k);
  // sum_{k>M} k (k+2)^{-3.5} ~ integral of x^{-2.5}
  const double z = detail::hurwitz_zeta(3.5, 2.0);
  direct += 0.8 / z * std::pow(1000002.5, -1.5) / 1.5;
  EXPECT_NEAR(p.mean(), direct, 1e-9);
}

class PriorTailInvariants : public ::testing::TestWithParam<int> {};

TEST_P(PriorTailInvariants, ClosedFormMatchesSummation) {
  const int which = GetParam();
  const ChangePrior p = which == 0   ? ChangePrior::geometric(1e-5, 0.0)
                        : which == 1 ? ChangePrior::geometric(0.3, 0.25)
                        : which == 2 ? ChangePrior::heavy_tail(2.0, 0.0)
                                     : ChangePrior::heavy_tail(3.0, 0.4);
  EXPECT_NEAR(p.q() + p.tail(0), 1.0, 1e-12);
  EXPECT_NEAR(p.b(), p.tail(1), 0.0);
  for (std::int64_t n : {0, 1, 7, 100}) {
    const std::int64_t last = n + 1000000;
    double remainder = 0.0;
    if (p.family() == PriorFamily::kGeometric) {
      remainder = (1.0 - p.q()) * std::pow(1.0 - p.parameter(), static_cast<double>(last + 1));
    } else {
      const double z = detail::hurwitz_zeta(p.parameter(), 2.0);
      remainder = (1.0 - p.q()) / z * polynomial_tail_remainder(p.parameter(), last + 1);
    }
    EXPECT_NEAR(p.tail(n), kahan_pmf_sum(p, n, last) + remainder, 1e-10) << "n=" << n;
  }
  double prev = p.tail(0);
  for (std::int64_t n = 0; n < 200; ++n) {
    const double next = p.tail(n + 1);
    EXPECT_LE(next, prev);
    EXPECT_NEAR(p.tail(n) - next, p.pmf(n), 1e-15);
    prev = next;
  }
}

INSTANTIATE_TEST_SUITE_P(Families, PriorTailInvariants, ::testing::Values(0, 1, 2, 3));

TEST(PointMassPrior, TailAndMean) {
  const auto p = ChangePrior::point_mass(3, 0.0);
  EXPECT_EQ(p.pmf(3), 1.0);
  EXPECT_EQ(p.pmf(2), 0.0);
  EXPECT_EQ(p.tail(3), 1.0);
  EXPECT_EQ(p.tail(4), 0.0);
  EXPECT_EQ(p.mean(), 3.0);
}

TEST(Cp2Check, SpecExamples) {
  const auto geo = check_cp2_partial(ChangePrior::geometric(0.1, 0.0), 1.0, 10000);
  EXPECT_LT(geo.last_summand, 1e-8);
  EXPECT_TRUE(geo.consistent);

  const auto degenerate = check_cp2_partial(ChangePrior::point_mass(0, 0.0), 1.0, 100);
  EXPECT_EQ(degenerate.partial_sum, 0.0);

  const auto heavy = check_cp2_partial(ChangePrior::heavy_tail(2.0, 0.0), 2.0, 1000000);
  EXPECT_TRUE(std::isfinite(heavy.partial_sum));
  EXPECT_GT(heavy.partial_sum, 0.0);
  EXPECT_TRUE(heavy.consistent);

  EXPECT_THROW(check_cp2_partial(ChangePrior::geometric(0.1, 0.0), 1.0, 0), DomainError);
}

TEST(PriorSampling, GeometricMeanAndHeavyTailHead) {
  const auto geo = ChangePrior::geometric(0.1, 0.0);
  const auto heavy = ChangePrior::heavy_tail(2.5, 0.3);
  std::mt19937_64 rng(7);
  const int n = 200000;
  double sum = 0.0;
  int zeros = 0, ones = 0;
  for (int i = 0; i < n; ++i) {
    sum += static_cast<double>(geo.sample_nonnegative(rng));
    const auto k = heavy.sample_nonnegative(rng);
    zeros += k == 0;
    ones += k == 1;
  }
  // sd of the geometric is sqrt(90)
  EXPECT_NEAR(sum / n, 9.0, 4.0 * std::sqrt(90.0 / n));
  const double p0 = heavy.pmf(0) / 0.7;
  const double p1 = heavy.pmf(1) / 0.7;
  EXPECT_NEAR(static_cast<double>(zeros) / n, p0, 4.0 * std::sqrt(p0 * (1 - p0) / n));
  EXPECT_NEAR(static_cast<double>(ones) / n, p1, 4.0 * std::sqrt(p1 * (1 - p1) / n));
}

TEST(UniformGrid, SpecExamples) {
  const double lo1[] = {1.0}, hi1[] = {5.0};
  const int c1[] = {5};
  const auto g1 = uniform_grid(lo1, hi1, c1);
  ASSERT_EQ(g1.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(g1.atom(i)[0], 1.0 + i);
    EXPECT_NEAR(g1.weight(i), 0.2, 1e-15);
  }

  const double lo2[] = {0.5, 0.5}, hi2[] = {1.5, 1.5};
  const int c2[] = {2, 2};
  const auto g2 = uniform_grid(lo2, hi2, c2);
  ASSERT_EQ(g2.size(), 4u);
  EXPECT_EQ(g2.dimension(), 2u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g2.weight(i), 0.25, 1e-15);

  const double one[] = {1.0};
  const int c3[] = {1};
  const auto g3 = uniform_grid(one, one, c3);
  ASSERT_EQ(g3.size(), 1u);
  EXPECT_EQ(g3.atom(0)[0], 1.0);
  EXPECT_EQ(g3.log_weights()[0], 0.0);
}

TEST(UniformGrid, Errors) {
  const double lo[] = {1.0}, hi[] = {5.0};
  const double hi2[] = {5.0, 6.0};
  const int c[] = {5};
  const int zero[] = {0};
  EXPECT_THROW(uniform_grid(lo, hi2, c), DomainError);
  EXPECT_THROW(uniform_grid(lo, hi, zero), DomainError);
  EXPECT_THROW(uniform_grid(hi, lo, c), DomainError);
}

TEST(MixingGrid, NormalizesAndValidates) {
  const double w[] = {2.0, 6.0};
  MixingGrid g({{0.5}, {1.0}}, w);
  EXPECT_NEAR(g.weight(0), 0.25, 1e-15);
  EXPECT_NEAR(g.weight(0) + g.weight(1), 1.0, 1e-12);

  const double bad[] = {1.0, 0.0};
  EXPECT_THROW(MixingGrid({{0.5}, {1.0}}, bad), DomainError);
  const double ok[] = {1.0, 1.0};
  EXPECT_THROW(MixingGrid({{0.5}, {0.5}}, ok), DomainError);
  EXPECT_THROW(MixingGrid({{0.5}, {0.5, 1.0}}, ok), DomainError);
}

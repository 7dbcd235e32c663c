#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mixcpd/models.hpp"
#include "mixcpd/montecarlo.hpp"

using namespace mixcpd;

namespace {

MixingGrid scalar_grid(std::vector<double> values) {
  std::vector<Atom> atoms;
  for (double v : values) atoms.push_back({v});
  return MixingGrid::equal_weights(std::move(atoms));
}

MultichannelArSpec sine_channels(std::vector<double> beta, int channels, double freq = 0.5) {
  std::vector<ArChannel> ch;
  for (int i = 0; i < channels; ++i) ch.push_back({beta, {1.0, freq, 0.0}});
  return MultichannelArSpec(ch);
}

MultichannelArSpec one_channel(std::vector<double> beta, HarmonicSignal signal = {}) {
  return MultichannelArSpec(std::vector<ArChannel>{ArChannel{std::move(beta), signal}});
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Full-path forward recursion in linear scale, returning p_theta(X^n) for n = 0..N.
std::vector<double> linear_forward_marginals(const HmmParams& p, const ObservationSeq& obs) {
  double big = p.gamma / (p.beta + p.gamma);  // P(X^n, state 2)
  double small = 1.0 - big;                   // P(X^n, state 1)
  std::vector<double> out{1.0};
  for (std::size_t n = 0; n < obs.size(); ++n) {
    const double x = obs.row(n)[0];
    const double nb = (big * (1.0 - p.gamma) + small * p.beta) * normal_pdf(x - p.mean2);
    const double ns = (big * p.gamma + small * (1.0 - p.beta)) * normal_pdf(x - p.mean1);
    big = nb;
    small = ns;
    out.push_back(big + small);
  }
  return out;
}

}  // namespace

TEST(GaussianIid, IncrementExamples) {
  GaussianIidModel m(scalar_grid({1.0, 0.0, 2.0}));
  std::vector<double> inc(3);
  const double x0[] = {0.0};
  m.step(x0, inc);
  EXPECT_DOUBLE_EQ(inc[0], -0.5);
  EXPECT_DOUBLE_EQ(inc[1], 0.0);
  const double x1[] = {3.7};
  m.step(x1, inc);
  EXPECT_DOUBLE_EQ(inc[1], 0.0);
  const double t1[] = {1.0}, t2[] = {2.0};
  EXPECT_DOUBLE_EQ(m.info_number(t1), 0.5);
  EXPECT_DOUBLE_EQ(m.info_number(t2), 2.0);
}

TEST(GaussianIid, RejectsVectorAtoms) {
  EXPECT_THROW(GaussianIidModel(MixingGrid::equal_weights({{1.0, 2.0}})), DomainError);
}

TEST(SamplePath, GaussianMeans) {
  GaussianIidModel m(scalar_grid({1.0}));
  Rng rng(11);
  const std::int64_t n = 100000;
  const auto pre = sample_path(m, kNoChange, std::size_t{0}, n, rng);
  const auto post = sample_path(m, 0, std::size_t{0}, n, rng);
  double s_pre = 0.0, s_post = 0.0;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    s_pre += pre.row(i)[0];
    s_post += post.row(i)[0];
  }
  const double band = 3.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(s_pre / n, 0.0, band);
  EXPECT_NEAR(s_post / n, 1.0, band);
}

TEST(SamplePath, ChangePointPlacement) {
  // X_1..X_nu pre-change, X_{nu+1} first post-change observation.
  GaussianIidModel m(scalar_grid({50.0}));
  Rng rng(3);
  const auto path = sample_path(m, 4, std::size_t{0}, 8, rng);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(path.row(i)[0], 10.0);
  for (std::size_t i = 4; i < 8; ++i) EXPECT_GT(path.row(i)[0], 40.0);
}

TEST(SamplePath, DeterministicStreams) {
  MultichannelArModel m(sine_channels({0.5}, 2), MixingGrid::equal_weights({{1.0, 1.0}, {2.0, 0.5}}));
  Rng a(42), b(42);
  const auto pa = sample_path(m, 10, std::size_t{1}, 200, a);
  const auto pb = sample_path(m, 10, std::size_t{1}, 200, b);
  EXPECT_EQ(pa.values, pb.values);
  const auto ia = llr_increments(m, pa);
  const auto ib = llr_increments(m, pa);
  EXPECT_EQ(ia, ib);
}

TEST(MultichannelAr, IncrementExamples) {
  // beta = 0, S = 1, theta = 1, x = 1: residuals equal raw values.
  MultichannelArModel flat(one_channel({}, HarmonicSignal::constant(1.0)), scalar_grid({1.0}));
  std::vector<double> inc(1);
  const double one[] = {1.0};
  flat.step(one, inc);
  EXPECT_NEAR(inc[0], 0.5, 1e-15);

  // AR(1) beta = 0.5 with zero initial history: X~_2 = X_2 - 0.5 X_1,
  // S~_2 = S_2 - 0.5 S_1 = 0.5 for a constant unit signal.
  MultichannelArModel ar(one_channel({0.5}, HarmonicSignal::constant(1.0)), scalar_grid({2.0}));
  const double x1[] = {0.8}, x2[] = {-0.3};
  ar.step(x1, inc);
  const double s1 = 1.0 - 0.5 * 1.0;  // S~_1 uses S_0 since p_1 = 1
  EXPECT_NEAR(inc[0], 2.0 * s1 * 0.8 - 2.0 * s1 * s1, 1e-12);
  ar.step(x2, inc);
  const double xr = -0.3 - 0.5 * 0.8;
  EXPECT_NEAR(inc[0], 2.0 * 0.5 * xr - 2.0 * 0.25, 1e-12);
}

TEST(MultichannelAr, StabilityCheck) {
  EXPECT_THROW(one_channel({1.0}), DomainError);
  EXPECT_THROW(one_channel({1.2, -0.1}), DomainError);
  EXPECT_NO_THROW(one_channel({0.5, 0.3}));
  EXPECT_NO_THROW(one_channel({-0.9}));
  const double b[] = {0.0, -0.25};  // roots +-0.5i
  for (double m : ar_root_moduli(b)) EXPECT_NEAR(m, 0.5, 1e-12);
}

TEST(MultichannelAr, RequiresPositiveMatchingAmplitudes) {
  EXPECT_THROW(MultichannelArModel(sine_channels({0.5}, 2), scalar_grid({1.0})), DomainError);
  EXPECT_THROW(MultichannelArModel(sine_channels({0.5}, 1), scalar_grid({-1.0})), DomainError);
}

TEST(QLimit, Examples) {
  const auto c = q_limit(one_channel({}, HarmonicSignal::constant(1.0)), 0, 10000);
  EXPECT_NEAR(c.value, 1.0, 1e-12);
  EXPECT_NEAR(c.spread, 0.0, 1e-12);

  const auto s = q_limit(sine_channels({}, 1), 0, 1000000);
  EXPECT_NEAR(s.value, 0.5, 1e-3);

  // Filtered sine: mean square of sin(wn) - b sin(w(n-1)) is (1 + b^2 - 2b cos w)/2.
  const auto f = q_limit(sine_channels({0.5}, 1), 0, 100000);
  EXPECT_NEAR(f.value, (1.25 - std::cos(0.5)) / 2.0, 1e-3);
  EXPECT_LT(f.spread, 1e-3);
}

TEST(MultichannelAr, InfoNumber) {
  MultichannelArModel m(sine_channels({}, 2), MixingGrid::equal_weights({{1.0, 1.0}}));
  const double th[] = {1.0, 1.0};
  EXPECT_NEAR(m.info_number(th), 0.5, 1e-3);
  const double q[] = {0.5, 0.5};
  EXPECT_NEAR(0.5 * (th[0] * th[0] * q[0] + th[1] * th[1] * q[1]), 0.5, 1e-15);
}

TEST(MultichannelAr, NoiseAutocorrelation) {
  MultichannelArModel m(one_channel({0.5}), scalar_grid({1.0}));
  Rng rng(5);
  const auto path = sample_path(m, kNoChange, std::size_t{0}, 1000000, rng);
  double s0 = 0.0, s1 = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) mean += path.row(i)[0];
  mean /= static_cast<double>(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double a = path.row(i)[0] - mean;
    s0 += a * a;
    if (i > 0) s1 += a * (path.row(i - 1)[0] - mean);
  }
  EXPECT_NEAR(s1 / s0, 0.5, 0.01);
}

TEST(Hmm2, SymmetricReduction) {
  const HmmParams pre{0.0, 1.0, 0.5, 0.5};
  Hmm2Model m(pre, MixingGrid::equal_weights({{-1.0, 2.0}, {0.5, 3.0}}));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto path = sample_path(m, 30, std::size_t{seed % 2}, 100, rng);
    const auto inc = llr_increments(m, path);
    for (std::size_t n = 0; n < path.size(); ++n) {
      const double x = path.row(n)[0];
      for (std::size_t a = 0; a < 2; ++a) {
        const auto& th = m.grid().atom(a);
        const double direct = std::log((normal_pdf(x - th[0]) + normal_pdf(x - th[1])) /
                                       (normal_pdf(x - pre.mean1) + normal_pdf(x - pre.mean2)));
        EXPECT_NEAR(inc[n][a], direct, 1e-10);
      }
    }
  }
}

TEST(Hmm2, IdenticalParametersGiveZeroIncrements) {
  const HmmParams pre{0.0, 2.0, 0.2, 0.4};
  Hmm2Model m(pre, MixingGrid::equal_weights({{0.0, 2.0}}));
  Rng rng(1);
  const auto path = sample_path(m, kNoChange, std::size_t{0}, 50, rng);
  for (const auto& row : llr_increments(m, path)) EXPECT_EQ(row[0], 0.0);
}

TEST(Hmm2, IncrementsSumToFullPathLlr) {
  const HmmParams pre{0.0, 1.5, 0.1, 0.3};
  const HmmParams post{0.5, 2.5, 0.25, 0.05};
  Hmm2Model m(pre, MixingGrid::equal_weights({{post.mean1, post.mean2, post.beta, post.gamma}}));
  Rng rng(9);
  const auto path = sample_path(m, 40, std::size_t{0}, 100, rng);
  const auto inc = llr_increments(m, path);
  const auto mp = linear_forward_marginals(post, path);
  const auto m0 = linear_forward_marginals(pre, path);
  for (std::size_t k = 0; k < 100; k += 7) {
    double acc = 0.0;
    for (std::size_t n = k + 1; n <= 100; ++n) {
      acc += inc[n - 1][0];
      const double lambda = std::log(mp[n] / m0[n] * m0[k] / mp[k]);
      ASSERT_NEAR(acc, lambda, 1e-10) << "k=" << k << " n=" << n;
    }
  }
}

TEST(Hmm2, InfoNumber) {
  const HmmParams pre{0.0, 0.0, 0.5, 0.5};
  Hmm2Model same(pre, MixingGrid::equal_weights({{0.0, 0.0}, {1.0, 1.0}}));
  const double zero[] = {0.0, 0.0};
  EXPECT_NEAR(same.info_number(zero), 0.0, 1e-8);
  // Both components at mean 1 against both at 0: KL of N(1,1) vs N(0,1).
  const double shifted[] = {1.0, 1.0};
  EXPECT_NEAR(same.info_number(shifted), 0.5, 1e-8);

  Hmm2Model asym(HmmParams{0.0, 1.0, 0.2, 0.3}, MixingGrid::equal_weights({{1.0, 2.0}}));
  const double th[] = {1.0, 2.0};
  EXPECT_THROW(asym.info_number(th), DomainError);
}

TEST(Hmm2, DomainErrors) {
  EXPECT_THROW(Hmm2Model(HmmParams{0.0, 1.0, 1.5, 0.5}, MixingGrid::equal_weights({{1.0, 2.0}})), DomainError);
  EXPECT_THROW(Hmm2Model(HmmParams{0.0, 1.0, 0.5, 0.5}, MixingGrid::equal_weights({{1.0, 2.0, -0.1, 0.5}})),
               DomainError);
  EXPECT_THROW(Hmm2Model(HmmParams{0.0, 1.0, 0.5, 0.5}, MixingGrid::equal_weights({{1.0}})), DomainError);
}

// E_inf[exp(l_n) | history] = 1, checked at a fixed step.
TEST(LlrSanity, ExpIncrementHasUnitMean) {
  const std::int64_t trials = 100000;
  GaussianIidModel g(scalar_grid({0.5, 1.0}));
  MultichannelArModel ar(sine_channels({0.5}, 2), MixingGrid::equal_weights({{0.7, 1.2}}));
  Hmm2Model sym(HmmParams{0.0, 1.0, 0.5, 0.5}, MixingGrid::equal_weights({{0.5, 1.5}}));
  Hmm2Model asym(HmmParams{0.0, 1.0, 0.2, 0.3}, MixingGrid::equal_weights({{0.5, 1.5, 0.4, 0.1}}));
  const ObservationModel* models[] = {&g, &ar, &sym, &asym};
  std::uint64_t seed = 100;
  for (const ObservationModel* m : models) {
    const auto e = estimate_exp_increment(*m, m->atom_count() - 1, 7, trials, seed++, 1);
    EXPECT_LT(std::fabs(e.point - 1.0), 3.0 * e.std_error) << m->name() << " mean " << e.point;
  }
}

// Empirical stand-in for the LLN condition: n^{-1} lambda_{0,n}(theta) -> I_theta.
TEST(LlnSurrogate, GaussianAndSymmetricHmm) {
  GaussianIidModel g(scalar_grid({1.0}));
  const double th[] = {1.0};
  const auto eg = estimate_normalized_llr(g, 0, th, 5000, 200, 21, 1);
  EXPECT_LT(std::fabs(eg.point - g.info_number(th)), 3.0 * eg.std_error);

  Hmm2Model h(HmmParams{0.0, 1.0, 0.5, 0.5}, MixingGrid::equal_weights({{1.0, 2.5}}));
  const double hth[] = {1.0, 2.5};
  const auto eh = estimate_normalized_llr(h, 0, hth, 5000, 200, 22, 1);
  EXPECT_LT(std::fabs(eh.point - h.info_number(hth)), 3.0 * eh.std_error);
}

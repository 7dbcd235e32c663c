#pragma once

// Observation models: per-step log-likelihood-ratio increments
//   l_n(theta) = log f_{theta,n}(X_n | X^{n-1}) - log g_n(X_n | X^{n-1})
// for every atom of a mixing grid, and path samplers for the no-change and
// change-at-nu measures.

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mixcpd/errors.hpp"
#include "mixcpd/logmath.hpp"
#include "mixcpd/measures.hpp"

namespace mixcpd {

using Rng = std::mt19937_64;

// nu value meaning "no change ever".
inline constexpr std::int64_t kNoChange = std::numeric_limits<std::int64_t>::max();

// Row-major sequence of observations, one row per time step.
struct ObservationSeq {
  std::size_t dim = 1;
  std::vector<double> values;

  std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  void push_row(std::span<const double> x) { values.insert(values.end(), x.begin(), x.end()); }
};

inline double log_std_normal_pdf(double z) noexcept {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  return -0.5 * z * z - kHalfLog2Pi;
}

// Generates X_1, X_2, ... under P_{nu,theta}: X_1..X_nu from the pre-change
// law, X_{nu+1}, ... from the post-change law.
class PathSampler {
 public:
  virtual ~PathSampler() = default;
  virtual void next(Rng& rng, std::span<double> x) = 0;
};

class ObservationModel {
 public:
  explicit ObservationModel(MixingGrid grid) : grid_(std::move(grid)) {}
  virtual ~ObservationModel() = default;

  const MixingGrid& grid() const noexcept { return grid_; }
  std::size_t atom_count() const noexcept { return grid_.size(); }

  virtual std::string name() const = 0;
  // Width of one observation row.
  virtual std::size_t dimension() const noexcept = 0;
  // Back to time 0 with empty history.
  virtual void reset() = 0;
  // Consumes X_n and writes l_n(theta_i) for every atom.
  virtual void step(std::span<const double> x, std::span<double> increments) = 0;
  virtual std::unique_ptr<ObservationModel> clone() const = 0;
  // theta may be any admissible parameter, not only an atom.
  virtual std::unique_ptr<PathSampler> make_sampler(std::int64_t nu, std::span<const double> theta) const = 0;
  // Kullback-Leibler-type information number I_theta.
  virtual double info_number(std::span<const double> theta) const = 0;

 protected:
  ObservationModel(const ObservationModel&) = default;
  ObservationModel& operator=(const ObservationModel&) = default;

  MixingGrid grid_;
};

// ---------------------------------------------------------------------------
// N(0,1) -> N(theta,1), independent observations.

class GaussianIidModel final : public ObservationModel {
 public:
  explicit GaussianIidModel(MixingGrid grid) : ObservationModel(std::move(grid)) {
    if (grid_.dimension() != 1) throw DomainError("gaussian_iid: atoms must be scalars");
  }

  std::string name() const override { return "gaussian_iid"; }
  std::size_t dimension() const noexcept override { return 1; }
  void reset() override {}

  void step(std::span<const double> x, std::span<double> increments) override {
    const double v = x[0];
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double th = grid_.atom(i)[0];
      increments[i] = th * v - 0.5 * th * th;
    }
  }

  std::unique_ptr<ObservationModel> clone() const override { return std::make_unique<GaussianIidModel>(*this); }

  std::unique_ptr<PathSampler> make_sampler(std::int64_t nu, std::span<const double> theta) const override {
    if (theta.size() != 1) throw DomainError("gaussian_iid: theta must be scalar");
    return std::make_unique<Sampler>(nu, theta[0]);
  }

  double info_number(std::span<const double> theta) const override {
    if (theta.size() != 1) throw DomainError("gaussian_iid: theta must be scalar");
    return 0.5 * theta[0] * theta[0];
  }

 private:
  class Sampler final : public PathSampler {
   public:
    Sampler(std::int64_t nu, double theta) : nu_(nu), theta_(theta) {}
    void next(Rng& rng, std::span<double> x) override {
      ++n_;
      x[0] = normal_(rng) + (n_ > nu_ ? theta_ : 0.0);
    }

   private:
    std::int64_t nu_;
    double theta_;
    std::int64_t n_ = 0;
    std::normal_distribution<double> normal_;
  };
};

// ---------------------------------------------------------------------------
// Increments identically zero; every L_n = 1. Used to exercise the detectors'
// deterministic drift (R_n = omega + n, S_n = prior odds).

class NullLlrModel final : public ObservationModel {
 public:
  explicit NullLlrModel(MixingGrid grid, std::size_t dimension = 1)
      : ObservationModel(std::move(grid)), dim_(dimension) {}

  std::string name() const override { return "null_llr"; }
  std::size_t dimension() const noexcept override { return dim_; }
  void reset() override {}
  void step(std::span<const double>, std::span<double> increments) override {
    std::fill(increments.begin(), increments.end(), 0.0);
  }
  std::unique_ptr<ObservationModel> clone() const override { return std::make_unique<NullLlrModel>(*this); }
  std::unique_ptr<PathSampler> make_sampler(std::int64_t, std::span<const double>) const override {
    return std::make_unique<Zeros>();
  }
  double info_number(std::span<const double>) const override { return 0.0; }

 private:
  struct Zeros final : PathSampler {
    void next(Rng&, std::span<double> x) override { std::fill(x.begin(), x.end(), 0.0); }
  };
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Multichannel signal in Gaussian AR(p) noise:
//   X_n^i = theta_i S_n^i 1{n > nu} + xi_n^i,  xi_n^i = sum_j beta_j^i xi_{n-j}^i + w_n^i.

// S_n = amplitude * sin(frequency * n + phase).
struct HarmonicSignal {
  double amplitude = 1.0;
  double frequency = 0.0;
  double phase = 0.0;

  static HarmonicSignal constant(double value) { return {value, 0.0, std::numbers::pi / 2.0}; }
  double operator()(std::int64_t n) const noexcept {
    return amplitude * std::sin(frequency * static_cast<double>(n) + phase);
  }
};

struct ArChannel {
  std::vector<double> ar_coeffs;  // beta_1..beta_p
  HarmonicSignal signal;
};

// Moduli of the roots of z^p - beta_1 z^{p-1} - ... - beta_p.
inline std::vector<double> ar_root_moduli(std::span<const double> beta) {
  const auto p = static_cast<Eigen::Index>(beta.size());
  if (p == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = beta[static_cast<std::size_t>(j)];
  for (Eigen::Index j = 1; j < p; ++j) companion(j, j - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<double> moduli;
  for (Eigen::Index j = 0; j < p; ++j) moduli.push_back(std::abs(solver.eigenvalues()(j)));
  return moduli;
}

class MultichannelArSpec {
 public:
  explicit MultichannelArSpec(std::vector<ArChannel> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) throw DomainError("multichannel_ar: at least one channel required");
    for (std::size_t i = 0; i < channels_.size(); ++i)
      for (double m : ar_root_moduli(channels_[i].ar_coeffs))
        if (!(m < 1.0 - 1e-9))
          throw DomainError("multichannel_ar: channel " + std::to_string(i) + " AR coefficients are not stable");
  }

  std::size_t channel_count() const noexcept { return channels_.size(); }
  const ArChannel& channel(std::size_t i) const { return channels_.at(i); }
  const std::vector<ArChannel>& channels() const noexcept { return channels_; }

  // Residual signal S~_n = S_n - sum_{j <= min(n,p)} beta_j S_{n-j}, n >= 1.
  double signal_residual(std::size_t i, std::int64_t n) const {
    const ArChannel& ch = channels_[i];
    double v = ch.signal(n);
    const auto order = std::min<std::int64_t>(n, static_cast<std::int64_t>(ch.ar_coeffs.size()));
    for (std::int64_t j = 1; j <= order; ++j) v -= ch.ar_coeffs[static_cast<std::size_t>(j - 1)] * ch.signal(n - j);
    return v;
  }

 private:
  std::vector<ArChannel> channels_;
};

// Numeric stand-in for Q_i = lim n^{-1} sup_k sum_{j=k+1}^{k+n} (S~_j)^2.
struct QLimit {
  double value = 0.0;   // max of the two window averages
  double spread = 0.0;  // |difference| between them
};

// Window averages at starts k = 0 and k = horizon, each of length `horizon`.
inline QLimit q_limit(const MultichannelArSpec& spec, std::size_t channel, std::int64_t horizon) {
  if (channel >= spec.channel_count()) throw DomainError("q_limit: channel index out of range");
  if (horizon < 1) throw DomainError("q_limit: horizon must be >= 1");
  double first = 0.0;
  double second = 0.0;
  for (std::int64_t j = 1; j <= horizon; ++j) {
    const double a = spec.signal_residual(channel, j);
    const double b = spec.signal_residual(channel, j + horizon);
    first += a * a;
    second += b * b;
  }
  first /= static_cast<double>(horizon);
  second /= static_cast<double>(horizon);
  return {std::max(first, second), std::fabs(first - second)};
}

class MultichannelArModel final : public ObservationModel {
 public:
  static constexpr std::int64_t kQHorizon = 100000;

  MultichannelArModel(MultichannelArSpec spec, MixingGrid grid)
      : ObservationModel(std::move(grid)), spec_(std::move(spec)) {
    const std::size_t n_ch = spec_.channel_count();
    if (grid_.dimension() != n_ch)
      throw DomainError("multichannel_ar: atom dimension must equal the channel count");
    for (const auto& a : grid_.atoms())
      for (double v : a)
        if (!(v > 0.0)) throw DomainError("multichannel_ar: amplitudes must be positive");
    for (std::size_t i = 0; i < n_ch; ++i) q_.push_back(q_limit(spec_, i, kQHorizon).value);
    reset();
  }

  std::string name() const override { return "multichannel_ar"; }
  std::size_t dimension() const noexcept override { return spec_.channel_count(); }
  const MultichannelArSpec& spec() const noexcept { return spec_; }
  std::span<const double> q_values() const noexcept { return q_; }

  void reset() override {
    n_ = 0;
    history_.assign(spec_.channel_count(), {});
    for (std::size_t i = 0; i < spec_.channel_count(); ++i)
      history_[i].assign(spec_.channel(i).ar_coeffs.size(), 0.0);
  }

  void step(std::span<const double> x, std::span<double> increments) override {
    ++n_;
    const std::size_t n_ch = spec_.channel_count();
    s_res_.resize(n_ch);
    x_res_.resize(n_ch);
    for (std::size_t i = 0; i < n_ch; ++i) {
      const auto& beta = spec_.channel(i).ar_coeffs;
      auto& hist = history_[i];  // hist[j-1] = X_{n-j}; zero before time 1
      double r = x[i];
      for (std::size_t j = 0; j < beta.size(); ++j) r -= beta[j] * hist[j];
      x_res_[i] = r;
      s_res_[i] = spec_.signal_residual(i, n_);
      if (!hist.empty()) {
        std::copy_backward(hist.begin(), hist.end() - 1, hist.end());
        hist[0] = x[i];
      }
    }
    for (std::size_t a = 0; a < grid_.size(); ++a) {
      const Atom& th = grid_.atom(a);
      double l = 0.0;
      for (std::size_t i = 0; i < n_ch; ++i)
        l += th[i] * s_res_[i] * x_res_[i] - 0.5 * th[i] * th[i] * s_res_[i] * s_res_[i];
      increments[a] = l;
    }
  }

  std::unique_ptr<ObservationModel> clone() const override { return std::make_unique<MultichannelArModel>(*this); }

  std::unique_ptr<PathSampler> make_sampler(std::int64_t nu, std::span<const double> theta) const override {
    if (theta.size() != spec_.channel_count()) throw DomainError("multichannel_ar: theta dimension mismatch");
    return std::make_unique<Sampler>(spec_, nu, std::vector<double>(theta.begin(), theta.end()));
  }

  // sum_i theta_i^2 Q_i / 2
  double info_number(std::span<const double> theta) const override {
    if (theta.size() != q_.size()) throw DomainError("multichannel_ar: theta dimension mismatch");
    double info = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) info += 0.5 * theta[i] * theta[i] * q_[i];
    return info;
  }

 private:
  class Sampler final : public PathSampler {
   public:
    Sampler(const MultichannelArSpec& spec, std::int64_t nu, std::vector<double> theta)
        : spec_(spec), nu_(nu), theta_(std::move(theta)), noise_(spec.channel_count()) {
      for (std::size_t i = 0; i < spec.channel_count(); ++i) noise_[i].assign(spec.channel(i).ar_coeffs.size(), 0.0);
    }

    void next(Rng& rng, std::span<double> x) override {
      ++n_;
      for (std::size_t i = 0; i < spec_.channel_count(); ++i) {
        const auto& beta = spec_.channel(i).ar_coeffs;
        auto& hist = noise_[i];
        double xi = normal_(rng);
        for (std::size_t j = 0; j < beta.size(); ++j) xi += beta[j] * hist[j];
        if (!hist.empty()) {
          std::copy_backward(hist.begin(), hist.end() - 1, hist.end());
          hist[0] = xi;
        }
        x[i] = xi + (n_ > nu_ ? theta_[i] * spec_.channel(i).signal(n_) : 0.0);
      }
    }

   private:
    MultichannelArSpec spec_;
    std::int64_t nu_;
    std::vector<double> theta_;
    std::vector<std::vector<double>> noise_;
    std::int64_t n_ = 0;
    std::normal_distribution<double> normal_;
  };

  MultichannelArSpec spec_;
  std::vector<double> q_;
  std::int64_t n_ = 0;
  std::vector<std::vector<double>> history_;
  std::vector<double> s_res_;
  std::vector<double> x_res_;
};

// ---------------------------------------------------------------------------
// Two-state hidden Markov model with unit-variance Gaussian emissions.

// Transition matrix [[1-beta, beta], [gamma, 1-gamma]] over states (1, 2);
// emissions N(mean1, 1) in state 1 and N(mean2, 1) in state 2.
struct HmmParams {
  double mean1 = 0.0;
  double mean2 = 0.0;
  double beta = 0.5;
  double gamma = 0.5;

  void validate() const {
    if (!(beta >= 0.0 && beta <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0))
      throw DomainError("hmm2: transition probabilities must lie in [0,1]");
    if (!(beta + gamma > 0.0)) throw DomainError("hmm2: beta + gamma must be positive (stationary law undefined)");
  }
  // Stationary P(state 2) = gamma / (beta + gamma).
  double stationary_state2() const noexcept { return gamma / (beta + gamma); }
  bool symmetric() const noexcept { return beta == 0.5 && gamma == 0.5; }
};

// Log-domain forward pass. After n steps, (log_p2, log_p1) hold
// log P(X^n, state_n = 2) and log P(X^n, state_n = 1) up to the shared offset
// log_scale, so log p(X^n) = log_scale + logsum(log_p2, log_p1).
class HmmForward {
 public:
  HmmForward() = default;
  explicit HmmForward(const HmmParams& p) : params_(p) {
    log_stay1_ = std::log1p(-p.beta);
    log_move12_ = std::log(p.beta);
    log_move21_ = std::log(p.gamma);
    log_stay2_ = std::log1p(-p.gamma);
    reset();
  }

  void reset() {
    const double pi2 = params_.stationary_state2();
    log_p2_ = std::log(pi2);
    log_p1_ = std::log1p(-pi2);
    log_marginal_ = 0.0;
  }

  // Predictive P(state_n = 2 | X^{n-1}).
  double predictive_state2() const {
    const double p2 = log_add(log_p2_ + log_stay2_, log_p1_ + log_move12_);
    const double p1 = log_add(log_p2_ + log_move21_, log_p1_ + log_stay1_);
    return std::exp(p2 - log_add(p1, p2));
  }

  // Advances by one observation and returns log p(X_n | X^{n-1}).
  double update(double x) {
    const double p2 = log_add(log_p2_ + log_stay2_, log_p1_ + log_move12_) + log_std_normal_pdf(x - params_.mean2);
    const double p1 = log_add(log_p2_ + log_move21_, log_p1_ + log_stay1_) + log_std_normal_pdf(x - params_.mean1);
    const double step = log_add(p2, p1);
    log_p2_ = p2 - step;
    log_p1_ = p1 - step;
    log_marginal_ += step;
    return step;
  }

  double log_marginal() const noexcept { return log_marginal_; }
  const HmmParams& params() const noexcept { return params_; }

 private:
  HmmParams params_;
  double log_stay1_ = 0.0, log_move12_ = 0.0, log_move21_ = 0.0, log_stay2_ = 0.0;
  double log_p2_ = 0.0, log_p1_ = 0.0;
  double log_marginal_ = 0.0;
};

// Atoms are (mean1, mean2) with transitions inherited from the pre-change
// parameter, or (mean1, mean2, beta, gamma).
inline HmmParams hmm_params_from_atom(std::span<const double> atom, const HmmParams& pre_change) {
  HmmParams p = pre_change;
  if (atom.size() == 2) {
    p.mean1 = atom[0];
    p.mean2 = atom[1];
  } else if (atom.size() == 4) {
    p = {atom[0], atom[1], atom[2], atom[3]};
  } else {
    throw DomainError("hmm2: atoms must have dimension 2 or 4");
  }
  p.validate();
  return p;
}

class Hmm2Model final : public ObservationModel {
 public:
  Hmm2Model(HmmParams pre_change, MixingGrid grid) : ObservationModel(std::move(grid)), pre_(pre_change) {
    pre_.validate();
    for (const auto& a : grid_.atoms()) post_.emplace_back(hmm_params_from_atom(a, pre_));
    pre_forward_ = HmmForward(pre_);
  }

  std::string name() const override { return "hmm2"; }
  std::size_t dimension() const noexcept override { return 1; }
  const HmmParams& pre_change() const noexcept { return pre_; }

  void reset() override {
    pre_forward_.reset();
    for (auto& f : post_) f.reset();
  }

  // l_n = [log M_theta(n) - log M_theta(n-1)] - [log M_theta0(n) - log M_theta0(n-1)]
  void step(std::span<const double> x, std::span<double> increments) override {
    const double base = pre_forward_.update(x[0]);
    for (std::size_t i = 0; i < post_.size(); ++i) increments[i] = post_[i].update(x[0]) - base;
  }

  std::unique_ptr<ObservationModel> clone() const override { return std::make_unique<Hmm2Model>(*this); }

  std::unique_ptr<PathSampler> make_sampler(std::int64_t nu, std::span<const double> theta) const override {
    return std::make_unique<Sampler>(pre_, hmm_params_from_atom(theta, pre_), nu);
  }

  // Symmetric chains only: KL divergence of the equal-weight two-component
  // mixtures, by adaptive Gauss-Kronrod quadrature.
  double info_number(std::span<const double> theta) const override {
    const HmmParams post = hmm_params_from_atom(theta, pre_);
    if (!pre_.symmetric() || !post.symmetric())
      throw DomainError("hmm2: information number is only available for the symmetric chain (beta = gamma = 1/2)");
    return symmetric_kl(post, pre_);
  }

  static double symmetric_kl(const HmmParams& post, const HmmParams& pre) {
    auto log_mix = [](const HmmParams& p, double x) {
      return log_add(log_std_normal_pdf(x - p.mean1), log_std_normal_pdf(x - p.mean2)) - std::numbers::ln2;
    };
    auto integrand = [&](double x) {
      const double lm = log_mix(post, x);
      return std::exp(lm) * (lm - log_mix(pre, x));
    };
    using boost::math::quadrature::gauss_kronrod;
    const double inf = std::numeric_limits<double>::infinity();
    return gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 15, 1e-12);
  }

 private:
  // Draws X_n from the predictive law of the regime in force, where each
  // regime's filter runs over the whole path from time 0.
  class Sampler final : public PathSampler {
   public:
    Sampler(const HmmParams& pre, const HmmParams& post, std::int64_t nu)
        : pre_(pre), post_(post), pre_params_(pre), post_params_(post), nu_(nu) {}

    void next(Rng& rng, std::span<double> x) override {
      ++n_;
      const bool changed = n_ > nu_;
      const double p2 = changed ? post_.predictive_state2() : pre_.predictive_state2();
      const HmmParams& emit = changed ? post_params_ : pre_params_;
      const bool state2 = unif_(rng) < p2;
      x[0] = normal_(rng) + (state2 ? emit.mean2 : emit.mean1);
      pre_.update(x[0]);
      post_.update(x[0]);
    }

   private:
    HmmForward pre_;
    HmmForward post_;
    HmmParams pre_params_;
    HmmParams post_params_;
    std::int64_t nu_;
    std::int64_t n_ = 0;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
  };

  HmmParams pre_;
  HmmForward pre_forward_;
  std::vector<HmmForward> post_;
};

// ---------------------------------------------------------------------------

inline ObservationSeq sample_path(const ObservationModel& model, std::int64_t nu, std::span<const double> theta,
                                  std::int64_t horizon, Rng& rng) {
  if (horizon < 1) throw DomainError("sample_path: horizon must be >= 1");
  ObservationSeq seq;
  seq.dim = model.dimension();
  seq.values.resize(static_cast<std::size_t>(horizon) * seq.dim);
  auto sampler = model.make_sampler(nu, theta);
  for (std::int64_t n = 0; n < horizon; ++n)
    sampler->next(rng, std::span<double>(seq.values.data() + static_cast<std::size_t>(n) * seq.dim, seq.dim));
  return seq;
}

inline ObservationSeq sample_path(const ObservationModel& model, std::int64_t nu, std::size_t atom_index,
                                  std::int64_t horizon, Rng& rng) {
  return sample_path(model, nu, std::span<const double>(model.grid().atom(atom_index)), horizon, rng);
}

// Increment matrix l_j(theta_i), one row per time step, from a fresh pass of
// a clone of `model` over `obs`.
inline std::vector<std::vector<double>> llr_increments(const ObservationModel& model, const ObservationSeq& obs) {
  auto m = model.clone();
  m->reset();
  std::vector<std::vector<double>> out(obs.size(), std::vector<double>(m->atom_count()));
  for (std::size_t n = 0; n < obs.size(); ++n) m->step(obs.row(n), out[n]);
  return out;
}

}  // namespace mixcpd

#pragma once

// Monte Carlo estimation of false-alarm probabilities, detection-delay
// moments and integrated risk.
//
// Every trial draws from its own generator seeded by (master_seed, trial
// index), results are stored by trial index and reduced in index order, so
// estimates do not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mixcpd/detectors.hpp"
#include "mixcpd/errors.hpp"
#include "mixcpd/measures.hpp"
#include "mixcpd/models.hpp"

namespace mixcpd {

struct Estimate {
  double point = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;    // trials entering the average
  std::int64_t censored = 0;  // of which censored at the horizon
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::string estimator;
};

// Mean, standard error and normal-approximation 95% CI of `values`.
inline Estimate mean_estimate(std::span<const double> values, std::string tag) {
  Estimate e;
  e.estimator = std::move(tag);
  e.trials = static_cast<std::int64_t>(values.size());
  if (values.empty()) return e;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double n = static_cast<double>(values.size());
  const double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  e.point = mean;
  e.std_error = std::sqrt(var / n);
  e.ci_lo = mean - 1.959963984540054 * e.std_error;
  e.ci_hi = mean + 1.959963984540054 * e.std_error;
  return e;
}

inline Rng trial_rng(std::uint64_t master_seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return Rng(seq);
}

// Runs fn(trial_index, rng, model) for every trial on `workers` threads, each
// owning a clone of `prototype`. Results come back in trial order.
template <class Result, class Fn>
std::vector<Result> run_trials(const ObservationModel& prototype, std::int64_t trials, std::uint64_t seed,
                               unsigned workers, Fn&& fn) {
  if (trials < 1) throw DomainError("Monte Carlo: trials must be >= 1");
  std::vector<Result> results(static_cast<std::size_t>(trials));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, trials));
  std::atomic<std::int64_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    auto model = prototype.clone();
    try {
      for (std::int64_t t = cursor.fetch_add(1); t < trials; t = cursor.fetch_add(1)) {
        Rng rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        results[static_cast<std::size_t>(t)] = fn(t, rng, *model);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      cursor.store(trials);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

// Everything a simulation needs apart from the scenario.
struct ExperimentSetup {
  std::shared_ptr<const ObservationModel> model;
  ChangePrior prior = ChangePrior::geometric(0.1, 0.0);
  DetectorSpec detector;
  double log_threshold = 0.0;
  std::int64_t trials = 1000;
  std::int64_t horizon = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  const MixingGrid& grid() const { return model->grid(); }
};

namespace detail {

struct TrialOutcome {
  std::int64_t nu = 0;
  std::optional<std::int64_t> stop;
  double final_log_stat = kNegInf;
};

// Draws nu >= 0 from the prior, or nu = 0 ("already changed") with
// probability q when include_q_mass is set.
inline std::int64_t draw_change_point(const ChangePrior& prior, Rng& rng, bool include_q_mass, bool& q_draw) {
  q_draw = false;
  if (include_q_mass && prior.q() > 0.0) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(rng) < prior.q()) {
      q_draw = true;
      return 0;
    }
  }
  return prior.sample_nonnegative(rng);
}

inline std::size_t draw_atom(const MixingGrid& grid, Rng& rng) {
  if (grid.size() == 1) return 0;
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) w[i] = grid.weight(i);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  return pick(rng);
}

inline TrialOutcome simulate_once(const ExperimentSetup& setup, ObservationModel& model, Rng& rng, std::int64_t nu,
                                  std::span<const double> theta) {
  auto sampler = model.make_sampler(nu, theta);
  const AlarmRecord rec = run_detector(setup.detector, model, setup.prior, setup.grid(), setup.log_threshold,
                                       *sampler, rng, setup.horizon);
  return {nu, rec.stop_time, rec.final_log_stat};
}

}  // namespace detail

// PFA = E_inf[Pi(T)]: each no-change trial contributes Pi(min(T, horizon)).
// Censored trials over-count by at most Pi(horizon), reported as bias_bound.
struct PfaEstimate {
  Estimate estimate;
  double bias_bound = 0.0;
};

inline PfaEstimate estimate_pfa_tail(const ExperimentSetup& setup) {
  const Atom& theta = setup.grid().atom(0);
  auto outcomes = run_trials<detail::TrialOutcome>(
      *setup.model, setup.trials, setup.seed, setup.workers,
      [&](std::int64_t, Rng& rng, ObservationModel& model) {
        return detail::simulate_once(setup, model, rng, kNoChange, theta);
      });
  std::vector<double> contrib;
  contrib.reserve(outcomes.size());
  std::int64_t censored = 0;
  for (const auto& o : outcomes) {
    if (o.stop) {
      contrib.push_back(setup.prior.tail(*o.stop));
    } else {
      ++censored;
      contrib.push_back(setup.prior.tail(setup.horizon));
    }
  }
  PfaEstimate out{mean_estimate(contrib, "pfa_tail"), setup.prior.tail(setup.horizon)};
  out.estimate.censored = censored;
  return out;
}

// PFA = E^pi[1/(1 + S_T); T < inf] for the MS rule, simulating (nu, theta)
// from prior x W. Trials censored at the horizon contribute 0.
inline Estimate estimate_pfa_posterior(const ExperimentSetup& setup) {
  if (setup.detector.kind != DetectorKind::kMs)
    throw DomainError("estimate_pfa_posterior: only defined for the MS rule");
  auto outcomes = run_trials<detail::TrialOutcome>(
      *setup.model, setup.trials, setup.seed, setup.workers,
      [&](std::int64_t, Rng& rng, ObservationModel& model) {
        bool q_draw = false;
        const std::int64_t nu = detail::draw_change_point(setup.prior, rng, true, q_draw);
        const std::size_t atom = detail::draw_atom(setup.grid(), rng);
        return detail::simulate_once(setup, model, rng, nu, setup.grid().atom(atom));
      });
  std::vector<double> contrib;
  contrib.reserve(outcomes.size());
  std::int64_t censored = 0;
  for (const auto& o : outcomes) {
    if (o.stop) {
      contrib.push_back(logistic_complement(o.final_log_stat));
    } else {
      ++censored;
      contrib.push_back(0.0);
    }
  }
  Estimate e = mean_estimate(contrib, "pfa_posterior");
  e.censored = censored;
  return e;
}

// Conditional delay moments E_{k,theta}[(T - k)^r | T > k].
struct DelayMoments {
  std::map<double, Estimate> moments;  // keyed by r
  std::int64_t rejected = 0;           // trials with T <= k (discarded)
  std::int64_t censored = 0;
  bool reliable = true;                // censor rate below 0.1%
  // (second raw moment) / (first moment)^2 with a delta-method standard error;
  // present when both r = 1 and r = 2 were requested.
  std::optional<Estimate> second_to_first_squared;
};

namespace detail {

inline Estimate moment_ratio(std::span<const double> delays) {
  const double n = static_cast<double>(delays.size());
  double m1 = 0.0, m2 = 0.0;
  for (double d : delays) {
    m1 += d;
    m2 += d * d;
  }
  m1 /= n;
  m2 /= n;
  double v11 = 0.0, v22 = 0.0, v12 = 0.0;
  for (double d : delays) {
    const double a = d - m1;
    const double b = d * d - m2;
    v11 += a * a;
    v22 += b * b;
    v12 += a * b;
  }
  const double denom = n > 1.0 ? n - 1.0 : 1.0;
  v11 /= denom;
  v22 /= denom;
  v12 /= denom;
  // g(m1, m2) = m2 / m1^2; grad = (-2 m2 / m1^3, 1 / m1^2)
  const double g = m2 / (m1 * m1);
  const double g1 = -2.0 * m2 / (m1 * m1 * m1);
  const double g2 = 1.0 / (m1 * m1);
  const double var = (g1 * g1 * v11 + 2.0 * g1 * g2 * v12 + g2 * g2 * v22) / n;
  Estimate e;
  e.estimator = "moment_ratio_delta";
  e.point = g;
  e.std_error = std::sqrt(std::max(var, 0.0));
  e.trials = static_cast<std::int64_t>(delays.size());
  e.ci_lo = g - 1.959963984540054 * e.std_error;
  e.ci_hi = g + 1.959963984540054 * e.std_error;
  return e;
}

inline DelayMoments summarize_delays(std::span<const double> delays, std::span<const double> r_list,
                                     std::int64_t rejected, std::int64_t censored, const std::string& tag) {
  if (delays.empty()) throw EstimationError(tag + ": no trials survived the conditioning T > nu");
  DelayMoments out;
  out.rejected = rejected;
  out.censored = censored;
  out.reliable = static_cast<double>(censored) < 1e-3 * static_cast<double>(delays.size());
  bool has1 = false, has2 = false;
  for (double r : r_list) {
    std::vector<double> powered(delays.size());
    std::transform(delays.begin(), delays.end(), powered.begin(), [r](double d) { return std::pow(d, r); });
    Estimate e = mean_estimate(powered, tag);
    e.censored = censored;
    out.moments[r] = e;
    has1 = has1 || r == 1.0;
    has2 = has2 || r == 2.0;
  }
  if (has1 && has2) out.second_to_first_squared = moment_ratio(delays);
  return out;
}

}  // namespace detail

inline DelayMoments estimate_delay_moments(const ExperimentSetup& setup, std::int64_t k, std::span<const double> theta,
                                           std::span<const double> r_list) {
  if (k < 0) throw DomainError("estimate_delay_moments: change point k must be >= 0");
  if (k >= setup.horizon) throw DomainError("estimate_delay_moments: change point beyond the horizon");
  for (double r : r_list)
    if (!(r > 0.0)) throw DomainError("estimate_delay_moments: moment orders must be positive");
  auto outcomes = run_trials<detail::TrialOutcome>(
      *setup.model, setup.trials, setup.seed, setup.workers,
      [&](std::int64_t, Rng& rng, ObservationModel& model) { return detail::simulate_once(setup, model, rng, k, theta); });
  std::vector<double> delays;
  std::int64_t rejected = 0, censored = 0;
  for (const auto& o : outcomes) {
    if (o.stop && *o.stop <= k) {
      ++rejected;
      continue;
    }
    if (!o.stop) ++censored;
    delays.push_back(static_cast<double>(o.stop.value_or(setup.horizon) - k));
  }
  return detail::summarize_delays(delays, r_list, rejected, censored, "delay_moments");
}

// Average delay E^pi_theta[(T - nu)^r | T > nu] with nu drawn from the prior
// restricted to nu >= 0. Trials whose change point lies beyond the horizon
// and that never stop are dropped and counted as censored.
inline Estimate estimate_average_delay_risk(const ExperimentSetup& setup, std::span<const double> theta, double r) {
  if (!(r > 0.0)) throw DomainError("estimate_average_delay_risk: r must be positive");
  const double uncovered = setup.prior.tail(setup.horizon) / (1.0 - setup.prior.q());
  if (!std::isfinite(setup.prior.mean()) && !(uncovered < 1e-4))
    throw DomainError("estimate_average_delay_risk: infinite prior mean and horizon covers < 99.99% of prior mass");
  auto outcomes = run_trials<detail::TrialOutcome>(
      *setup.model, setup.trials, setup.seed, setup.workers,
      [&](std::int64_t, Rng& rng, ObservationModel& model) {
        bool q_draw = false;
        const std::int64_t nu = detail::draw_change_point(setup.prior, rng, false, q_draw);
        return detail::simulate_once(setup, model, rng, nu, theta);
      });
  std::vector<double> values;
  std::int64_t censored = 0;
  for (const auto& o : outcomes) {
    if (o.stop && *o.stop <= o.nu) continue;
    if (!o.stop) {
      ++censored;
      if (o.nu >= setup.horizon) continue;
    }
    values.push_back(std::pow(static_cast<double>(o.stop.value_or(setup.horizon) - o.nu), r));
  }
  if (values.empty()) throw EstimationError("average_delay: no trials survived the conditioning T > nu");
  Estimate e = mean_estimate(values, "average_delay");
  e.censored = censored;
  return e;
}

// rho = P(T <= nu) + c E[((T - nu)^+)^r] over (nu, theta) ~ prior x W, summed
// over nu >= 0 only (the q-mass is left out), i.e. (1 - q) times the
// conditional mean given nu >= 0.
inline Estimate estimate_integrated_risk(const ExperimentSetup& setup, double c, double r) {
  if (!(c >= 0.0)) throw DomainError("estimate_integrated_risk: cost c must be >= 0");
  if (!(r > 0.0)) throw DomainError("estimate_integrated_risk: r must be positive");
  auto outcomes = run_trials<detail::TrialOutcome>(
      *setup.model, setup.trials, setup.seed, setup.workers,
      [&](std::int64_t, Rng& rng, ObservationModel& model) {
        bool q_draw = false;
        const std::int64_t nu = detail::draw_change_point(setup.prior, rng, false, q_draw);
        const std::size_t atom = detail::draw_atom(setup.grid(), rng);
        return detail::simulate_once(setup, model, rng, nu, setup.grid().atom(atom));
      });
  const double mass = 1.0 - setup.prior.q();
  std::vector<double> loss;
  loss.reserve(outcomes.size());
  std::int64_t censored = 0;
  for (const auto& o : outcomes) {
    const std::int64_t t = o.stop.value_or(setup.horizon);
    if (!o.stop) ++censored;
    if (t <= o.nu) {
      loss.push_back(o.stop ? mass : 0.0);
    } else {
      loss.push_back(mass * c * std::pow(static_cast<double>(t - o.nu), r));
    }
  }
  Estimate e = mean_estimate(loss, "integrated_risk");
  e.censored = censored;
  return e;
}

// Mean of the statistic itself (not its log) after n steps under P_inf, no
// stopping. For MSR, E_inf[R_n^W] = omega + n.
inline Estimate estimate_statistic_mean(const ExperimentSetup& setup, std::int64_t n) {
  if (n < 1) throw DomainError("estimate_statistic_mean: n must be >= 1");
  const Atom& theta = setup.grid().atom(0);
  auto values = run_trials<double>(*setup.model, setup.trials, setup.seed, setup.workers,
                                   [&](std::int64_t, Rng& rng, ObservationModel& model) {
                                     auto sampler = model.make_sampler(kNoChange, theta);
                                     model.reset();
                                     MixtureStatistic stat(setup.detector, setup.prior, setup.grid());
                                     std::vector<double> x(model.dimension()), incr(model.atom_count());
                                     for (std::int64_t j = 0; j < n; ++j) {
                                       sampler->next(rng, x);
                                       model.step(x, incr);
                                       stat.update(incr);
                                     }
                                     return std::exp(stat.log_stat());
                                   });
  return mean_estimate(values, "statistic_mean");
}

// n^{-1} lambda_{0,n}(theta_atom) under P_{0,theta}.
inline Estimate estimate_normalized_llr(const ObservationModel& prototype, std::size_t atom,
                                        std::span<const double> theta, std::int64_t n, std::int64_t trials,
                                        std::uint64_t seed, unsigned workers) {
  if (n < 1) throw DomainError("estimate_normalized_llr: n must be >= 1");
  if (atom >= prototype.atom_count()) throw DomainError("estimate_normalized_llr: atom index out of range");
  auto values = run_trials<double>(prototype, trials, seed, workers,
                                   [&](std::int64_t, Rng& rng, ObservationModel& model) {
                                     auto sampler = model.make_sampler(0, theta);
                                     model.reset();
                                     std::vector<double> x(model.dimension()), incr(model.atom_count());
                                     double llr = 0.0;
                                     for (std::int64_t j = 0; j < n; ++j) {
                                       sampler->next(rng, x);
                                       model.step(x, incr);
                                       llr += incr[atom];
                                     }
                                     return llr / static_cast<double>(n);
                                   });
  return mean_estimate(values, "normalized_llr");
}

// E_inf[exp(l_n(theta_atom))] at a fixed step n; equals 1 for a valid LLR.
inline Estimate estimate_exp_increment(const ObservationModel& prototype, std::size_t atom, std::int64_t n,
                                       std::int64_t trials, std::uint64_t seed, unsigned workers) {
  if (n < 1) throw DomainError("estimate_exp_increment: n must be >= 1");
  const Atom& theta = prototype.grid().atom(0);
  auto values = run_trials<double>(prototype, trials, seed, workers,
                                   [&](std::int64_t, Rng& rng, ObservationModel& model) {
                                     auto sampler = model.make_sampler(kNoChange, theta);
                                     model.reset();
                                     std::vector<double> x(model.dimension()), incr(model.atom_count());
                                     for (std::int64_t j = 0; j < n; ++j) {
                                       sampler->next(rng, x);
                                       model.step(x, incr);
                                     }
                                     return std::exp(incr[atom]);
                                   });
  return mean_estimate(values, "exp_increment");
}

struct LadderPoint {
  double log_threshold = 0.0;
  double mean_delay = 0.0;
  double std_error = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

// Weighted least squares of mean delay on log A with weights 1/stderr^2.
// If any point has zero stderr the fit is unweighted and the slope error is
// residual-based.
inline SlopeFit slope_regression(std::span<const LadderPoint> ladder) {
  if (ladder.size() < 4) throw DomainError("slope_regression: at least 4 ladder points required");
  const bool weighted = std::all_of(ladder.begin(), ladder.end(), [](const LadderPoint& p) { return p.std_error > 0.0; });
  std::vector<double> w(ladder.size());
  for (std::size_t i = 0; i < ladder.size(); ++i)
    w[i] = weighted ? 1.0 / (ladder[i].std_error * ladder[i].std_error) : 1.0;
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    sw += w[i];
    sx += w[i] * ladder[i].log_threshold;
    sy += w[i] * ladder[i].mean_delay;
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double dx = ladder[i].log_threshold - xbar;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (ladder[i].mean_delay - ybar);
  }
  if (!(sxx > 0.0)) throw DomainError("slope_regression: degenerate ladder (all log thresholds equal)");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (weighted) {
    fit.slope_stderr = std::sqrt(1.0 / sxx);
  } else {
    double rss = 0.0;
    for (const auto& p : ladder) {
      const double e = p.mean_delay - fit.intercept - fit.slope * p.log_threshold;
      rss += e * e;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(ladder.size() - 2) / sxx);
  }
  return fit;
}

// Mean delay from change point k at every rung of a threshold ladder.
inline std::vector<LadderPoint> delay_ladder(ExperimentSetup setup, std::int64_t k, std::span<const double> theta,
                                             std::span<const double> log_thresholds) {
  std::vector<LadderPoint> out;
  const double r1[] = {1.0};
  for (double la : log_thresholds) {
    setup.log_threshold = la;
    const DelayMoments dm = estimate_delay_moments(setup, k, theta, r1);
    const Estimate& e = dm.moments.at(1.0);
    out.push_back({la, e.point, e.std_error});
  }
  return out;
}

}  // namespace mixcpd

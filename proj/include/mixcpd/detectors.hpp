#pragma once

// Mixture Shiryaev (MS) and Mixture Shiryaev-Roberts (MSR) statistics in the
// log domain, their stopping rules, and the multi-cyclic restart mode.
//
// Both statistics are carried per atom and mixed on demand:
//   MS:  N_n(theta) = (N_{n-1}(theta) + pi_{n-1}) L_n(theta),  N_0 = q,
//        S_n^W = sum_i w_i N_n(theta_i) / Pi(n)
//   MSR: R_n(theta) = (R_{n-1}(theta) + 1) L_n(theta),          R_0 = omega,
//        R_n^W = sum_i w_i R_n(theta_i)
// which unroll to the double sums over change points k < n.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixcpd/errors.hpp"
#include "mixcpd/logmath.hpp"
#include "mixcpd/measures.hpp"
#include "mixcpd/models.hpp"

namespace mixcpd {

enum class DetectorKind { kMs, kMsr };

inline std::string to_string(DetectorKind k) { return k == DetectorKind::kMs ? "MS" : "MSR"; }

struct DetectorSpec {
  DetectorKind kind = DetectorKind::kMs;
  double omega = 0.0;  // MSR head-start R_0^W
};

struct MsState {
  std::int64_t n = 0;
  std::vector<double> log_num;  // log N_n(theta_i)
  double log_stat = kNegInf;    // log S_n^W
};

struct MsrState {
  std::int64_t n = 0;
  std::vector<double> log_r;   // log R_n(theta_i)
  double log_stat = kNegInf;   // log R_n^W
  double omega = 0.0;
};

inline MsState ms_initial(const ChangePrior& prior, std::size_t atoms) {
  MsState s;
  const double log_q = std::log(prior.q());
  s.log_num.assign(atoms, log_q);
  s.log_stat = log_q - std::log1p(-prior.q());
  return s;
}

inline void ms_update(MsState& s, const ChangePrior& prior, std::span<const double> log_weights,
                      std::span<const double> increments) {
  const std::int64_t next = s.n + 1;
  const double log_tail = prior.log_tail(next);
  if (log_tail == kNegInf)
    throw StateError("MS statistic undefined: prior tail P(nu >= " + std::to_string(next) + ") is zero");
  const double log_pi = prior.log_pmf(s.n);
  for (std::size_t i = 0; i < s.log_num.size(); ++i) s.log_num[i] = log_add(s.log_num[i], log_pi) + increments[i];
  s.log_stat = log_sum_exp_weighted(log_weights, s.log_num) - log_tail;
  s.n = next;
}

inline MsrState msr_initial(double omega, std::size_t atoms) {
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw DomainError("MSR head-start omega must be finite and >= 0");
  MsrState s;
  s.omega = omega;
  s.log_r.assign(atoms, std::log(omega));
  s.log_stat = std::log(omega);
  return s;
}

inline void msr_update(MsrState& s, std::span<const double> log_weights, std::span<const double> increments) {
  for (std::size_t i = 0; i < s.log_r.size(); ++i) s.log_r[i] = log_add(s.log_r[i], 0.0) + increments[i];
  s.log_stat = log_sum_exp_weighted(log_weights, s.log_r);
  ++s.n;
}

// P(nu >= n | F_n) = 1 / (1 + S_n^W).
inline double posterior_no_change(const MsState& s) noexcept { return logistic_complement(s.log_stat); }

// Either statistic behind one interface, owning copies of what it needs.
class MixtureStatistic {
 public:
  MixtureStatistic(const DetectorSpec& spec, const ChangePrior& prior, const MixingGrid& grid)
      : spec_(spec), prior_(prior), log_weights_(grid.log_weights().begin(), grid.log_weights().end()) {
    reset();
  }

  void reset() {
    if (spec_.kind == DetectorKind::kMs)
      ms_ = ms_initial(prior_, log_weights_.size());
    else
      msr_ = msr_initial(spec_.omega, log_weights_.size());
  }

  void update(std::span<const double> increments) {
    if (spec_.kind == DetectorKind::kMs)
      ms_update(ms_, prior_, log_weights_, increments);
    else
      msr_update(msr_, log_weights_, increments);
  }

  double log_stat() const noexcept { return spec_.kind == DetectorKind::kMs ? ms_.log_stat : msr_.log_stat; }
  std::int64_t n() const noexcept { return spec_.kind == DetectorKind::kMs ? ms_.n : msr_.n; }
  DetectorKind kind() const noexcept { return spec_.kind; }
  const MsState& ms_state() const noexcept { return ms_; }
  const MsrState& msr_state() const noexcept { return msr_; }
  const ChangePrior& prior() const noexcept { return prior_; }

 private:
  DetectorSpec spec_;
  ChangePrior prior_;
  std::vector<double> log_weights_;
  MsState ms_;
  MsrState msr_;
};

struct AlarmRecord {
  std::optional<std::int64_t> stop_time;  // empty: censored at `horizon`
  std::int64_t horizon = 0;
  std::vector<double> trajectory;         // log statistic at n = 1, 2, ...
  double final_log_stat = kNegInf;        // statistic at the stop (or censoring) time

  bool censored() const noexcept { return !stop_time.has_value(); }
};

namespace detail {

inline void check_grid_matches(const ObservationModel& model, const MixingGrid& grid) {
  if (grid.size() != model.atom_count() || grid.dimension() != model.grid().dimension() ||
      grid.atoms() != model.grid().atoms())
    throw DomainError("run_detector: mixing grid does not match the model's grid");
}

// Steps model and statistic until the first n with log_stat >= log_threshold,
// `next(x)` returning false when the source is exhausted.
template <class NextFn>
AlarmRecord run_loop(MixtureStatistic& stat, ObservationModel& model, double log_threshold, std::int64_t horizon,
                     bool record_trajectory, NextFn&& next) {
  AlarmRecord rec;
  rec.horizon = horizon;
  std::vector<double> x(model.dimension());
  std::vector<double> incr(model.atom_count());
  for (std::int64_t n = 1; n <= horizon; ++n) {
    if (!next(std::span<double>(x))) {
      rec.horizon = n - 1;
      break;
    }
    model.step(x, incr);
    stat.update(incr);
    if (record_trajectory) rec.trajectory.push_back(stat.log_stat());
    rec.final_log_stat = stat.log_stat();
    if (stat.log_stat() >= log_threshold) {
      rec.stop_time = n;
      break;
    }
  }
  return rec;
}

}  // namespace detail

// Runs T = inf{n >= 1 : statistic >= A} on a sampled path.
inline AlarmRecord run_detector(const DetectorSpec& spec, ObservationModel& model, const ChangePrior& prior,
                                const MixingGrid& grid, double log_threshold, PathSampler& sampler, Rng& rng,
                                std::int64_t horizon, bool record_trajectory = false) {
  if (horizon < 1) throw DomainError("run_detector: horizon must be >= 1");
  if (!std::isfinite(log_threshold)) throw DomainError("run_detector: log threshold must be finite");
  detail::check_grid_matches(model, grid);
  model.reset();
  MixtureStatistic stat(spec, prior, grid);
  return detail::run_loop(stat, model, log_threshold, horizon, record_trajectory, [&](std::span<double> x) {
    sampler.next(rng, x);
    return true;
  });
}

// Runs the stopping rule over a recorded observation sequence; censored at
// min(horizon, obs.size()).
inline AlarmRecord run_detector(const DetectorSpec& spec, ObservationModel& model, const ChangePrior& prior,
                                const MixingGrid& grid, double log_threshold, const ObservationSeq& obs,
                                std::int64_t horizon, bool record_trajectory = false) {
  if (horizon < 1) throw DomainError("run_detector: horizon must be >= 1");
  if (!std::isfinite(log_threshold)) throw DomainError("run_detector: log threshold must be finite");
  if (obs.size() > 0 && obs.dim != model.dimension())
    throw DomainError("run_detector: observation width does not match the model dimension");
  detail::check_grid_matches(model, grid);
  model.reset();
  MixtureStatistic stat(spec, prior, grid);
  std::size_t cursor = 0;
  return detail::run_loop(stat, model, log_threshold, horizon, record_trajectory, [&](std::span<double> x) {
    if (cursor >= obs.size()) return false;
    const auto row = obs.row(cursor++);
    std::copy(row.begin(), row.end(), x.begin());
    return true;
  });
}

struct MulticyclicResult {
  std::vector<std::int64_t> alarm_times;  // absolute indices into the stream
  std::vector<double> trajectory;         // log statistic at every stream index, if recorded
};

// Repeated surveillance: after each alarm both the statistic and the model's
// history restart from their time-0 state, continuing with the next sample.
inline MulticyclicResult multicyclic_run(const DetectorSpec& spec, ObservationModel& model, const ChangePrior& prior,
                                         const MixingGrid& grid, double log_threshold, const ObservationSeq& obs,
                                         bool record_trajectory = false) {
  if (!std::isfinite(log_threshold)) throw DomainError("multicyclic_run: log threshold must be finite");
  if (obs.size() > 0 && obs.dim != model.dimension())
    throw DomainError("multicyclic_run: observation width does not match the model dimension");
  detail::check_grid_matches(model, grid);
  MulticyclicResult out;
  model.reset();
  MixtureStatistic stat(spec, prior, grid);
  std::vector<double> incr(model.atom_count());
  for (std::size_t t = 0; t < obs.size(); ++t) {
    model.step(obs.row(t), incr);
    stat.update(incr);
    const double ls = stat.log_stat();
    if (record_trajectory) out.trajectory.push_back(ls);
    if (ls >= log_threshold) {
      out.alarm_times.push_back(static_cast<std::int64_t>(t) + 1);
      model.reset();
      stat.reset();
    }
  }
  return out;
}

}  // namespace mixcpd

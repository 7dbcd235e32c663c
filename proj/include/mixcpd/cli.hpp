#pragma once

// Subcommands behind the `mixcpd` executable:
//   calibrate <config>                      threshold from the calibration section
//   simulate  <config>                      Monte Carlo scenarios -> JSON report (+ ladder CSV)
//   detect    <config> <data.csv> [...]     stopping rule over recorded observations
// Exit codes: 0 success, 2 configuration error, 3 runtime or estimation error.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "mixcpd/calibration.hpp"
#include "mixcpd/config.hpp"
#include "mixcpd/detectors.hpp"
#include "mixcpd/montecarlo.hpp"
#include "mixcpd/theory.hpp"

namespace mixcpd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline std::string format_number(double x, int digits = 12) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace csv_detail

// One time step per row, `dim` comma-separated numbers. A first non-blank
// line that is not numeric is taken as a header. Blank lines are skipped.
inline ObservationSeq parse_observations_csv(std::istream& in, std::size_t dim) {
  using namespace csv_detail;
  ObservationSeq seq;
  seq.dim = dim;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  std::vector<double> row(dim);
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text);
    double probe = 0.0;
    if (!seen_content) {
      seen_content = true;
      if (!parse_double(fields[0], probe)) continue;
    }
    if (fields.size() != dim)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) + " column(s), found " +
                      std::to_string(fields.size()));
    for (std::size_t i = 0; i < dim; ++i)
      if (!parse_double(fields[i], row[i]))
        throw DataError("line " + std::to_string(line_no) + ": column " + std::to_string(i + 1) + " is not a number: '" +
                        std::string(trim(fields[i])) + "'");
    seq.push_row(row);
  }
  return seq;
}

inline ObservationSeq read_observations_csv(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return parse_observations_csv(in, dim);
}

inline void write_alarms_csv(std::ostream& out, const std::vector<std::int64_t>& alarms) {
  out << "alarm,time\n";
  if (alarms.empty()) out << "0,CENSORED\n";
  for (std::size_t i = 0; i < alarms.size(); ++i) out << i + 1 << ',' << alarms[i] << '\n';
}

inline void write_trajectory_csv(std::ostream& out, const std::vector<double>& log_stats, double log_threshold) {
  out << "n,log_stat,crossed\n";
  for (std::size_t i = 0; i < log_stats.size(); ++i)
    out << i + 1 << ',' << format_number(log_stats[i], 17) << ',' << (log_stats[i] >= log_threshold ? 1 : 0) << '\n';
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write output file '" + path + "'");
  return out;
}

// ---------------------------------------------------------------------------
// JSON fragments

inline Json number_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json threshold_json(const ThresholdSpec& t) {
  Json inputs = Json::object();
  for (const auto& [k, v] : t.inputs) inputs[k] = number_json(v);
  return {{"kind", to_string(t.kind)},
          {"inputs", inputs},
          {"log_threshold", t.log_threshold},
          {"threshold", number_json(t.threshold())},
          {"provenance", t.provenance}};
}

inline Json estimate_json(const Estimate& e) {
  return {{"point", number_json(e.point)},
          {"stderr", number_json(e.std_error)},
          {"trials", e.trials},
          {"censored", e.censored},
          {"ci95", {number_json(e.ci_lo), number_json(e.ci_hi)}},
          {"estimator", e.estimator}};
}

inline Json prediction_json(const std::optional<Prediction>& p, double estimate) {
  if (!p) return nullptr;
  return {{"quantity", p->quantity},
          {"value", number_json(p->value)},
          {"regime", p->regime},
          {"ratio", number_json(estimate / p->value)}};
}

// ---------------------------------------------------------------------------
// Commands

namespace cli_detail {

inline std::optional<double> info_of(const ObservationModel& model, std::span<const double> theta) {
  try {
    const double i = model.info_number(theta);
    if (i > 0.0 && std::isfinite(i)) return i;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

// First-order delay moment of order m at log threshold `log_a`.
inline std::optional<Prediction> delay_prediction(const ExperimentConfig& cfg, std::span<const double> theta,
                                                  double log_a, double m, const std::string& quantity) {
  const auto info = info_of(*cfg.model, theta);
  if (!info || !(log_a > 0.0) || !(m >= 1.0)) return std::nullopt;
  const double mu = cfg.detector.kind == DetectorKind::kMs ? cfg.prior.mu() : 0.0;
  return Prediction{quantity, std::pow(log_a / (*info + mu), m), "first-order"};
}

inline std::optional<double> grid_d(const ExperimentConfig& cfg, double r) {
  std::vector<double> info;
  for (const auto& atom : cfg.grid().atoms()) {
    const auto i = info_of(*cfg.model, atom);
    if (!i) return std::nullopt;
    info.push_back(*i);
  }
  const double mu = cfg.detector.kind == DetectorKind::kMs ? cfg.prior.mu() : 0.0;
  return d_constant(cfg.grid(), info, mu, r);
}

inline std::optional<double> pfa_bound(const ExperimentConfig& cfg) {
  const double a = cfg.threshold.threshold();
  if (cfg.detector.kind == DetectorKind::kMs) return 1.0 / (1.0 + a);
  if (!std::isfinite(cfg.prior.mean())) return std::nullopt;
  return (cfg.detector.omega * cfg.prior.b() + cfg.prior.mean()) / a;
}

inline std::string numbered_path(const std::string& path, std::size_t index) {
  if (index == 0) return path;
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "." + std::to_string(index);
  return path.substr(0, dot) + "." + std::to_string(index) + path.substr(dot);
}

inline Json run_scenario(const ExperimentConfig& cfg, const ExperimentSetup& setup, const Scenario& s,
                         std::size_t& ladder_index) {
  Json out = config_detail::scenario_json(s);
  const double log_a = cfg.threshold.log_threshold;
  switch (s.type) {
    case ScenarioType::kPfaTail: {
      const auto e = estimate_pfa_tail(setup);
      out["estimate"] = estimate_json(e.estimate);
      out["bias_bound"] = number_json(e.bias_bound);
      const auto bound = pfa_bound(cfg);
      out["bound"] = bound ? number_json(*bound) : Json(nullptr);
      break;
    }
    case ScenarioType::kPfaPosterior: {
      const auto e = estimate_pfa_posterior(setup);
      out["estimate"] = estimate_json(e);
      const auto bound = pfa_bound(cfg);
      out["bound"] = bound ? number_json(*bound) : Json(nullptr);
      break;
    }
    case ScenarioType::kDelay: {
      const auto dm = estimate_delay_moments(setup, s.k, s.theta, s.r_list);
      Json moments = Json::array();
      for (const auto& [r, e] : dm.moments) {
        moments.push_back({{"r", r},
                           {"estimate", estimate_json(e)},
                           {"prediction", prediction_json(delay_prediction(cfg, s.theta, log_a, r, "delay_moment"),
                                                          e.point)}});
      }
      out["moments"] = moments;
      out["rejected"] = dm.rejected;
      out["censored"] = dm.censored;
      out["reliable"] = dm.reliable;
      if (dm.second_to_first_squared) out["second_to_first_squared"] = estimate_json(*dm.second_to_first_squared);
      break;
    }
    case ScenarioType::kAverageDelay: {
      const auto e = estimate_average_delay_risk(setup, s.theta, s.r);
      out["estimate"] = estimate_json(e);
      out["prediction"] = prediction_json(delay_prediction(cfg, s.theta, log_a, s.r, "average_delay"), e.point);
      break;
    }
    case ScenarioType::kIntegratedRisk: {
      const auto e = estimate_integrated_risk(setup, s.c, s.r);
      out["estimate"] = estimate_json(e);
      std::optional<Prediction> pred;
      const auto d = grid_d(cfg, s.r);
      if (d && s.c > 0.0 && s.c < 1.0)
        pred = Prediction{"integrated_risk", integrated_risk_prediction(s.c, s.r, *d), "first-order"};
      out["prediction"] = prediction_json(pred, e.point);
      break;
    }
    case ScenarioType::kLadder: {
      const auto points = delay_ladder(setup, s.k, s.theta, s.log_thresholds);
      Json rungs = Json::array();
      std::ostringstream csv;
      csv << "log_A,mean_delay,stderr,prediction\n";
      for (const auto& p : points) {
        const auto pred = delay_prediction(cfg, s.theta, p.log_threshold, 1.0, "mean_delay");
        rungs.push_back({{"log_A", p.log_threshold},
                         {"mean_delay", number_json(p.mean_delay)},
                         {"stderr", number_json(p.std_error)},
                         {"prediction", pred ? number_json(pred->value) : Json(nullptr)}});
        csv << format_number(p.log_threshold) << ',' << format_number(p.mean_delay) << ','
            << format_number(p.std_error) << ',' << (pred ? format_number(pred->value) : std::string()) << '\n';
      }
      out["rungs"] = rungs;
      const auto fit = slope_regression(points);
      out["fit"] = {{"slope", fit.slope}, {"slope_stderr", fit.slope_stderr}, {"intercept", fit.intercept}};
      const auto info = info_of(*cfg.model, s.theta);
      if (info) {
        const double mu = cfg.detector.kind == DetectorKind::kMs ? cfg.prior.mu() : 0.0;
        out["predicted_slope"] = 1.0 / (*info + mu);
      } else {
        out["predicted_slope"] = nullptr;
      }
      if (!cfg.output.ladder_csv.empty()) {
        const std::string path = numbered_path(cfg.output.ladder_csv, ladder_index);
        auto f = open_output(path);
        f << csv.str();
        out["ladder_csv"] = path;
      }
      ++ladder_index;
      break;
    }
    case ScenarioType::kStatisticMean: {
      const auto e = estimate_statistic_mean(setup, s.n);
      out["estimate"] = estimate_json(e);
      if (cfg.detector.kind == DetectorKind::kMsr)
        out["expected"] = cfg.detector.omega + static_cast<double>(s.n);
      break;
    }
  }
  return out;
}

inline unsigned workers_from_env(unsigned fallback) {
  const char* env = std::getenv("MIXCPD_WORKERS");
  if (env == nullptr || *env == '\0') return fallback;
  unsigned value = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("MIXCPD_WORKERS", "must be an integer >= 0");
  return value;
}

}  // namespace cli_detail

inline ThresholdSpec cmd_calibrate(const std::string& config_path, std::ostream& out) {
  const auto cfg = load_config(config_path);
  const auto& t = cfg.threshold;
  out << "kind=" << to_string(t.kind) << " A=" << format_number(t.threshold(), 10)
      << " log_A=" << format_number(t.log_threshold, 10) << '\n';
  out << t.provenance << '\n';
  if (!cfg.output.report.empty()) {
    auto f = open_output(cfg.output.report);
    f << Json{{"config", cfg.to_json()}, {"threshold", threshold_json(t)}}.dump(2) << '\n';
  }
  return t;
}

// Runs every scenario and returns the report document.
inline Json simulate_report(const ExperimentConfig& cfg, unsigned workers) {
  if (!cfg.montecarlo) throw ConfigError("montecarlo", "required for simulate");
  const auto& mc = *cfg.montecarlo;
  ExperimentSetup setup;
  setup.model = cfg.model;
  setup.prior = cfg.prior;
  setup.detector = cfg.detector;
  setup.log_threshold = cfg.threshold.log_threshold;
  setup.trials = mc.trials;
  setup.horizon = mc.horizon;
  setup.seed = mc.seed;
  setup.workers = workers;

  Json report;
  report["config"] = cfg.to_json();
  report["threshold"] = threshold_json(cfg.threshold);
  const auto cp2 = check_cp2_partial(cfg.prior, 1.0, mc.horizon);
  report["prior"] = {{"mu", cfg.prior.mu()},
                     {"mean", number_json(cfg.prior.mean())},
                     {"b", cfg.prior.b()},
                     {"tail_at_horizon", cfg.prior.tail(mc.horizon)},
                     {"cp2_partial_check",
                      {{"r", 1.0},
                       {"partial_sum", number_json(cp2.partial_sum)},
                       {"last_summand", number_json(cp2.last_summand)},
                       {"consistent", cp2.consistent},
                       {"note", "finite-horizon surrogate; finiteness is not proven"}}}};
  Json info = Json::array();
  for (const auto& atom : cfg.grid().atoms()) {
    const auto i = cli_detail::info_of(*cfg.model, atom);
    info.push_back(i ? Json(*i) : Json(nullptr));
  }
  report["info_numbers"] = info;
  Json results = Json::array();
  std::size_t ladder_index = 0;
  for (const auto& s : mc.scenarios) results.push_back(cli_detail::run_scenario(cfg, setup, s, ladder_index));
  report["scenarios"] = results;
  return report;
}

inline std::string cmd_simulate(const std::string& config_path, std::ostream& out) {
  const auto cfg = load_config(config_path);
  if (!cfg.montecarlo) throw ConfigError("montecarlo", "required for simulate");
  const unsigned workers = cli_detail::workers_from_env(cfg.montecarlo->workers);
  const std::string text = simulate_report(cfg, workers).dump(2) + "\n";
  if (cfg.output.report.empty()) {
    out << text;
  } else {
    auto f = open_output(cfg.output.report);
    f << text;
    out << "report written to " << cfg.output.report << '\n';
  }
  return text;
}

struct DetectOptions {
  bool multicyclic = false;
  bool trajectory = false;
  std::string alarms_path;      // overrides output.alarms_csv
  std::string trajectory_path;  // overrides output.trajectory_csv
};

struct DetectResult {
  std::vector<std::int64_t> alarms;
  std::vector<double> trajectory;
  std::int64_t observations = 0;
};

inline DetectResult detect_on(const ExperimentConfig& cfg, const ObservationSeq& obs, bool multicyclic,
                              bool record_trajectory) {
  auto model = cfg.model->clone();
  DetectResult r;
  r.observations = static_cast<std::int64_t>(obs.size());
  if (multicyclic) {
    auto mc = multicyclic_run(cfg.detector, *model, cfg.prior, cfg.grid(), cfg.threshold.log_threshold, obs,
                              record_trajectory);
    r.alarms = std::move(mc.alarm_times);
    r.trajectory = std::move(mc.trajectory);
  } else {
    const std::int64_t horizon = std::max<std::int64_t>(1, r.observations);
    auto rec = run_detector(cfg.detector, *model, cfg.prior, cfg.grid(), cfg.threshold.log_threshold, obs, horizon,
                            record_trajectory);
    if (rec.stop_time) r.alarms.push_back(*rec.stop_time);
    r.trajectory = std::move(rec.trajectory);
  }
  return r;
}

inline DetectResult cmd_detect(const std::string& config_path, const std::string& data_path,
                               const DetectOptions& opts, std::ostream& out) {
  const auto cfg = load_config(config_path);
  const auto obs = read_observations_csv(data_path, cfg.model->dimension());
  DetectResult r = detect_on(cfg, obs, opts.multicyclic, opts.trajectory);

  const std::string alarms_path = opts.alarms_path.empty() ? cfg.output.alarms_csv : opts.alarms_path;
  if (alarms_path.empty()) {
    write_alarms_csv(out, r.alarms);
  } else {
    auto f = open_output(alarms_path);
    write_alarms_csv(f, r.alarms);
    out << r.alarms.size() << " alarm(s) over " << r.observations << " observation(s); written to " << alarms_path
        << '\n';
  }
  if (opts.trajectory) {
    std::string path = opts.trajectory_path.empty() ? cfg.output.trajectory_csv : opts.trajectory_path;
    if (path.empty()) path = "trajectory.csv";
    auto f = open_output(path);
    write_trajectory_csv(f, r.trajectory, cfg.threshold.log_threshold);
  }
  return r;
}

// Entry point shared by the executable; returns the process exit code.
inline int run_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Mixture Shiryaev / Shiryaev-Roberts changepoint detection"};
  app.require_subcommand(1);

  std::string config_path, data_path;
  DetectOptions detect_opts;

  auto* calibrate = app.add_subcommand("calibrate", "Compute the detection threshold from the calibration section");
  calibrate->add_option("config", config_path, "JSON config file")->required();

  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo scenarios and write the JSON report");
  simulate->add_option("config", config_path, "JSON config file")->required();

  auto* detect = app.add_subcommand("detect", "Run the stopping rule over an observation CSV");
  detect->add_option("config", config_path, "JSON config file")->required();
  detect->add_option("data", data_path, "CSV file, one time step per row")->required();
  detect->add_flag("--multicyclic", detect_opts.multicyclic, "Restart after every alarm");
  detect->add_flag("--trajectory", detect_opts.trajectory, "Write the per-step log statistic");
  detect->add_option("--alarms-out", detect_opts.alarms_path, "Alarms CSV path (default: output.alarms_csv or stdout)");
  detect->add_option("--trajectory-out", detect_opts.trajectory_path,
                     "Trajectory CSV path (default: output.trajectory_csv or trajectory.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*calibrate) cmd_calibrate(config_path, out);
    if (*simulate) cmd_simulate(config_path, out);
    if (*detect) cmd_detect(config_path, data_path, detect_opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mixcpd

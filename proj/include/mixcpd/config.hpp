#pragma once

// Experiment configuration: a JSON document with sections model, prior,
// mixing, detector, calibration, montecarlo and output. Unknown keys are
// rejected, cross-field constraints are checked at load, and to_json()
// produces a canonical echo that reloads to the same document.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixcpd/calibration.hpp"
#include "mixcpd/detectors.hpp"
#include "mixcpd/errors.hpp"
#include "mixcpd/measures.hpp"
#include "mixcpd/models.hpp"

namespace mixcpd {

using Json = nlohmann::json;

enum class ScenarioType { kPfaTail, kPfaPosterior, kDelay, kAverageDelay, kIntegratedRisk, kLadder, kStatisticMean };

inline std::string to_string(ScenarioType t) {
  switch (t) {
    case ScenarioType::kPfaTail: return "pfa_tail";
    case ScenarioType::kPfaPosterior: return "pfa_posterior";
    case ScenarioType::kDelay: return "delay";
    case ScenarioType::kAverageDelay: return "average_delay";
    case ScenarioType::kIntegratedRisk: return "integrated_risk";
    case ScenarioType::kLadder: return "ladder";
    case ScenarioType::kStatisticMean: return "statistic_mean";
  }
  return "?";
}

struct Scenario {
  ScenarioType type = ScenarioType::kPfaTail;
  std::int64_t k = 0;                      // delay, ladder
  std::vector<double> theta;               // delay, average_delay, ladder
  std::vector<double> r_list{1.0};         // delay
  double r = 1.0;                          // average_delay, integrated_risk
  double c = 0.0;                          // integrated_risk
  std::vector<double> log_thresholds;      // ladder
  std::int64_t n = 0;                      // statistic_mean
};

struct MonteCarloSettings {
  std::int64_t trials = 0;
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::vector<Scenario> scenarios;
};

struct OutputSettings {
  std::string report;
  std::string ladder_csv;
  std::string alarms_csv;
  std::string trajectory_csv;
};

struct ExperimentConfig {
  Json model_json;
  Json prior_json;
  Json mixing_json;
  Json calibration_json;
  std::shared_ptr<const ObservationModel> model;
  ChangePrior prior = ChangePrior::geometric(0.5, 0.0);
  DetectorSpec detector;
  ThresholdSpec threshold;
  std::optional<MonteCarloSettings> montecarlo;
  OutputSettings output;

  const MixingGrid& grid() const { return model->grid(); }
  Json to_json() const;
};

namespace config_detail {

inline void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline const Json& require(const Json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(join(path, key), "required field missing");
  return obj.at(key);
}

inline double get_number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
  return x;
}

inline std::int64_t get_integer(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "must be an integer");
  return v.get<std::int64_t>();
}

inline std::string get_string(const Json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "must be a string");
  return v.get<std::string>();
}

inline std::vector<double> get_vector(const Json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline double number_or(const Json& obj, const std::string& path, const std::string& key, double fallback) {
  return obj.contains(key) ? get_number(obj.at(key), join(path, key)) : fallback;
}

// Runs `fn`, turning a DomainError from a library constructor into a
// ConfigError attributed to `field`.
template <class Fn>
auto attributed(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw ConfigError(field, e.what());
  }
}

inline ChangePrior parse_prior(const Json& j, Json& canon) {
  const std::string family = get_string(require(j, "prior", "family"), "prior.family");
  const double q = number_or(j, "prior", "q", 0.0);
  canon = {{"family", family}, {"q", q}};
  if (family == "geometric") {
    check_keys(j, "prior", {"family", "q", "rho"});
    const double rho = get_number(require(j, "prior", "rho"), "prior.rho");
    canon["rho"] = rho;
    return attributed("prior.rho", [&] { return ChangePrior::geometric(rho, q); });
  }
  if (family == "heavy_tail") {
    check_keys(j, "prior", {"family", "q", "c_exponent"});
    const double c = get_number(require(j, "prior", "c_exponent"), "prior.c_exponent");
    canon["c_exponent"] = c;
    return attributed("prior.c_exponent", [&] { return ChangePrior::heavy_tail(c, q); });
  }
  if (family == "point_mass") {
    check_keys(j, "prior", {"family", "q", "k0"});
    const std::int64_t k0 = get_integer(require(j, "prior", "k0"), "prior.k0");
    canon["k0"] = k0;
    return attributed("prior.k0", [&] { return ChangePrior::point_mass(k0, q); });
  }
  throw ConfigError("prior.family", "unknown family '" + family + "' (geometric, heavy_tail, point_mass)");
}

inline MixingGrid parse_mixing(const Json& j, Json& canon) {
  check_keys(j, "mixing", {"atoms", "weights", "uniform"});
  if (j.contains("uniform")) {
    if (j.contains("atoms") || j.contains("weights"))
      throw ConfigError("mixing.uniform", "cannot be combined with atoms/weights");
    const Json& u = j.at("uniform");
    check_keys(u, "mixing.uniform", {"lower", "upper", "counts"});
    const auto lower = get_vector(require(u, "mixing.uniform", "lower"), "mixing.uniform.lower");
    const auto upper = get_vector(require(u, "mixing.uniform", "upper"), "mixing.uniform.upper");
    const Json& cj = require(u, "mixing.uniform", "counts");
    if (!cj.is_array()) throw ConfigError("mixing.uniform.counts", "must be an array of integers");
    std::vector<int> counts;
    for (std::size_t i = 0; i < cj.size(); ++i)
      counts.push_back(static_cast<int>(get_integer(cj[i], "mixing.uniform.counts[" + std::to_string(i) + "]")));
    canon = {{"uniform", {{"lower", lower}, {"upper", upper}, {"counts", counts}}}};
    return attributed("mixing.uniform", [&] { return uniform_grid(lower, upper, counts); });
  }
  const Json& aj = require(j, "mixing", "atoms");
  if (!aj.is_array() || aj.empty()) throw ConfigError("mixing.atoms", "must be a non-empty array");
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < aj.size(); ++i) {
    const std::string f = "mixing.atoms[" + std::to_string(i) + "]";
    atoms.push_back(aj[i].is_number() ? Atom{get_number(aj[i], f)} : get_vector(aj[i], f));
  }
  std::vector<double> weights(atoms.size(), 1.0);
  if (j.contains("weights")) {
    weights = get_vector(j.at("weights"), "mixing.weights");
    if (weights.size() != atoms.size()) throw ConfigError("mixing.weights", "one weight per atom required");
  }
  canon = {{"atoms", atoms}, {"weights", weights}};
  return attributed("mixing", [&] { return MixingGrid(atoms, weights); });
}

inline HmmParams parse_hmm_params(const Json& j, const std::string& path) {
  check_keys(j, path, {"mean1", "mean2", "beta", "gamma"});
  HmmParams p;
  p.mean1 = get_number(require(j, path, "mean1"), path + ".mean1");
  p.mean2 = get_number(require(j, path, "mean2"), path + ".mean2");
  p.beta = get_number(require(j, path, "beta"), path + ".beta");
  p.gamma = get_number(require(j, path, "gamma"), path + ".gamma");
  return p;
}

inline std::shared_ptr<const ObservationModel> parse_model(const Json& j, MixingGrid grid, Json& canon) {
  const std::string type = get_string(require(j, "model", "type"), "model.type");
  if (type == "gaussian_iid") {
    check_keys(j, "model", {"type"});
    canon = {{"type", type}};
    return attributed("mixing.atoms", [&] { return std::make_shared<const GaussianIidModel>(std::move(grid)); });
  }
  if (type == "null_llr") {
    check_keys(j, "model", {"type", "dimension"});
    const std::int64_t dim = j.contains("dimension") ? get_integer(j.at("dimension"), "model.dimension") : 1;
    if (dim < 1) throw ConfigError("model.dimension", "must be >= 1");
    canon = {{"type", type}, {"dimension", dim}};
    return std::make_shared<const NullLlrModel>(std::move(grid), static_cast<std::size_t>(dim));
  }
  if (type == "multichannel_ar") {
    check_keys(j, "model", {"type", "channels"});
    const Json& cj = require(j, "model", "channels");
    if (!cj.is_array() || cj.empty()) throw ConfigError("model.channels", "must be a non-empty array");
    std::vector<ArChannel> channels;
    Json canon_channels = Json::array();
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const std::string path = "model.channels[" + std::to_string(i) + "]";
      check_keys(cj[i], path, {"ar_coeffs", "signal"});
      ArChannel ch;
      if (cj[i].contains("ar_coeffs")) ch.ar_coeffs = get_vector(cj[i].at("ar_coeffs"), path + ".ar_coeffs");
      const Json& sj = require(cj[i], path, "signal");
      check_keys(sj, path + ".signal", {"amplitude", "frequency", "phase"});
      ch.signal.amplitude = number_or(sj, path + ".signal", "amplitude", 1.0);
      ch.signal.frequency = number_or(sj, path + ".signal", "frequency", 0.0);
      ch.signal.phase = number_or(sj, path + ".signal", "phase", 0.0);
      canon_channels.push_back({{"ar_coeffs", ch.ar_coeffs},
                                {"signal",
                                 {{"amplitude", ch.signal.amplitude},
                                  {"frequency", ch.signal.frequency},
                                  {"phase", ch.signal.phase}}}});
      channels.push_back(std::move(ch));
    }
    canon = {{"type", type}, {"channels", canon_channels}};
    auto spec = attributed("model.channels", [&] { return MultichannelArSpec(std::move(channels)); });
    return attributed("mixing.atoms",
                      [&] { return std::make_shared<const MultichannelArModel>(std::move(spec), std::move(grid)); });
  }
  if (type == "hmm2") {
    check_keys(j, "model", {"type", "pre"});
    const HmmParams pre = parse_hmm_params(require(j, "model", "pre"), "model.pre");
    canon = {{"type", type},
             {"pre", {{"mean1", pre.mean1}, {"mean2", pre.mean2}, {"beta", pre.beta}, {"gamma", pre.gamma}}}};
    attributed("model.pre", [&] {
      pre.validate();
      return 0;
    });
    return attributed("mixing.atoms", [&] { return std::make_shared<const Hmm2Model>(pre, std::move(grid)); });
  }
  throw ConfigError("model.type", "unknown model '" + type + "' (gaussian_iid, multichannel_ar, hmm2, null_llr)");
}

inline DetectorSpec parse_detector(const Json& j, Json& canon) {
  check_keys(j, "detector", {"kind", "omega"});
  const std::string kind = get_string(require(j, "detector", "kind"), "detector.kind");
  DetectorSpec d;
  if (kind == "MS") {
    d.kind = DetectorKind::kMs;
    if (j.contains("omega")) throw ConfigError("detector.omega", "only meaningful for the MSR rule");
  } else if (kind == "MSR") {
    d.kind = DetectorKind::kMsr;
    d.omega = number_or(j, "detector", "omega", 0.0);
    if (!(d.omega >= 0.0)) throw ConfigError("detector.omega", "must be >= 0");
  } else {
    throw ConfigError("detector.kind", "must be \"MS\" or \"MSR\"");
  }
  canon = {{"kind", kind}};
  if (d.kind == DetectorKind::kMsr) canon["omega"] = d.omega;
  return d;
}

// D_{mu,r} over the grid, with mu = 0 for the MSR variant.
inline double derived_d(const ObservationModel& model, const ChangePrior& prior, double r, bool msr) {
  std::vector<double> info;
  for (const auto& atom : model.grid().atoms()) {
    const double i = attributed("calibration.D", [&] { return model.info_number(atom); });
    info.push_back(i);
  }
  return attributed("calibration.D", [&] { return d_constant(model.grid(), info, msr ? 0.0 : prior.mu(), r); });
}

inline ThresholdSpec parse_calibration(const Json& j, const ObservationModel& model, const ChangePrior& prior,
                                       const DetectorSpec& det, Json& canon) {
  const std::string kind = get_string(require(j, "calibration", "kind"), "calibration.kind");
  canon = {{"kind", kind}};
  if (kind == "ms_pfa") {
    check_keys(j, "calibration", {"kind", "alpha"});
    if (det.kind != DetectorKind::kMs) throw ConfigError("calibration.kind", "ms_pfa requires detector.kind MS");
    const double alpha = get_number(require(j, "calibration", "alpha"), "calibration.alpha");
    canon["alpha"] = alpha;
    return attributed("calibration.alpha", [&] { return ms_threshold(alpha, prior.q()); });
  }
  if (kind == "msr_pfa") {
    check_keys(j, "calibration", {"kind", "alpha"});
    if (det.kind != DetectorKind::kMsr) throw ConfigError("calibration.kind", "msr_pfa requires detector.kind MSR");
    const double alpha = get_number(require(j, "calibration", "alpha"), "calibration.alpha");
    canon["alpha"] = alpha;
    return attributed("calibration.alpha", [&] { return msr_threshold(alpha, det.omega, prior); });
  }
  if (kind == "bayes_cost" || kind == "msr_bayes_cost") {
    check_keys(j, "calibration", {"kind", "c", "r", "D"});
    const bool msr = kind == "msr_bayes_cost";
    if (msr != (det.kind == DetectorKind::kMsr))
      throw ConfigError("calibration.kind", kind + " requires detector.kind " + (msr ? "MSR" : "MS"));
    const double c = get_number(require(j, "calibration", "c"), "calibration.c");
    const double r = number_or(j, "calibration", "r", 1.0);
    if (!(r >= 1.0)) throw ConfigError("calibration.r", "must be >= 1");
    canon["c"] = c;
    canon["r"] = r;
    double d = 0.0;
    if (j.contains("D")) {
      d = get_number(j.at("D"), "calibration.D");
      canon["D"] = d;
    } else {
      d = derived_d(model, prior, r, msr);
    }
    return attributed("calibration.c", [&] {
      return msr ? msr_bayes_threshold(c, r, d, det.omega, prior) : bayes_threshold(c, r, d);
    });
  }
  if (kind == "fixed") {
    check_keys(j, "calibration", {"kind", "log_threshold"});
    const double la = get_number(require(j, "calibration", "log_threshold"), "calibration.log_threshold");
    canon["log_threshold"] = la;
    return fixed_threshold(la);
  }
  throw ConfigError("calibration.kind", "unknown kind '" + kind + "' (ms_pfa, msr_pfa, bayes_cost, msr_bayes_cost, fixed)");
}

inline Scenario parse_scenario(const Json& j, const std::string& path, const ObservationModel& model) {
  const std::string type = get_string(require(j, path, "type"), path + ".type");
  Scenario s;
  auto theta = [&] {
    const Json& t = require(j, path, "theta");
    auto v = t.is_number() ? std::vector<double>{get_number(t, path + ".theta")} : get_vector(t, path + ".theta");
    if (v.size() != model.grid().dimension())
      throw ConfigError(path + ".theta", "dimension must equal the atom dimension");
    return v;
  };
  auto k = [&] {
    const std::int64_t v = get_integer(require(j, path, "k"), path + ".k");
    if (v < 0) throw ConfigError(path + ".k", "must be >= 0");
    return v;
  };
  auto positive_r = [&](double r, const std::string& f) {
    if (!(r > 0.0)) throw ConfigError(f, "must be positive");
    return r;
  };
  if (type == "pfa_tail") {
    check_keys(j, path, {"type"});
    s.type = ScenarioType::kPfaTail;
  } else if (type == "pfa_posterior") {
    check_keys(j, path, {"type"});
    s.type = ScenarioType::kPfaPosterior;
  } else if (type == "delay") {
    check_keys(j, path, {"type", "k", "theta", "r"});
    s.type = ScenarioType::kDelay;
    s.k = k();
    s.theta = theta();
    if (j.contains("r")) {
      s.r_list = j.at("r").is_number() ? std::vector<double>{get_number(j.at("r"), path + ".r")}
                                       : get_vector(j.at("r"), path + ".r");
      if (s.r_list.empty()) throw ConfigError(path + ".r", "must not be empty");
      for (double r : s.r_list) positive_r(r, path + ".r");
    }
  } else if (type == "average_delay") {
    check_keys(j, path, {"type", "theta", "r"});
    s.type = ScenarioType::kAverageDelay;
    s.theta = theta();
    s.r = positive_r(number_or(j, path, "r", 1.0), path + ".r");
  } else if (type == "integrated_risk") {
    check_keys(j, path, {"type", "c", "r"});
    s.type = ScenarioType::kIntegratedRisk;
    s.c = get_number(require(j, path, "c"), path + ".c");
    if (!(s.c >= 0.0)) throw ConfigError(path + ".c", "must be >= 0");
    s.r = positive_r(number_or(j, path, "r", 1.0), path + ".r");
  } else if (type == "ladder") {
    check_keys(j, path, {"type", "k", "theta", "log_thresholds"});
    s.type = ScenarioType::kLadder;
    s.k = k();
    s.theta = theta();
    s.log_thresholds = get_vector(require(j, path, "log_thresholds"), path + ".log_thresholds");
    if (s.log_thresholds.size() < 4) throw ConfigError(path + ".log_thresholds", "at least 4 rungs required");
  } else if (type == "statistic_mean") {
    check_keys(j, path, {"type", "n"});
    s.type = ScenarioType::kStatisticMean;
    s.n = get_integer(require(j, path, "n"), path + ".n");
    if (s.n < 1) throw ConfigError(path + ".n", "must be >= 1");
  } else {
    throw ConfigError(path + ".type", "unknown scenario type '" + type + "'");
  }
  return s;
}

inline Json scenario_json(const Scenario& s) {
  Json j = {{"type", to_string(s.type)}};
  switch (s.type) {
    case ScenarioType::kDelay:
      j["k"] = s.k;
      j["theta"] = s.theta;
      j["r"] = s.r_list;
      break;
    case ScenarioType::kAverageDelay:
      j["theta"] = s.theta;
      j["r"] = s.r;
      break;
    case ScenarioType::kIntegratedRisk:
      j["c"] = s.c;
      j["r"] = s.r;
      break;
    case ScenarioType::kLadder:
      j["k"] = s.k;
      j["theta"] = s.theta;
      j["log_thresholds"] = s.log_thresholds;
      break;
    case ScenarioType::kStatisticMean:
      j["n"] = s.n;
      break;
    default:
      break;
  }
  return j;
}

inline MonteCarloSettings parse_montecarlo(const Json& j, const ObservationModel& model) {
  check_keys(j, "montecarlo", {"trials", "horizon", "seed", "workers", "scenarios"});
  MonteCarloSettings m;
  m.trials = get_integer(require(j, "montecarlo", "trials"), "montecarlo.trials");
  if (m.trials < 1) throw ConfigError("montecarlo.trials", "must be >= 1");
  m.horizon = get_integer(require(j, "montecarlo", "horizon"), "montecarlo.horizon");
  if (m.horizon < 1) throw ConfigError("montecarlo.horizon", "must be >= 1");
  const Json& seed = require(j, "montecarlo", "seed");
  if (!seed.is_number_unsigned()) throw ConfigError("montecarlo.seed", "must be a nonnegative integer");
  m.seed = seed.get<std::uint64_t>();
  if (j.contains("workers")) {
    const std::int64_t w = get_integer(j.at("workers"), "montecarlo.workers");
    if (w < 0) throw ConfigError("montecarlo.workers", "must be >= 0 (0 = all hardware threads)");
    m.workers = static_cast<unsigned>(w);
  }
  if (j.contains("scenarios")) {
    const Json& sj = j.at("scenarios");
    if (!sj.is_array()) throw ConfigError("montecarlo.scenarios", "must be an array");
    for (std::size_t i = 0; i < sj.size(); ++i)
      m.scenarios.push_back(parse_scenario(sj[i], "montecarlo.scenarios[" + std::to_string(i) + "]", model));
  }
  return m;
}

inline OutputSettings parse_output(const Json& j) {
  check_keys(j, "output", {"report", "ladder_csv", "alarms_csv", "trajectory_csv"});
  OutputSettings o;
  auto opt = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = get_string(j.at(key), std::string("output.") + key);
  };
  opt("report", o.report);
  opt("ladder_csv", o.ladder_csv);
  opt("alarms_csv", o.alarms_csv);
  opt("trajectory_csv", o.trajectory_csv);
  return o;
}

inline bool has_pfa_scenario(const MonteCarloSettings& m) {
  for (const auto& s : m.scenarios)
    if (s.type == ScenarioType::kPfaTail || s.type == ScenarioType::kPfaPosterior) return true;
  return false;
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const Json& doc) {
  using namespace config_detail;
  check_keys(doc, "", {"model", "prior", "mixing", "detector", "calibration", "montecarlo", "output"});
  ExperimentConfig cfg;
  Json canon_mixing, canon_detector;
  cfg.prior = parse_prior(require(doc, "", "prior"), cfg.prior_json);
  MixingGrid grid = parse_mixing(require(doc, "", "mixing"), cfg.mixing_json);
  cfg.model = parse_model(require(doc, "", "model"), std::move(grid), cfg.model_json);
  cfg.detector = parse_detector(require(doc, "", "detector"), canon_detector);
  cfg.threshold = parse_calibration(require(doc, "", "calibration"), *cfg.model, cfg.prior, cfg.detector,
                                    cfg.calibration_json);
  if (doc.contains("montecarlo")) {
    cfg.montecarlo = parse_montecarlo(doc.at("montecarlo"), *cfg.model);
    const auto& mc = *cfg.montecarlo;
    const auto alpha = cfg.threshold.inputs.find("alpha");
    if (has_pfa_scenario(mc) && alpha != cfg.threshold.inputs.end() &&
        !(cfg.prior.tail(mc.horizon) < 0.01 * alpha->second))
      throw ConfigError("montecarlo.horizon", "prior tail P(nu >= horizon) must be below 0.01 * alpha");
    for (const auto& s : mc.scenarios) {
      if ((s.type == ScenarioType::kDelay || s.type == ScenarioType::kLadder) && s.k >= mc.horizon)
        throw ConfigError("montecarlo.scenarios", "change point k must be below the horizon");
      if (s.type == ScenarioType::kPfaPosterior && cfg.detector.kind != DetectorKind::kMs)
        throw ConfigError("montecarlo.scenarios", "pfa_posterior requires detector.kind MS");
    }
  }
  if (doc.contains("output")) cfg.output = parse_output(doc.at("output"));
  return cfg;
}

inline Json ExperimentConfig::to_json() const {
  Json j;
  j["model"] = model_json;
  j["prior"] = prior_json;
  j["mixing"] = mixing_json;
  j["detector"] = {{"kind", to_string(detector.kind)}};
  if (detector.kind == DetectorKind::kMsr) j["detector"]["omega"] = detector.omega;
  j["calibration"] = calibration_json;
  if (montecarlo) {
    Json scen = Json::array();
    for (const auto& s : montecarlo->scenarios) scen.push_back(config_detail::scenario_json(s));
    j["montecarlo"] = {{"trials", montecarlo->trials},
                       {"horizon", montecarlo->horizon},
                       {"seed", montecarlo->seed},
                       {"workers", montecarlo->workers},
                       {"scenarios", scen}};
  }
  Json out = Json::object();
  if (!output.report.empty()) out["report"] = output.report;
  if (!output.ladder_csv.empty()) out["ladder_csv"] = output.ladder_csv;
  if (!output.alarms_csv.empty()) out["alarms_csv"] = output.alarms_csv;
  if (!output.trajectory_csv.empty()) out["trajectory_csv"] = output.trajectory_csv;
  if (!out.empty()) j["output"] = out;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace mixcpd

#include "icguard/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"

#include "icguard/errors.hpp"

namespace icguard {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError(ctx + " must be a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + it.key() + "' in " + ctx);
    }
  }
}

double get_num(const json& j, const char* key, double fallback,
               const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw ConfigError(ctx + "." + key + " must be a number");
  }
  return v.get<double>();
}

bool get_bool(const json& j, const char* key, bool fallback,
              const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) {
    throw ConfigError(ctx + "." + key + " must be a boolean");
  }
  return v.get<bool>();
}

std::vector<double> get_array(const json& j, const char* key, std::size_t n,
                              const std::string& ctx) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != n) {
    throw ConfigError(ctx + "." + key + " must be an array of " +
                      std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  out.reserve(n);
  for (const json& e : v) {
    if (!e.is_number()) {
      throw ConfigError(ctx + "." + key + " must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(what + " must be positive and finite");
  }
}

void require_nonnegative(double v, const std::string& what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError(what + " must be non-negative and finite");
  }
}

void parse_vehicle(const json& j, const std::string& ctx, VehicleParams* params,
                   VehicleState* init) {
  check_keys(j, ctx, {"tau", "length", "p", "v", "a"});
  params->tau = get_num(j, "tau", params->tau, ctx);
  params->length = get_num(j, "length", params->length, ctx);
  init->p = get_num(j, "p", init->p, ctx);
  init->v = get_num(j, "v", init->v, ctx);
  init->a = get_num(j, "a", init->a, ctx);
  require_positive(params->tau, ctx + ".tau");
  require_positive(params->length, ctx + ".length");
}

std::vector<std::pair<double, double>> parse_time_table(
    const json& v, const std::string& ctx) {
  if (!v.is_array()) {
    throw ConfigError(ctx + " must be an array of [time, value] pairs");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(v.size());
  double prev = -1.0;
  for (const json& e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
        !e[1].is_number()) {
      throw ConfigError(ctx + " entries must be [time, value] number pairs");
    }
    const double t = e[0].get<double>();
    const double val = e[1].get<double>();
    if (!std::isfinite(t) || !std::isfinite(val)) {
      throw ConfigError(ctx + " entries must be finite");
    }
    if (t < 0.0) {
      throw ConfigError(ctx + " times must be non-negative");
    }
    if (!out.empty() && t <= prev) {
      throw ConfigError(ctx + " times must be strictly increasing");
    }
    out.emplace_back(t, val);
    prev = t;
  }
  return out;
}

AttackSignal parse_attack(const json& j, const std::string& ctx,
                          double delta_bound) {
  check_keys(j, ctx, {"type", "onset", "magnitude", "samples"});
  AttackSignal out;
  std::string type = "none";
  if (j.contains("type")) {
    if (!j.at("type").is_string()) {
      throw ConfigError(ctx + ".type must be a string");
    }
    type = j.at("type").get<std::string>();
  }
  if (type == "none") {
    out.kind = AttackSignal::Kind::kNone;
    return out;
  }
  if (type == "step") {
    out.kind = AttackSignal::Kind::kStep;
    out.onset = get_num(j, "onset", 0.0, ctx);
    out.magnitude = get_num(j, "magnitude", 0.0, ctx);
    require_nonnegative(out.onset, ctx + ".onset");
    if (!(std::abs(out.magnitude) <= delta_bound)) {
      throw ConfigError(ctx + ".magnitude exceeds the assumed injection cap " +
                        std::to_string(delta_bound));
    }
    return out;
  }
  if (type == "piecewise") {
    out.kind = AttackSignal::Kind::kPiecewise;
    if (!j.contains("samples")) {
      throw ConfigError(ctx + ".samples is required for a piecewise signal");
    }
    out.samples = parse_time_table(j.at("samples"), ctx + ".samples");
    if (out.samples.empty()) {
      throw ConfigError(ctx + ".samples must not be empty");
    }
    for (const auto& [t, v] : out.samples) {
      (void)t;
      if (!(std::abs(v) <= delta_bound)) {
        throw ConfigError(ctx + ".samples exceed the assumed injection cap " +
                          std::to_string(delta_bound));
      }
    }
    return out;
  }
  throw ConfigError("unknown " + ctx + ".type '" + type + "'");
}

}  // namespace

double LeaderProfile::value_at(double t) const {
  if (samples.empty() || t < samples.front().first) return 0.0;
  double v = samples.front().second;
  for (const auto& [ts, vs] : samples) {
    if (ts <= t) {
      v = vs;
    } else {
      break;
    }
  }
  return v;
}

int ScenarioConfig::steps_per_measurement() const {
  return static_cast<int>(std::lround(1.0 / (measurement_rate * dt)));
}

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") +
                      e.what());
  }

  ScenarioConfig cfg;
  try {
    check_keys(j, "scenario",
               {"duration", "dt", "measurement_rate", "ic_trigger_distance",
                "leader", "follower", "r_tau", "controller", "noise",
                "uncertainty", "observer", "detector", "attack",
                "compensation", "leader_profile", "output"});

    cfg.duration = get_num(j, "duration", cfg.duration, "scenario");
    cfg.dt = get_num(j, "dt", cfg.dt, "scenario");
    cfg.measurement_rate =
        get_num(j, "measurement_rate", cfg.measurement_rate, "scenario");
    cfg.ic_trigger_distance = get_num(j, "ic_trigger_distance",
                                      cfg.ic_trigger_distance, "scenario");
    cfg.r_tau = get_num(j, "r_tau", cfg.r_tau, "scenario");

    if (j.contains("leader")) {
      parse_vehicle(j.at("leader"), "leader", &cfg.leader, &cfg.leader_init);
    }
    if (j.contains("follower")) {
      parse_vehicle(j.at("follower"), "follower", &cfg.follower,
                    &cfg.follower_init);
    }

    if (j.contains("controller")) {
      const json& c = j.at("controller");
      check_keys(c, "controller", {"h", "r_standstill", "kp", "kd"});
      cfg.controller.h = get_num(c, "h", cfg.controller.h, "controller");
      cfg.controller.r_standstill =
          get_num(c, "r_standstill", cfg.controller.r_standstill, "controller");
      cfg.controller.kp = get_num(c, "kp", cfg.controller.kp, "controller");
      cfg.controller.kd = get_num(c, "kd", cfg.controller.kd, "controller");
    }

    if (j.contains("noise")) {
      const json& n = j.at("noise");
      check_keys(n, "noise", {"bound", "distribution", "seed"});
      if (n.contains("bound")) {
        const std::vector<double> b = get_array(n, "bound", 4, "noise");
        for (int i = 0; i < 4; ++i) cfg.noise.bound[i] = b[i];
      }
      if (n.contains("distribution")) {
        if (!n.at("distribution").is_string()) {
          throw ConfigError("noise.distribution must be a string");
        }
        const std::string d = n.at("distribution").get<std::string>();
        if (d == "uniform") {
          cfg.noise.distribution = NoiseSpec::Dist::kUniform;
        } else if (d == "truncated_gaussian") {
          cfg.noise.distribution = NoiseSpec::Dist::kTruncatedGaussian;
        } else {
          throw ConfigError("unknown noise.distribution '" + d + "'");
        }
      }
      if (n.contains("seed")) {
        if (!n.at("seed").is_number_unsigned()) {
          throw ConfigError("noise.seed must be a non-negative integer");
        }
        cfg.noise.seed = n.at("seed").get<std::uint64_t>();
      }
    }

    if (j.contains("uncertainty")) {
      const json& u = j.at("uncertainty");
      check_keys(u, "uncertainty",
                 {"eta_bound", "delta_bound", "e1_init_bound"});
      cfg.eta_bound = get_num(u, "eta_bound", cfg.eta_bound, "uncertainty");
      cfg.delta_bound =
          get_num(u, "delta_bound", cfg.delta_bound, "uncertainty");
      if (u.contains("e1_init_bound")) {
        const std::vector<double> b =
            get_array(u, "e1_init_bound", 2, "uncertainty");
        cfg.e1_init_bound << b[0], b[1];
      }
    }

    if (j.contains("observer")) {
      const json& o = j.at("observer");
      check_keys(o, "observer", {"M", "K", "A22s"});
      if (o.contains("M")) {
        const std::vector<double> m = get_array(o, "M", 4, "observer");
        for (int i = 0; i < 4; ++i) cfg.observer.m_diag[i] = m[i];
      }
      if (o.contains("K")) {
        const std::vector<double> k = get_array(o, "K", 4, "observer");
        for (int i = 0; i < 4; ++i) cfg.observer.k_diag[i] = k[i];
      }
      if (o.contains("A22s")) {
        const json& s = o.at("A22s");
        Vec4 diag;
        if (s.is_number()) {
          diag.fill(s.get<double>());
        } else {
          const std::vector<double> d = get_array(o, "A22s", 4, "observer");
          for (int i = 0; i < 4; ++i) diag[i] = d[i];
        }
        cfg.observer.A22s.setZero();
        for (int i = 0; i < 4; ++i) cfg.observer.A22s(i, i) = diag[i];
      }
    }

    if (j.contains("detector")) {
      const json& d = j.at("detector");
      check_keys(d, "detector", {"dwell"});
      cfg.alarm_dwell = get_num(d, "dwell", cfg.alarm_dwell, "detector");
    }

    if (j.contains("attack")) {
      cfg.attack = parse_attack(j.at("attack"), "attack", cfg.delta_bound);
    }
    if (j.contains("compensation")) {
      cfg.compensation =
          parse_attack(j.at("compensation"), "compensation", cfg.delta_bound);
    }
    if (j.contains("leader_profile")) {
      cfg.leader_profile.samples =
          parse_time_table(j.at("leader_profile"), "leader_profile");
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, "output", {"csv", "metrics"});
      cfg.output.csv = get_bool(o, "csv", cfg.output.csv, "output");
      cfg.output.metrics = get_bool(o, "metrics", cfg.output.metrics, "output");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }

  // Cross-field validation.
  require_positive(cfg.duration, "duration");
  require_positive(cfg.dt, "dt");
  require_positive(cfg.measurement_rate, "measurement_rate");
  require_positive(cfg.ic_trigger_distance, "ic_trigger_distance");
  require_positive(cfg.r_tau, "r_tau");
  require_positive(cfg.controller.h, "controller.h");
  require_nonnegative(cfg.controller.r_standstill, "controller.r_standstill");
  require_positive(cfg.controller.kp, "controller.kp");
  require_positive(cfg.controller.kd, "controller.kd");
  for (int i = 0; i < 4; ++i) {
    require_positive(cfg.noise.bound[i],
                     "noise.bound[" + std::to_string(i) + "]");
    require_positive(cfg.observer.m_diag[i],
                     "observer.M[" + std::to_string(i) + "]");
    require_positive(cfg.observer.k_diag[i],
                     "observer.K[" + std::to_string(i) + "]");
    if (!(cfg.observer.A22s(i, i) < 0.0)) {
      throw ConfigError("observer.A22s entries must be negative");
    }
  }
  require_nonnegative(cfg.eta_bound, "uncertainty.eta_bound");
  require_nonnegative(cfg.delta_bound, "uncertainty.delta_bound");
  require_nonnegative(cfg.e1_init_bound(0), "uncertainty.e1_init_bound[0]");
  require_nonnegative(cfg.e1_init_bound(1), "uncertainty.e1_init_bound[1]");
  require_nonnegative(cfg.alarm_dwell, "detector.dwell");

  // Measurements must land exactly on simulation steps.
  const double meas_dt = 1.0 / cfg.measurement_rate;
  const double steps = meas_dt / cfg.dt;
  const double rounded = std::round(steps);
  if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * rounded) {
    throw ConfigError(
        "measurement interval 1/measurement_rate must be an integer multiple "
        "of dt");
  }

  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open configuration file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ModelBundle validate_and_build(const ScenarioConfig& cfg) {
  UncertainModel uncertain =
      assemble_uncertain(cfg.leader, cfg.follower, cfg.r_tau, cfg.eta_bound,
                         cfg.delta_bound, cfg.noise.bound);
  CanonicalModel canonical = canonical_transform(uncertain);
  ZeroAnalysis zeros = check_invariant_zeros(uncertain);
  require_detectable_zeros(zeros);
  MatchingRank matching = check_matching_rank(canonical);
  if (!matching.full_column_rank) {
    throw AssumptionError(
        "the injected corruption has no steady output signature; "
        "reconstruction and the EOI detector are undefined for this model");
  }
  HealthyBounds bounds(canonical, cfg.observer, cfg.e1_init_bound);
  AsymptoticLimits limits = asymptotic_limits(bounds);
  GainCheck gain_check =
      validate_switching_gain(canonical, cfg.observer, limits.e1_tilde);
  const Vec4 thresholds = eoi_threshold(limits, cfg.observer);
  return ModelBundle{std::move(uncertain), std::move(canonical), matching,
                     std::move(zeros),     gain_check,           std::move(bounds),
                     limits,               thresholds};
}

}  // namespace icguard

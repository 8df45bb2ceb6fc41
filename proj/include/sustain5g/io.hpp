#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sustain5g/errors.hpp"
#include "sustain5g/model.hpp"
#include "sustain5g/sim.hpp"
#include "sustain5g/sweep.hpp"

namespace sustain5g {

// Everything a run can be configured with, plus presence flags for the
// fields whose absence matters (failsafe requires an explicit threshold,
// simulate an explicit seed).
struct AppConfig {
  NetworkConfig network;
  std::optional<OptimizationConstraints> constraints;
  SweepSpec sweep;
  SimConfig sim;
  RefreshPolicyConfig policy;
  std::optional<std::uint64_t> sim_seed;
  bool s_n_threshold_set = false;
  bool m_o_threshold_set = false;
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(std::string("config field \"") + key +
                       "\" has the wrong type");
  }
}

inline OverheadInterpretation parse_interpretation(const std::string& s) {
  if (s == "integral") return OverheadInterpretation::IntegralForm;
  if (s == "printed") return OverheadInterpretation::PrintedForm;
  throw config_error("overhead_interpretation must be \"integral\" or "
                     "\"printed\", got \"" + s + "\"");
}

inline const char* interpretation_name(OverheadInterpretation f) {
  return f == OverheadInterpretation::IntegralForm ? "integral" : "printed";
}

}  // namespace detail

inline AppConfig parse_app_config(const nlohmann::json& j) {
  AppConfig app;
  if (j.contains("network")) {
    const auto& n = j.at("network");
    NetworkConfig& c = app.network;
    c.n_devices = detail::json_get<std::uint32_t>(n, "n_devices", c.n_devices);
    c.n_entities =
        detail::json_get<std::uint32_t>(n, "n_entities", c.n_entities);
    c.reachable_hops_inv = detail::json_get<std::uint32_t>(
        n, "reachable_hops_inv", c.reachable_hops_inv);
    c.passes = detail::json_get<std::uint32_t>(n, "passes", c.passes);
    c.update_rate = detail::json_get<double>(n, "update_rate", c.update_rate);
    c.arrival_rate =
        detail::json_get<double>(n, "arrival_rate", c.arrival_rate);
    const double t1 = detail::json_get<double>(n, "t1", c.window.lo);
    const double t2 = detail::json_get<double>(n, "t2", c.window.hi);
    if (!(t2 > t1))
      throw config_error("invalid network config: t2 - t1 > 0");
    c.window = RealInterval{t1, t2};
    c.initial_auth_overhead =
        detail::json_get<double>(n, "o_b", c.initial_auth_overhead);
    if (n.contains("s_n_threshold")) {
      c.sustainability_threshold =
          detail::json_get<double>(n, "s_n_threshold", 0.0);
      app.s_n_threshold_set = true;
    }
    if (n.contains("m_o_threshold")) {
      c.overhead_threshold = detail::json_get<double>(n, "m_o_threshold", 0.0);
      app.m_o_threshold_set = true;
    }
    if (n.contains("overhead_interpretation"))
      c.interpretation = detail::parse_interpretation(
          detail::json_get<std::string>(n, "overhead_interpretation", ""));
    if (n.contains("alpha_prime_time") && !n.at("alpha_prime_time").is_null())
      c.alpha_prime_time =
          detail::json_get<double>(n, "alpha_prime_time", 0.0);
  }

  if (j.contains("constraints")) {
    const auto& o = j.at("constraints");
    OptimizationConstraints c;
    c.attack_time = detail::json_get<double>(o, "attack_time", c.attack_time);
    c.safe_time = detail::json_get<double>(o, "safe_time", c.safe_time);
    c.utilization_time =
        detail::json_get<double>(o, "utilization_time", c.utilization_time);
    c.min_updates =
        detail::json_get<std::uint64_t>(o, "min_updates", c.min_updates);
    c.safety_margin =
        detail::json_get<double>(o, "safety_margin", c.safety_margin);
    app.constraints = c;
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    app.sweep.beta =
        detail::json_get<std::vector<double>>(s, "beta", app.sweep.beta);
    if (s.contains("alpha"))
      app.sweep.alpha =
          detail::json_get<std::vector<double>>(s, "alpha", {});
    app.sweep.alpha_rule =
        detail::json_get<std::string>(s, "alpha_rule", app.sweep.alpha_rule);
    app.sweep.q = detail::json_get<std::vector<std::uint32_t>>(
        s, "q", app.sweep.q);
    app.sweep.e = detail::json_get<std::vector<std::uint32_t>>(
        s, "e", app.sweep.e);
  }

  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    if (s.contains("seed"))
      app.sim_seed = detail::json_get<std::uint64_t>(s, "seed", 0);
    app.sim.trials =
        detail::json_get<std::uint64_t>(s, "trials", app.sim.trials);
    app.sim.horizon = detail::json_get<double>(s, "horizon", app.sim.horizon);
    app.sim.unit_window =
        detail::json_get<double>(s, "unit_window", app.sim.unit_window);
  }

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    if (p.contains("weights")) {
      const auto w =
          detail::json_get<std::vector<double>>(p, "weights", {});
      if (w.size() != 8)
        throw config_error("policy weights must list exactly 8 values");
      std::copy(w.begin(), w.end(), app.policy.weights.begin());
    }
    app.policy.threshold =
        detail::json_get<double>(p, "threshold", app.policy.threshold);
    app.policy.fs_window =
        detail::json_get<double>(p, "fs_window", app.policy.fs_window);
  }

  return app;
}

inline AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config parse error in " + path + ": " + e.what());
  }
  return parse_app_config(j);
}

// Re-serializes a resolved config; feeding this back through
// parse_app_config reproduces the run exactly (manifests embed it).
inline nlohmann::json app_config_to_json(const AppConfig& app) {
  nlohmann::json n{
      {"n_devices", app.network.n_devices},
      {"n_entities", app.network.n_entities},
      {"reachable_hops_inv", app.network.reachable_hops_inv},
      {"passes", app.network.passes},
      {"update_rate", app.network.update_rate},
      {"arrival_rate", app.network.arrival_rate},
      {"t1", app.network.window.lo},
      {"t2", app.network.window.hi},
      {"o_b", app.network.initial_auth_overhead},
      {"overhead_interpretation",
       detail::interpretation_name(app.network.interpretation)}};
  if (app.s_n_threshold_set)
    n["s_n_threshold"] = app.network.sustainability_threshold;
  if (app.m_o_threshold_set)
    n["m_o_threshold"] = app.network.overhead_threshold;
  if (app.network.alpha_prime_time)
    n["alpha_prime_time"] = *app.network.alpha_prime_time;

  nlohmann::json j{{"network", n}};
  if (app.constraints) {
    j["constraints"] = {{"attack_time", app.constraints->attack_time},
                        {"safe_time", app.constraints->safe_time},
                        {"utilization_time", app.constraints->utilization_time},
                        {"min_updates", app.constraints->min_updates},
                        {"safety_margin", app.constraints->safety_margin}};
  }
  nlohmann::json sweep{{"beta", app.sweep.beta},
                       {"alpha_rule", app.sweep.alpha_rule},
                       {"q", app.sweep.q},
                       {"e", app.sweep.e}};
  if (app.sweep.alpha) sweep["alpha"] = *app.sweep.alpha;
  j["sweep"] = sweep;

  nlohmann::json sim{{"trials", app.sim.trials},
                     {"horizon", app.sim.horizon},
                     {"unit_window", app.sim.unit_window}};
  if (app.sim_seed) sim["seed"] = *app.sim_seed;
  j["sim"] = sim;

  j["policy"] = {{"weights", app.policy.weights},
                 {"threshold", app.policy.threshold},
                 {"fs_window", app.policy.fs_window}};
  return j;
}

// ---------------------------------------------------------------------------
// Result serialization

inline nlohmann::json to_json(const ProbabilityEstimate& p) {
  return {{"estimate", p.estimate},
          {"standard_error", p.standard_error},
          {"samples", p.samples}};
}

inline nlohmann::json to_json(const SimStats& s) {
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& [name, est] : s.empirical_probabilities)
    probs[name] = to_json(est);
  return {{"empirical_probabilities", probs},
          {"message_total", s.message_total},
          {"session_messages", s.session_messages},
          {"auth_count", s.auth_count},
          {"refresh_count", s.refresh_count},
          {"key_update_count", s.key_update_count},
          {"arrival_count", s.arrival_count},
          {"attach_loss_count", s.attach_loss_count},
          {"traces",
           {{"width", s.traces.width},
            {"horizon", s.traces.horizon},
            {"arrivals", s.traces.arrivals},
            {"key_updates", s.traces.key_updates},
            {"messages", s.traces.messages}}}};
}

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr{{"name", row.name},
                      {"empirical", row.empirical},
                      {"analytic", row.analytic},
                      {"sigma", row.sigma},
                      {"sigma_rule", row.sigma_rule},
                      {"deviation", row.deviation},
                      {"pass", row.pass},
                      {"informational", row.informational},
                      {"note", row.note}};
    rows.push_back(std::move(jr));
  }
  return {{"all_pass", r.all_pass}, {"rows", rows}};
}

inline std::string traces_to_csv(const TraceBuckets& t) {
  std::string out = "bucket,t_lo,arrivals,key_updates,messages\n";
  char buf[128];
  for (std::size_t i = 0; i < t.arrivals.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.14e,%llu,%llu,%.14e\n", i,
                  static_cast<double>(i) * t.width,
                  static_cast<unsigned long long>(t.arrivals[i]),
                  static_cast<unsigned long long>(t.key_updates[i]),
                  t.messages[i]);
    out += buf;
  }
  return out;
}

inline std::string scan_to_csv(const FailSafeReport& r) {
  std::string out = "t,value\n";
  char buf[80];
  for (const auto& [t, v] : r.scan_points) {
    std::snprintf(buf, sizeof(buf), "%.14e,%.14e\n", t, v);
    out += buf;
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace sustain5g

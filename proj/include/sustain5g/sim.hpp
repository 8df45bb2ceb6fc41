#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "sustain5g/errors.hpp"
#include "sustain5g/keychain.hpp"
#include "sustain5g/model.hpp"
#include "sustain5g/rng.hpp"

namespace sustain5g {

struct SimConfig {
  std::uint64_t seed = 0;
  std::uint64_t trials = 100000;
  double horizon = 100.0;      // seconds simulated per run
  double unit_window = 1.0;    // window width for pmf estimation
};

inline void validate(const SimConfig& s) {
  if (s.trials < 1) throw config_error("invalid sim config: trials >= 1");
  if (!(s.horizon > 0.0)) throw config_error("invalid sim config: horizon > 0");
  if (!(s.unit_window > 0.0))
    throw config_error("invalid sim config: unit_window > 0");
}

struct ProbabilityEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

struct TraceBuckets {
  double width = 1.0;
  double horizon = 0.0;
  std::vector<std::uint64_t> arrivals;
  std::vector<std::uint64_t> key_updates;
  std::vector<double> messages;
};

struct SimStats {
  std::map<std::string, ProbabilityEstimate> empirical_probabilities;
  double message_total = 0.0;          // session passes + O_b per first auth
  std::uint64_t session_messages = 0;  // Q-pass messages only
  std::uint64_t auth_count = 0;        // first authentications completed
  std::uint64_t refresh_count = 0;     // policy-triggered key regenerations
  std::uint64_t key_update_count = 0;  // global key-update events
  std::uint64_t arrival_count = 0;
  std::uint64_t attach_loss_count = 0;
  TraceBuckets traces;
};

namespace detail {

inline unsigned thread_budget(std::uint64_t trials) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("SUSTAIN5G_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  if (n < 1) n = 1;
  if (trials < 4096) n = 1;  // not worth spawning for tiny jobs
  const std::uint64_t cap = std::max<std::uint64_t>(trials, 1);
  return static_cast<unsigned>(std::min<std::uint64_t>(n, cap));
}

// Runs fn(trial_index) over lanes. Each trial seeds its own generator, so
// the merged outcome is independent of the lane count.
template <class PerTrial>
void parallel_trials(std::uint64_t trials, PerTrial fn) {
  const unsigned lanes = thread_budget(trials);
  if (lanes == 1) {
    for (std::uint64_t i = 0; i < trials; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  const std::uint64_t chunk = (trials + lanes - 1) / lanes;
  for (unsigned l = 0; l < lanes; ++l) {
    const std::uint64_t lo = l * chunk;
    const std::uint64_t hi = std::min(trials, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([fn, lo, hi] {
      for (std::uint64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Histogram of Poisson counts: per trial, exponential inter-arrivals at
// `rate` accumulated until `window`; index k holds the number of trials
// that saw exactly k events. Deterministic per seed, lane-count invariant.
inline std::vector<std::uint64_t> sample_poisson_counts(double rate,
                                                        double window,
                                                        const SimConfig& sim) {
  if (!(rate > 0.0))
    throw std::domain_error("sample_poisson_counts: requires rate > 0");
  if (!(window > 0.0))
    throw std::domain_error("sample_poisson_counts: requires window > 0");
  validate(sim);

  const unsigned lanes = detail::thread_budget(sim.trials);
  std::vector<std::vector<std::uint64_t>> local(lanes);
  const std::uint64_t chunk = (sim.trials + lanes - 1) / lanes;

  auto run_lane = [&](unsigned lane) {
    auto& hist = local[lane];
    const std::uint64_t lo = lane * chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(sim.trials, lo + chunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      SplitMix64 rng(
          substream_seed(sim.seed, RngPurpose::PoissonTrial, i));
      std::uint64_t count = 0;
      double t = rng.exponential(rate);
      while (t < window) {
        ++count;
        t += rng.exponential(rate);
      }
      if (hist.size() <= count) hist.resize(count + 1, 0);
      ++hist[count];
    }
  };

  if (lanes == 1) {
    run_lane(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned l = 0; l < lanes; ++l) pool.emplace_back(run_lane, l);
    for (auto& t : pool) t.join();
  }

  std::size_t width = 1;
  for (const auto& h : local) width = std::max(width, h.size());
  std::vector<std::uint64_t> merged(width, 0);
  for (const auto& h : local)
    for (std::size_t k = 0; k < h.size(); ++k) merged[k] += h[k];
  return merged;
}

// Monte Carlo estimate of the connectivity-loss probability: per trial, N
// devices attach uniformly over E entities; loss iff none lands in the
// n^-1 reachable ones. Returns the loss frequency with binomial stderr.
inline ProbabilityEstimate estimate_connectivity_loss(const NetworkConfig& cfg,
                                                      const SimConfig& sim) {
  validate(cfg);
  validate(sim);
  const std::uint64_t e = cfg.n_entities;
  const std::uint64_t reach = cfg.reachable_hops_inv;
  const std::uint32_t n = cfg.n_devices;

  const unsigned lanes = detail::thread_budget(sim.trials);
  std::vector<std::uint64_t> losses(lanes, 0);
  const std::uint64_t chunk = (sim.trials + lanes - 1) / lanes;

  auto run_lane = [&](unsigned lane) {
    std::uint64_t local = 0;
    const std::uint64_t lo = lane * chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(sim.trials, lo + chunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      SplitMix64 rng(substream_seed(sim.seed, RngPurpose::AttachTrial, i));
      bool reached = false;
      for (std::uint32_t d = 0; d < n; ++d)
        if (rng.below(e) < reach) reached = true;
      if (!reached) ++local;
    }
    losses[lane] = local;
  };

  if (lanes == 1) {
    run_lane(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned l = 0; l < lanes; ++l) pool.emplace_back(run_lane, l);
    for (auto& t : pool) t.join();
  }

  std::uint64_t k = 0;
  for (auto v : losses) k += v;
  ProbabilityEstimate out;
  out.samples = sim.trials;
  out.estimate = static_cast<double>(k) / sim.trials;
  out.standard_error =
      std::sqrt(out.estimate * (1.0 - out.estimate) / sim.trials);
  return out;
}

// Weighted-threshold refresh policy parameters used by the simulator.
struct RefreshPolicyConfig {
  std::array<double, 8> weights{1, 1, 1, 1, 1, 1, 1, 1};
  double threshold = 4.0;
  // Fail-safe window handed to the policy; <= 0 means derive it from the
  // sustainability fail-safe point (falling back to t2 when none exists).
  double fs_window = 0.0;
};

inline double resolve_fs_window(const NetworkConfig& cfg,
                                const RefreshPolicyConfig& policy) {
  if (policy.fs_window > 0.0) return policy.fs_window;
  const auto fs =
      failsafe_point(cfg, FailSafeCriterion::SustainabilityRate);
  return fs.fail_safe_time.value_or(cfg.window.hi);
}

// Event-driven authentication run over [0, horizon]: Poisson(beta) vehicle
// arrivals attach per the connectivity model and run a Q-pass ShortRange
// session; a global Poisson(alpha) key-update clock triggers refresh-policy
// evaluation over every attached vehicle. Mutates `hierarchy` (single
// writer). Fully deterministic for a fixed (cfg, sim.seed, policy).
inline SimStats run_sim(const NetworkConfig& cfg, const SimConfig& sim,
                        KeyHierarchy& hierarchy,
                        const RefreshPolicyConfig& policy) {
  validate(cfg);
  validate(sim);
  const double fs_window = resolve_fs_window(cfg, policy);

  SplitMix64 rng_arr(substream_seed(sim.seed, RngPurpose::Arrivals));
  SplitMix64 rng_upd(substream_seed(sim.seed, RngPurpose::KeyUpdates));
  SplitMix64 rng_att(substream_seed(sim.seed, RngPurpose::AttachTrial));
  SplitMix64 rng_veh(substream_seed(sim.seed, RngPurpose::VehicleAttrs));

  std::vector<double> arrivals;
  for (double t = rng_arr.exponential(cfg.arrival_rate); t < sim.horizon;
       t += rng_arr.exponential(cfg.arrival_rate))
    arrivals.push_back(t);
  std::vector<double> updates;
  for (double t = rng_upd.exponential(cfg.update_rate); t < sim.horizon;
       t += rng_upd.exponential(cfg.update_rate))
    updates.push_back(t);

  SimStats stats;
  const std::size_t buckets = static_cast<std::size_t>(
      std::ceil(sim.horizon / sim.unit_window));
  stats.traces.width = sim.unit_window;
  stats.traces.horizon = sim.horizon;
  stats.traces.arrivals.assign(buckets, 0);
  stats.traces.key_updates.assign(buckets, 0);
  stats.traces.messages.assign(buckets, 0.0);
  auto bucket_of = [&](double t) {
    return std::min(buckets - 1,
                    static_cast<std::size_t>(t / sim.unit_window));
  };

  struct Vehicle {
    std::string id;
    SessionState session;
    PolicyBaseline baseline;
    double speed = 0;
    double heading_x = 0, heading_y = 0;
    double arrived = 0;
    double key_time = 0;     // last issuance time
    double eval_time = 0;    // last kinematics update
    std::uint64_t refreshes = 0;
  };
  std::vector<Vehicle> fleet;
  constexpr double kZoneWidth = 500.0;  // meters per zone cell

  auto complete_passes = [&](SessionState& s, double now) {
    for (std::uint32_t p = 0; p < cfg.passes; ++p) {
      s = advance_session(s, SessionEvent::PassCompleted);
      ++stats.session_messages;
      stats.traces.messages[bucket_of(now)] += 1.0;
    }
  };

  std::size_t ai = 0, ui = 0;
  while (ai < arrivals.size() || ui < updates.size()) {
    const bool take_arrival =
        ui >= updates.size() ||
        (ai < arrivals.size() && arrivals[ai] <= updates[ui]);

    if (take_arrival) {
      const double now = arrivals[ai++];
      ++stats.arrival_count;
      ++stats.traces.arrivals[bucket_of(now)];
      const std::uint64_t entity = rng_att.below(cfg.n_entities);
      // Vehicle attribute draws happen unconditionally so the attach
      // outcome never shifts the attribute stream.
      Vehicle v;
      v.speed = rng_veh.uniform01() * 40.0;
      const double angle = rng_veh.uniform01() * 6.283185307179586;
      v.heading_x = std::cos(angle);
      v.heading_y = std::sin(angle);
      VehicleContext ctx;
      ctx.speed = v.speed;
      ctx.location = {rng_veh.uniform01() * 1000.0,
                      rng_veh.uniform01() * 1000.0};
      ctx.associativity = 0.5 + 0.5 * rng_veh.uniform01();
      ctx.shared_sessions = 1;
      if (entity >= cfg.reachable_hops_inv) {
        ++stats.attach_loss_count;
        continue;
      }
      v.id = "veh-" + std::to_string(fleet.size());
      v.arrived = v.key_time = v.eval_time = now;
      v.baseline = {ctx.location, 0};
      hierarchy.track_vehicle(v.id, ctx);
      v.session.mode = SessionMode::ShortRange;
      v.session.passes_required = cfg.passes;
      v.session = advance_session(v.session, SessionEvent::Start);
      complete_passes(v.session, now);
      ++stats.auth_count;
      stats.traces.messages[bucket_of(now)] += cfg.initial_auth_overhead;
      hierarchy.issue_session_key(SessionMode::ShortRange, v.id);
      fleet.push_back(std::move(v));
    } else {
      const double now = updates[ui++];
      ++stats.key_update_count;
      ++stats.traces.key_updates[bucket_of(now)];
      for (auto& v : fleet) {
        VehicleContext* ctx = hierarchy.vehicle(v.id);
        const double dt = now - v.eval_time;
        const double ox = ctx->location[0];
        const double oy = ctx->location[1];
        ctx->location[0] += v.speed * dt * v.heading_x;
        ctx->location[1] += v.speed * dt * v.heading_y;
        const auto cell = [&](double m) {
          return static_cast<long long>(std::floor(m / kZoneWidth));
        };
        ctx->zone_traversals +=
            static_cast<std::uint64_t>(std::llabs(cell(ctx->location[0]) -
                                                  cell(ox)) +
                                       std::llabs(cell(ctx->location[1]) -
                                                  cell(oy)));
        ctx->last_update = now - v.key_time;
        ctx->refresh_rate =
            static_cast<double>(v.refreshes) /
            std::max(now - v.arrived, 1e-9);
        v.eval_time = now;

        const RefreshDecision d = evaluate_refresh_policy(
            *ctx, fs_window, policy.weights, policy.threshold, v.baseline);
        v.baseline = {ctx->location, ctx->zone_traversals};
        if (d.action == RefreshAction::Regenerate) {
          v.session =
              advance_session(v.session, SessionEvent::RefreshRequested);
          complete_passes(v.session, now);
          hierarchy.issue_session_key(SessionMode::ShortRange, v.id);
          ++v.refreshes;
          ++stats.refresh_count;
          v.key_time = now;
          ctx->last_update = 0.0;
        }
      }
    }
  }

  stats.message_total = static_cast<double>(stats.session_messages) +
                        cfg.initial_auth_overhead *
                            static_cast<double>(stats.auth_count);

  // Empirical probability rows.
  SimConfig mc = sim;
  mc.seed = substream_seed(sim.seed, RngPurpose::ConnectivityMc);
  stats.empirical_probabilities["connectivity_loss"] =
      estimate_connectivity_loss(cfg, mc);

  if (stats.arrival_count > 0) {
    ProbabilityEstimate attach;
    attach.samples = stats.arrival_count;
    attach.estimate = static_cast<double>(stats.attach_loss_count) /
                      static_cast<double>(stats.arrival_count);
    attach.standard_error = std::sqrt(
        attach.estimate * (1.0 - attach.estimate) / attach.samples);
    stats.empirical_probabilities["attach_loss"] = attach;
  }

  const std::uint64_t full_windows =
      static_cast<std::uint64_t>(sim.horizon / sim.unit_window);
  if (full_windows > 0) {
    std::uint64_t two = 0;
    for (std::uint64_t w = 0; w < full_windows && w < buckets; ++w)
      if (stats.traces.key_updates[w] == 2) ++two;
    ProbabilityEstimate pmf2;
    pmf2.samples = full_windows;
    pmf2.estimate = static_cast<double>(two) / full_windows;
    pmf2.standard_error =
        std::sqrt(pmf2.estimate * (1.0 - pmf2.estimate) / full_windows);
    stats.empirical_probabilities["key_updates_exactly_two"] = pmf2;
  }

  return stats;
}

// ---------------------------------------------------------------------------
// Comparison against the analytic layer

struct ComparisonRow {
  std::string name;
  double empirical = 0.0;
  double analytic = 0.0;
  double sigma = 0.0;        // standard error used by the rule
  double sigma_rule = 0.0;   // allowed multiple
  double deviation = 0.0;    // |empirical - analytic| / sigma
  bool pass = true;
  bool informational = false;
  std::string note;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool all_pass = true;
};

// Tabulates empirical vs analytic quantities. Sigma rules follow the
// statistical rows (4 sigma for the rare loss event, 3 sigma elsewhere);
// the Q row is informational because the analytic overhead has no Q term.
inline ComparisonReport compare_to_analytic(const SimStats& stats,
                                            const NetworkConfig& cfg) {
  validate(cfg);
  ComparisonReport report;

  const auto add = [&](ComparisonRow row) {
    if (!row.informational && row.sigma > 0.0)
      row.deviation = std::fabs(row.empirical - row.analytic) / row.sigma;
    row.pass = row.informational || row.deviation <= row.sigma_rule;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(std::move(row));
  };

  if (const auto it = stats.empirical_probabilities.find("connectivity_loss");
      it != stats.empirical_probabilities.end()) {
    ComparisonRow row;
    row.name = "connectivity_loss_probability";
    row.empirical = it->second.estimate;
    row.analytic = connectivity_loss_probability(cfg);
    row.sigma = std::sqrt(row.analytic * (1.0 - row.analytic) /
                          std::max<std::uint64_t>(it->second.samples, 1));
    row.sigma_rule = 4.0;
    add(std::move(row));
  }

  if (const auto it =
          stats.empirical_probabilities.find("key_updates_exactly_two");
      it != stats.empirical_probabilities.end()) {
    ComparisonRow row;
    row.name = "key_updates_exactly_two";
    row.empirical = it->second.estimate;
    // Poisson pmf at X=2 over one estimation window.
    row.analytic =
        key_update_pmf(cfg.update_rate * stats.traces.width, 1.0);
    row.sigma = std::sqrt(row.analytic * (1.0 - row.analytic) /
                          std::max<std::uint64_t>(it->second.samples, 1));
    row.sigma_rule = 3.0;
    add(std::move(row));
  }

  {
    ComparisonRow row;
    row.name = "arrival_count";
    row.empirical = static_cast<double>(stats.arrival_count);
    row.analytic = cfg.arrival_rate * stats.traces.horizon;
    row.sigma = std::sqrt(std::max(row.analytic, 1.0));
    row.sigma_rule = 3.0;
    add(std::move(row));
  }

  {
    ComparisonRow row;
    row.name = "message_overhead_q_dependence";
    row.informational = true;
    row.empirical = stats.message_total;
    try {
      row.analytic = message_overhead(cfg);
      row.note =
          "model excludes Q: analytic M_O is Q-free while session "
          "messages scale with Q";
    } catch (const std::domain_error&) {
      row.analytic = std::numeric_limits<double>::quiet_NaN();
      row.note = "model excludes Q; analytic M_O unavailable "
                 "(alpha' outside (0,1))";
    }
    add(std::move(row));
  }

  return report;
}

}  // namespace sustain5g

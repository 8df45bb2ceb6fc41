#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "sustain5g/errors.hpp"
#include "sustain5g/model.hpp"

namespace sustain5g {

// Parameter-study axes. Defaults reproduce the standard scenario grid:
// beta stepping 2..10 (scenarios A1..A5) with alpha = beta/2, Q in 1..5,
// E in 1..10.
struct SweepSpec {
  std::vector<double> beta{2, 4, 6, 8, 10};
  std::optional<std::vector<double>> alpha;  // explicit list, else rule
  std::string alpha_rule = "beta/2";
  std::vector<std::uint32_t> q{1, 2, 3, 4, 5};
  std::vector<std::uint32_t> e{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

struct SweepRow {
  std::string scenario;
  double beta = 0;
  double alpha = 0;
  std::uint32_t q = 0;
  std::uint32_t e = 0;
  bool feasible = false;
  std::string clause;  // violated invariant(s) or overhead note
  std::optional<double> s_n_closed;
  std::optional<double> s_n_quadrature;
  std::optional<double> s_n_asymptotic;
  std::optional<double> o_s;
  std::optional<double> m_o;
};

inline std::vector<double> resolve_sweep_alpha(const SweepSpec& spec) {
  if (spec.alpha) {
    if (spec.alpha->size() != spec.beta.size())
      throw config_error(
          "malformed sweep spec: alpha list must match beta list length");
    return *spec.alpha;
  }
  if (spec.alpha_rule != "beta/2")
    throw config_error("malformed sweep spec: unknown alpha rule \"" +
                       spec.alpha_rule + "\"");
  std::vector<double> out;
  out.reserve(spec.beta.size());
  for (double b : spec.beta) out.push_back(b / 2.0);
  return out;
}

// One row per (beta, q, e) combination, in lexicographic axis order.
// Infeasible rows carry the violated clause(s) and empty numeric cells; rows
// whose alpha' leaves (0,1) keep their sustainability columns but flag the
// overhead columns instead of failing the whole sweep.
inline std::vector<SweepRow> run_sweep(const NetworkConfig& base,
                                       const SweepSpec& spec) {
  if (spec.beta.empty() || spec.q.empty() || spec.e.empty())
    throw config_error("malformed sweep spec: empty axis");
  const std::vector<double> alphas = resolve_sweep_alpha(spec);

  std::vector<SweepRow> rows;
  rows.reserve(spec.beta.size() * spec.q.size() * spec.e.size());
  for (std::size_t bi = 0; bi < spec.beta.size(); ++bi) {
    for (const std::uint32_t q : spec.q) {
      for (const std::uint32_t e : spec.e) {
        NetworkConfig cfg = base;
        cfg.arrival_rate = spec.beta[bi];
        cfg.update_rate = alphas[bi];
        cfg.passes = q;
        cfg.n_entities = e;

        SweepRow row;
        row.scenario = "A" + std::to_string(bi + 1);
        row.beta = cfg.arrival_rate;
        row.alpha = cfg.update_rate;
        row.q = q;
        row.e = e;

        const auto violations = invariant_violations(cfg);
        row.feasible = violations.empty();
        if (!row.feasible) {
          row.clause = join_clauses(violations);
          rows.push_back(std::move(row));
          continue;
        }
        row.s_n_closed = sustainability_closed_form(cfg);
        row.s_n_quadrature = sustainability_quadrature(cfg);
        row.s_n_asymptotic = sustainability_asymptotic(cfg);
        try {
          row.o_s = signaling_overhead(cfg);
          row.m_o = message_overhead(cfg);
        } catch (const std::domain_error&) {
          row.clause = "alpha' in (0,1)";
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace detail {

inline std::string csv_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.14e", v);
  return buf;
}

inline std::string csv_cell(const std::optional<double>& v) {
  return v ? csv_real(*v) : std::string();
}

}  // namespace detail

inline constexpr const char* kSweepCsvHeader =
    "scenario,beta,alpha,q,n_entities,feasible,clause,"
    "s_n_closed,s_n_quadrature,s_n_asymptotic,o_s,m_o";

// Fixed column set and order; reals at 15 significant digits, scientific.
inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.scenario;
    out += ',';
    out += detail::csv_real(r.beta);
    out += ',';
    out += detail::csv_real(r.alpha);
    out += ',';
    out += std::to_string(r.q);
    out += ',';
    out += std::to_string(r.e);
    out += ',';
    out += r.feasible ? "true" : "false";
    out += ',';
    out += '"';
    out += r.clause;
    out += '"';
    out += ',';
    out += detail::csv_cell(r.s_n_closed);
    out += ',';
    out += detail::csv_cell(r.s_n_quadrature);
    out += ',';
    out += detail::csv_cell(r.s_n_asymptotic);
    out += ',';
    out += detail::csv_cell(r.o_s);
    out += ',';
    out += detail::csv_cell(r.m_o);
    out += '\n';
  }
  return out;
}

}  // namespace sustain5g

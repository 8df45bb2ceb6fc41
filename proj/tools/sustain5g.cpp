// sustain5g: sustainability and key-update scheduling analysis for
// backhaul-aware V2X deployments. Subcommands: analyze, sweep, simulate,
// failsafe, validate. See README for the config schema.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sustain5g/io.hpp"
#include "sustain5g/keychain.hpp"
#include "sustain5g/model.hpp"
#include "sustain5g/rng.hpp"
#include "sustain5g/sim.hpp"
#include "sustain5g/sweep.hpp"
#include "sustain5g/validate.hpp"
#include "sustain5g/version.hpp"

namespace {

using namespace sustain5g;

std::string real14(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.14e", v);
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct OutputSink {
  std::optional<std::filesystem::path> dir;
  std::vector<std::string> written;

  void write(const std::string& name, const std::string& content) {
    if (!dir) return;
    std::filesystem::create_directories(*dir);
    write_file((*dir / name).string(), content);
    written.push_back(name);
  }

  void manifest(const std::string& command, const std::string& config_path,
                const AppConfig& app, std::optional<std::uint64_t> seed) {
    if (!dir) return;
    nlohmann::json m{{"command", command},
                     {"config_path", config_path},
                     {"resolved_config", app_config_to_json(app)},
                     {"tool_version", kVersion},
                     {"timestamp", utc_timestamp()},
                     {"outputs", written}};
    if (seed) m["seed"] = *seed;
    write_file((*dir / "manifest.json").string(), m.dump(2) + "\n");
  }
};

std::array<std::uint8_t, 32> root_seed_bytes(std::uint64_t seed) {
  SplitMix64 g(substream_seed(seed, RngPurpose::RootKey));
  std::array<std::uint8_t, 32> out{};
  for (int w = 0; w < 4; ++w) {
    std::uint64_t v = g.next();
    for (int b = 0; b < 8; ++b) {
      out[w * 8 + b] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
  }
  return out;
}

std::vector<std::string> feasibility_clauses_for_report(const AppConfig& app) {
  const OptimizationConstraints opt =
      app.constraints.value_or(OptimizationConstraints{});
  return check_feasibility(app.network, opt, std::nullopt, std::nullopt);
}

int cmd_analyze(const AppConfig& app, const std::string& config_path,
                const std::string& format, OutputSink& sink) {
  const auto report = sustainability_report(app.network);
  const double os_integral =
      signaling_overhead(app.network, OverheadInterpretation::IntegralForm);
  const double os_printed =
      signaling_overhead(app.network, OverheadInterpretation::PrintedForm);
  const double mo = message_overhead(app.network);
  const auto clauses = feasibility_clauses_for_report(app);

  nlohmann::json j{
      {"s_n",
       {{"closed_form", report.closed_form},
        {"quadrature", report.quadrature},
        {"asymptotic", report.asymptotic},
        {"relative_gap", report.relative_gap}}},
      {"o_s",
       {{"integral", os_integral},
        {"printed", os_printed},
        {"interpretation",
         detail::interpretation_name(app.network.interpretation)}}},
      {"m_o", mo},
      {"feasibility",
       {{"feasible", clauses.empty()},
        {"violated", clauses},
        {"constraints_supplied", app.constraints.has_value()}}}};

  if (format == "json") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "S_N closed form      " << real14(report.closed_form) << "\n"
              << "S_N quadrature       " << real14(report.quadrature) << "\n"
              << "S_N asymptotic       " << real14(report.asymptotic) << "\n"
              << "closed/quad rel gap  " << real14(report.relative_gap)
              << "\n"
              << "O_S integral form    " << real14(os_integral) << "\n"
              << "O_S printed form     " << real14(os_printed) << "\n"
              << "O_S interpretation   "
              << detail::interpretation_name(app.network.interpretation)
              << "\n"
              << "M_O                  " << real14(mo) << "\n";
    if (clauses.empty()) {
      std::cout << "feasibility          ok"
                << (app.constraints ? "" : " (default constraints)") << "\n";
    } else {
      std::cout << "feasibility          violated: " << join_clauses(clauses)
                << "\n";
    }
  }
  sink.write("analyze.json", j.dump(2) + "\n");
  sink.manifest("analyze", config_path, app, std::nullopt);
  return 0;
}

int cmd_sweep(const AppConfig& app, const std::string& config_path,
              OutputSink& sink) {
  const auto rows = run_sweep(app.network, app.sweep);
  const std::string csv = sweep_to_csv(rows);
  if (sink.dir) {
    sink.write("sweep.csv", csv);
    sink.manifest("sweep", config_path, app, std::nullopt);
    std::cout << "wrote " << rows.size() << " rows\n";
  } else {
    std::cout << csv;
  }
  return 0;
}

int cmd_simulate(AppConfig& app, const std::string& config_path,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string& format, OutputSink& sink) {
  if (seed_flag) app.sim_seed = *seed_flag;
  if (!app.sim_seed)
    throw config_error(
        "simulate requires a seed (config sim.seed or --seed); no entropy "
        "default is provided");
  app.sim.seed = *app.sim_seed;

  KeyHierarchy hierarchy = build_hierarchy(root_seed_bytes(app.sim.seed));
  const SimStats stats = run_sim(app.network, app.sim, hierarchy, app.policy);
  const ComparisonReport report = compare_to_analytic(stats, app.network);

  const nlohmann::json jstats = to_json(stats);
  const nlohmann::json jreport = to_json(report);

  if (format == "json") {
    nlohmann::json j{{"stats", jstats}, {"comparison", jreport}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("%-32s %16s %16s %10s %6s %s\n", "row", "empirical",
                "analytic", "deviation", "pass", "note");
    for (const auto& row : report.rows) {
      std::printf("%-32s %16.8e %16.8e %9.3fs %6s %s\n", row.name.c_str(),
                  row.empirical, row.analytic, row.deviation,
                  row.informational ? "info" : (row.pass ? "yes" : "NO"),
                  row.note.c_str());
    }
    std::printf("arrivals=%llu auths=%llu refreshes=%llu key_updates=%llu "
                "session_messages=%llu message_total=%.6f\n",
                static_cast<unsigned long long>(stats.arrival_count),
                static_cast<unsigned long long>(stats.auth_count),
                static_cast<unsigned long long>(stats.refresh_count),
                static_cast<unsigned long long>(stats.key_update_count),
                static_cast<unsigned long long>(stats.session_messages),
                stats.message_total);
  }

  sink.write("simstats.json", jstats.dump(2) + "\n");
  sink.write("comparison.json", jreport.dump(2) + "\n");
  sink.write("traces.csv", traces_to_csv(stats.traces));
  sink.manifest("simulate", config_path, app, app.sim_seed);
  return 0;
}

int cmd_failsafe(const AppConfig& app, const std::string& config_path,
                 const std::string& criterion_name, const std::string& format,
                 OutputSink& sink) {
  FailSafeCriterion criterion;
  if (criterion_name == "sustainability") {
    criterion = FailSafeCriterion::SustainabilityRate;
    if (!app.s_n_threshold_set)
      throw config_error(
          "failsafe: sustainability criterion needs s_n_threshold in the "
          "config");
  } else if (criterion_name == "overhead") {
    criterion = FailSafeCriterion::MessageOverhead;
    if (!app.m_o_threshold_set)
      throw config_error(
          "failsafe: overhead criterion needs m_o_threshold in the config");
  } else {
    throw config_error("failsafe: unknown criterion \"" + criterion_name +
                       "\"");
  }

  const FailSafeReport report = failsafe_point(app.network, criterion);
  std::optional<double> t_u;
  if (app.constraints && report.fail_safe_time)
    t_u = key_utilization_window(*app.constraints, report);

  nlohmann::json j{{"criterion", criterion_name},
                   {"threshold", report.threshold}};
  j["fail_safe_time"] = report.fail_safe_time
                            ? nlohmann::json(*report.fail_safe_time)
                            : nlohmann::json();
  if (t_u) j["key_utilization_window"] = *t_u;

  if (format == "csv") {
    std::cout << scan_to_csv(report);
  } else {
    std::cout << "criterion        " << criterion_name << "\n"
              << "threshold        " << real14(report.threshold) << "\n";
    if (report.fail_safe_time) {
      std::cout << "fail-safe point  " << real14(*report.fail_safe_time)
                << "\n";
      if (*report.fail_safe_time == app.network.window.hi)
        std::cout << "note             criterion holds through t2\n";
    } else {
      std::cout << "fail-safe point  none\n"
                << "note             criterion already fails at t1; no "
                   "sustainable window\n";
    }
    if (t_u) std::cout << "t_u              " << real14(*t_u) << "\n";
  }

  sink.write("failsafe.json", j.dump(2) + "\n");
  sink.write("scan.csv", scan_to_csv(report));
  sink.manifest("failsafe", config_path, app, std::nullopt);
  return 0;
}

int cmd_validate(const std::string& only, double ei_tol) {
  static const std::vector<std::string> known{"ei", "quadrature",
                                              "closed-form", "overhead"};
  if (!only.empty() &&
      std::find(known.begin(), known.end(), only) == known.end())
    throw config_error("validate: unknown suite \"" + only +
                       "\" (ei, quadrature, closed-form, overhead)");
  const auto results = validation::run_validation(only, ei_tol);
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    std::printf("[%s] %s/%s: measured %.3e vs tol %.3e\n",
                r.pass ? "PASS" : "FAIL", r.suite.c_str(), r.name.c_str(),
                r.measured, r.tolerance);
  }
  std::printf("%zu checks, %s\n", results.size(),
              all ? "all passed" : "FAILURES present");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"sustainability model for key-update scheduling in "
               "backhaul-aware V2X networks"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", sustain5g::kVersion);

  std::string config_path;
  std::string out_dir;
  std::string format = "text";
  std::string criterion = "sustainability";
  std::string only;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  double ei_tol = 1e-9;

  auto* analyze = cli.add_subcommand("analyze", "evaluate one configuration");
  analyze->add_option("--config", config_path, "JSON config file")
      ->required();
  analyze->add_option("--out", out_dir, "output directory");
  analyze->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  auto* sweep = cli.add_subcommand("sweep", "parameter-study CSV");
  sweep->add_option("--config", config_path,
                    "JSON config file (defaults to the built-in grid)");
  sweep->add_option("--out", out_dir, "output directory");

  auto* simulate = cli.add_subcommand("simulate", "seeded Monte Carlo run");
  simulate->add_option("--config", config_path, "JSON config file")
      ->required();
  simulate->add_option("--seed", seed_value, "PRNG seed (64-bit)")
      ->each([&](const std::string&) { seed_given = true; });
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  auto* failsafe = cli.add_subcommand("failsafe", "fail-safe point scan");
  failsafe->add_option("--config", config_path, "JSON config file")
      ->required();
  failsafe->add_option("--criterion", criterion,
                       "sustainability or overhead");
  failsafe->add_option("--out", out_dir, "output directory");
  failsafe->add_option("--format", format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}));

  auto* validate_cmd =
      cli.add_subcommand("validate", "run the numeric oracle suites");
  validate_cmd->add_option("--only", only,
                           "restrict to one suite: ei, quadrature, "
                           "closed-form, overhead");
  validate_cmd->add_option("--ei-tol", ei_tol,
                           "relative tolerance for the Ei suite");

  std::string interp_override;
  for (auto* sub : {analyze, sweep, simulate, failsafe})
    sub->add_option("--interpretation", interp_override,
                    "override overhead_interpretation: integral or printed")
        ->check(CLI::IsMember({"integral", "printed"}));

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 2;
  }

  try {
    OutputSink sink;
    if (!out_dir.empty()) sink.dir = std::filesystem::path(out_dir);

    if (*validate_cmd) return cmd_validate(only, ei_tol);

    AppConfig app;
    bool config_given = false;
    for (auto* sub : {analyze, sweep, simulate, failsafe})
      if (sub->count("--config")) config_given = true;
    if (config_given) app = load_app_config(config_path);
    if (!interp_override.empty())
      app.network.interpretation =
          sustain5g::detail::parse_interpretation(interp_override);
    validate(app.network);

    if (*analyze) return cmd_analyze(app, config_path, format, sink);
    if (*sweep) return cmd_sweep(app, config_path, sink);
    if (*simulate)
      return cmd_simulate(
          app, config_path,
          seed_given ? std::optional<std::uint64_t>(seed_value)
                     : std::nullopt,
          format, sink);
    if (*failsafe)
      return cmd_failsafe(app, config_path, criterion, format, sink);
    return 2;
  } catch (const sustain5g::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

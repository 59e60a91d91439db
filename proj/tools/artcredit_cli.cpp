#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "artcredit/artcredit.hpp"

namespace fs = std::filesystem;
using namespace artcredit;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_config = 2;

// Raised for bad command-line values; mapped to the config exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Base seed (replication r uses seed + r)");
  cmd->add_option("--out-dir", f.out_dir, "Directory for output files")->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void print_checks(const std::vector<Check>& checks) {
  std::printf("%-6s  %-62s %14s %2s %14s\n", "status", "check", "measured", "", "target");
  for (const auto& c : checks) {
    std::printf("%-6s  %-62s %14.9g %2s %14.9g\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                c.relation.c_str(), c.target);
  }
  std::size_t failed = 0;
  for (const auto& c : checks) failed += c.passed ? 0 : 1;
  std::printf("%zu checks, %zu failed\n", checks.size(), failed);
}

Json checks_json(const std::vector<Check>& checks) {
  Json out = Json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name},
                   {"measured", c.measured},
                   {"target", c.target},
                   {"relation", c.relation},
                   {"tolerance", c.tolerance},
                   {"passed", c.passed}});
  }
  return out;
}

void write_manifest(const fs::path& dir, RunManifest m) {
  const auto path = (dir / "manifest.json").string();
  m.outputs.push_back(path);
  m.finished_at = utc_timestamp();
  write_text(path, to_json(m).dump(2) + "\n");
}

int cmd_simulate(const std::string& config_path, const CommonFlags& f, bool trace, std::optional<int> replications,
                 std::optional<std::int64_t> horizon) {
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.started_at = utc_timestamp();
  auto config = load_config(config_path);
  if (f.seed) config.base_seed = *f.seed;
  if (replications) config.replications = *replications;
  if (horizon) config.mechanism.horizon = *horizon;
  config.threads = f.threads;
  try {
    validate(config);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid override: ") + e.what());
  }
  manifest.seed = config.base_seed;
  manifest.config_hash = hex64(config_hash(config));

  const auto dir = prepare_out_dir(f.out_dir);
  std::ofstream trace_out;
  TraceSink sink;
  if (trace) {
    const auto path = (dir / "trace.jsonl").string();
    trace_out.open(path);
    if (!trace_out) throw std::runtime_error("cannot write '" + path + "'");
    sink = [&trace_out](const RoundRecord& r) { trace_out << round_json(r).dump() << '\n'; };
    manifest.outputs.push_back(path);
  }
  const auto summary = run_replicated(config, trace ? &sink : nullptr);
  trace_out.close();

  const auto json_path = (dir / "summary.json").string();
  write_text(json_path, summary_json(config, summary).dump(2) + "\n");
  manifest.outputs.push_back(json_path);
  const auto csv_path = (dir / "summary.csv").string();
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write '" + csv_path + "'");
    write_summary_csv(csv, summary);
  }
  manifest.outputs.push_back(csv_path);
  write_manifest(dir, manifest);

  std::printf("agent  share   v*(share)  realized_fraction  ci95\n");
  for (std::size_t i = 0; i < summary.agents.size(); ++i) {
    const auto& a = summary.agents[i];
    std::printf("%5zu  %.4f  %.6f   %.6f", i, a.fair_share, a.ideal_utility, a.realized_fraction.mean);
    if (a.realized_fraction.ci_low) {
      std::printf("           [%.6f, %.6f]", *a.realized_fraction.ci_low, *a.realized_fraction.ci_high);
    }
    std::printf("\n");
  }
  return exit_ok;
}

int cmd_verify(const std::string& scope, const CommonFlags& f, bool write_files) {
  RunManifest manifest;
  manifest.command = "verify " + scope;
  manifest.started_at = utc_timestamp();
  std::vector<Check> checks;
  if (scope == "identities" || scope == "all") {
    auto part = verify_identities();
    checks.insert(checks.end(), part.begin(), part.end());
  }
  if (scope == "bounds" || scope == "all") {
    auto part = verify_bounds();
    checks.insert(checks.end(), part.begin(), part.end());
  }
  print_checks(checks);
  if (write_files) {
    const auto dir = prepare_out_dir(f.out_dir);
    const auto path = (dir / "verify.json").string();
    write_text(path, Json{{"scope", scope}, {"checks", checks_json(checks)}}.dump(2) + "\n");
    manifest.outputs.push_back(path);
    write_manifest(dir, manifest);
  }
  return all_passed(checks) ? exit_ok : exit_failure;
}

int cmd_optimize(const CommonFlags& f, int steps, int refine, std::optional<std::string> grid_csv, bool no_grid) {
  if (steps < 10) throw UsageError("--steps must be >= 10");
  if (refine < 0) throw UsageError("--refine must be >= 0");
  RunManifest manifest;
  manifest.command = "optimize";
  manifest.started_at = utc_timestamp();
  const auto dir = prepare_out_dir(f.out_dir);
  std::ofstream grid;
  GridSink sink;
  if (!no_grid) {
    const auto path = grid_csv.value_or((dir / "grid.csv").string());
    grid.open(path);
    if (!grid) throw std::runtime_error("cannot write '" + path + "'");
    write_grid_header(grid);
    sink = [&grid](const GridRow& r) { write_grid_row(grid, r); };
    manifest.outputs.push_back(path);
  }
  const auto res = search({steps, refine, f.threads}, no_grid ? nullptr : &sink);
  grid.close();

  const auto p = res.best_point;
  const auto row = evaluate_point(p);
  Json out{{"steps", steps},
           {"refine", refine},
           {"evaluated", res.evaluated},
           {"best_value", res.best_value},
           {"best_point", {p.p1, p.p2, p.p3}},
           {"mu_at_best", {row.mu[0], row.mu[1]}},
           {"gamma_at_best", {row.gamma[0], row.gamma[1]}}};
  const auto json_path = (dir / "optimize.json").string();
  write_text(json_path, out.dump(2) + "\n");
  manifest.outputs.push_back(json_path);
  write_manifest(dir, manifest);
  std::printf("evaluated %lld points\nbest min_k mu = %.9f at p = (%.6f, %.6f, %.6f)\n",
              static_cast<long long>(res.evaluated), res.best_value, p.p1, p.p2, p.p3);
  return exit_ok;
}

int cmd_paper(const std::string& claim, const CommonFlags& f, std::optional<std::int64_t> horizon,
              std::optional<int> replications, int steps, int refine) {
  RunManifest manifest;
  manifest.command = "paper " + claim;
  manifest.started_at = utc_timestamp();
  ClaimOptions o;
  o.horizon = horizon;
  o.replications = replications;
  if (f.seed) o.seed = *f.seed;
  o.threads = f.threads;
  o.steps = steps;
  o.refine = refine;
  if (horizon && *horizon < 1) throw UsageError("--horizon must be >= 1");
  if (replications && *replications < 1) throw UsageError("--replications must be >= 1");
  if (steps < 10) throw UsageError("--steps must be >= 10");
  manifest.seed = o.seed;

  ClaimReport report;
  if (claim == "thm1") {
    report = reproduce_thm1(o);
  } else if (claim == "thm2") {
    report = reproduce_thm2(o);
  } else if (claim == "thm3") {
    report = reproduce_thm3(o);
  } else {
    report = reproduce_thm4(o);
  }
  print_checks(report.checks);
  std::printf("%s: %s\n", report.claim.c_str(), report.passed ? "PASS" : "FAIL");

  const auto dir = prepare_out_dir(f.out_dir);
  const auto path = (dir / ("paper_" + claim + ".json")).string();
  write_text(path, Json{{"claim", claim}, {"seed", o.seed}, {"passed", report.passed},
                        {"checks", checks_json(report.checks)}}
                           .dump(2) +
                       "\n");
  manifest.outputs.push_back(path);
  write_manifest(dir, manifest);
  return report.passed ? exit_ok : exit_failure;
}

int cmd_bounds(const std::vector<double>& alphas, const std::vector<double>& b_bars, int n,
               const std::string& format) {
  for (double b : b_bars) {
    if (!(b >= 2.0)) throw UsageError("--b-bar values must be >= 2 for the robustness bound");
  }
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw UsageError("--alpha values must lie in (0, 1]");
  }
  if (n < 2) throw UsageError("--n must be >= 2");
  Json rows = Json::array();
  if (format == "csv") {
    std::printf("%s\nalpha,b_bar,case_no_exhaust,case_exhaust,robustness,program_case1,program_case2\n",
                csv_schema_line);
  }
  for (double b : b_bars) {
    for (double a : alphas) {
      const auto r = robustness_lower_bound(a, b);
      const auto lp = lp_oracle(a, b, n);
      if (format == "csv") {
        std::printf("%.9g,%.9g,%.12g,%.12g,%.12g,%.12g,%.12g\n", a, b, r.case_no_exhaust, r.case_exhaust,
                    r.robustness, lp.value_case1, lp.value_case2);
      } else {
        rows.push_back({{"alpha", a},
                        {"b_bar", b},
                        {"case_no_exhaust", r.case_no_exhaust},
                        {"case_exhaust", r.case_exhaust},
                        {"robustness", r.robustness},
                        {"program_case1", lp.value_case1},
                        {"program_case2", lp.value_case2}});
      }
    }
  }
  if (format == "json") {
    Json constants = Json::array();
    for (int m = 2; m <= 10; ++m) {
      constants.push_back({{"n", m},
                           {"equilibrium_payment_constant", equilibrium_payment_constant(m)},
                           {"nash_fraction", nash_fraction(m)}});
    }
    std::cout << Json{{"bounds", rows}, {"equilibrium", constants}}.dump(2) << "\n";
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Artificial-credit allocation mechanisms: simulation, verification and bound search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version));

  CommonFlags sim_flags, verify_flags, opt_flags, paper_flags;

  auto* sim = app.add_subcommand("simulate", "Run a configured experiment with replications");
  std::string config_path;
  bool trace = false;
  std::optional<int> sim_reps;
  std::optional<std::int64_t> sim_horizon;
  sim->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common(sim, sim_flags);
  sim->add_flag("--trace", trace, "Write replication 0 rounds to trace.jsonl");
  sim->add_option("--replications", sim_reps, "Override the replication count");
  sim->add_option("--horizon", sim_horizon, "Override the horizon T");

  auto* verify = app.add_subcommand("verify", "Check closed forms against enumeration oracles");
  std::string scope = "all";
  verify->add_option("scope", scope, "identities, bounds or all")
      ->check(CLI::IsMember({"identities", "bounds", "all"}))
      ->capture_default_str();
  add_common(verify, verify_flags);

  auto* opt = app.add_subcommand("optimize", "Grid search of the payment-rule upper bound");
  int steps = 120;
  int refine = 2;
  std::optional<std::string> grid_csv;
  bool no_grid = false;
  opt->add_option("--steps", steps, "Grid steps per axis")->capture_default_str();
  opt->add_option("--refine", refine, "Local refinement passes")->capture_default_str();
  opt->add_option("--grid-csv", grid_csv, "Path for the evaluated-point CSV (default <out-dir>/grid.csv)");
  opt->add_flag("--no-grid-csv", no_grid, "Skip writing the evaluated-point CSV");
  add_common(opt, opt_flags);

  auto* paper = app.add_subcommand("paper", "Reproduce one theorem-level claim");
  std::string claim;
  std::optional<std::int64_t> paper_horizon;
  std::optional<int> paper_reps;
  int paper_steps = 120;
  int paper_refine = 2;
  paper->add_option("claim", claim, "thm1, thm2, thm3 or thm4")
      ->required()
      ->check(CLI::IsMember({"thm1", "thm2", "thm3", "thm4"}));
  paper->add_option("--horizon", paper_horizon, "Override the horizon T");
  paper->add_option("--replications", paper_reps, "Override the replication count");
  paper->add_option("--steps", paper_steps, "Grid steps per axis (thm2)")->capture_default_str();
  paper->add_option("--refine", paper_refine, "Refinement passes (thm2)")->capture_default_str();
  add_common(paper, paper_flags);

  auto* bounds = app.add_subcommand("bounds", "Print robustness bounds and program solutions");
  std::vector<double> alphas{0.01, 0.1, 0.25, 0.5, 0.9, 1.0};
  std::vector<double> b_bars{2.0, 8.0 / 3.0, std::exp(1.0)};
  int bounds_n = 10;
  std::string format = "csv";
  bounds->add_option("--alpha", alphas, "Fair shares to tabulate");
  bounds->add_option("--b-bar", b_bars, "Payment constants to tabulate");
  bounds->add_option("--n", bounds_n, "Agent count for the program oracle")->capture_default_str();
  bounds->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*sim) return cmd_simulate(config_path, sim_flags, trace, sim_reps, sim_horizon);
    if (*verify) return cmd_verify(scope, verify_flags, verify->count("--out-dir") > 0);
    if (*opt) return cmd_optimize(opt_flags, steps, refine, grid_csv, no_grid);
    if (*paper) return cmd_paper(claim, paper_flags, paper_horizon, paper_reps, paper_steps, paper_refine);
    if (*bounds) return cmd_bounds(alphas, b_bars, bounds_n, format);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_failure;
}

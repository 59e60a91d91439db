#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artcredit/bound_optimizer.hpp"
#include "artcredit/config.hpp"
#include "artcredit/sim_engine.hpp"

namespace artcredit {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* csv_schema_line = "# schema=1";

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Shortest text that parses back to the same double; "nan" for NaN.
inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline Json to_json(const Estimate& e) {
  const auto num = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
  Json j{{"mean", num(e.mean)}, {"std_error", num(e.std_error)}, {"count", e.count}};
  if (e.ci_low && e.ci_high) {
    j["ci95"] = {num(*e.ci_low), num(*e.ci_high)};
  } else {
    j["ci95"] = nullptr;
  }
  return j;
}

inline Json summary_json(const ExperimentConfig& config, const SimulationSummary& s) {
  Json agents = Json::array();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    agents.push_back({{"agent", i},
                      {"fair_share", a.fair_share},
                      {"ideal_utility", a.ideal_utility},
                      {"strategy", to_json(config.agents[i].strategy)},
                      {"realized_fraction", to_json(a.realized_fraction)},
                      {"utility_per_round", to_json(a.utility_per_round)},
                      {"wins", to_json(a.wins)},
                      {"spend", to_json(a.spend)},
                      {"tau", to_json(a.tau)},
                      {"tau_prime", to_json(a.tau_prime)},
                      {"forced", to_json(a.forced)}});
  }
  Json j{{"config_hash", hex64(config_hash(config))},
         {"horizon", s.horizon},
         {"base_seed", s.base_seed},
         {"replications", s.runs.size()},
         {"agents", agents}};
  if (config.focal_agent) j["focal_agent"] = *config.focal_agent;
  return j;
}

// One row per agent per replication, then one aggregate row per agent.
inline void write_summary_csv(std::ostream& out, const SimulationSummary& s) {
  out << csv_schema_line << '\n';
  out << "row_type,replication,seed,agent,fair_share,ideal_utility,wins,requests,bids,forced,suppressed,"
         "total_utility,spend,tau,tau_prime,realized_fraction,std_error,ci_low,ci_high\n";
  for (std::size_t r = 0; r < s.runs.size(); ++r) {
    const auto& run = s.runs[r];
    for (std::size_t i = 0; i < run.agents.size(); ++i) {
      const auto& a = run.agents[i];
      out << "replication," << r << ',' << run.seed << ',' << i << ',' << fmt_double(s.agents[i].fair_share) << ','
          << fmt_double(a.ideal_utility) << ',' << a.wins << ',' << a.requests << ',' << a.bids << ',' << a.forced
          << ',' << a.suppressed << ',' << fmt_double(a.total_utility) << ',' << fmt_double(a.spend) << ','
          << a.tau << ',' << a.tau_prime << ',' << fmt_double(a.realized_fraction) << ",,,\n";
    }
  }
  const auto opt = [](const std::optional<double>& x) { return x ? fmt_double(*x) : std::string(); };
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    out << "aggregate,,," << i << ',' << fmt_double(a.fair_share) << ',' << fmt_double(a.ideal_utility) << ','
        << fmt_double(a.wins.mean) << ",,," << fmt_double(a.forced.mean) << ",,"
        << fmt_double(a.utility_per_round.mean * static_cast<double>(s.horizon)) << ',' << fmt_double(a.spend.mean)
        << ',' << fmt_double(a.tau.mean) << ',' << fmt_double(a.tau_prime.mean) << ','
        << fmt_double(a.realized_fraction.mean) << ',' << fmt_double(a.realized_fraction.std_error) << ','
        << opt(a.realized_fraction.ci_low) << ',' << opt(a.realized_fraction.ci_high) << '\n';
  }
}

inline Json round_json(const RoundRecord& r) {
  Json j{{"t", r.t},
         {"requests", r.raw_requests},
         {"forced", r.forced},
         {"suppressed", r.suppressed},
         {"S", r.bidders},
         {"winner", r.winner ? Json(*r.winner) : Json(nullptr)},
         {"payment", r.payment},
         {"budgets", r.budgets_after}};
  if (!r.inner_bidders.empty() || r.inner_winner) {
    j["inner_S"] = r.inner_bidders;
    j["inner_winner"] = r.inner_winner ? Json(*r.inner_winner) : Json(nullptr);
  }
  return j;
}

inline void write_grid_header(std::ostream& out) {
  out << csv_schema_line << '\n' << "p1,p2,p3,k,gamma,mu,min_mu\n";
}

inline void write_grid_row(std::ostream& out, const GridRow& row) {
  char buf[192];
  for (int k = 1; k <= 2; ++k) {
    const auto idx = static_cast<std::size_t>(k - 1);
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g\n", row.point.p1, row.point.p2, row.point.p3, k,
                  row.gamma[idx], row.mu[idx], row.min_mu);
    out << buf;
  }
}

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

inline Json to_json(const RunManifest& m) {
  Json j{{"command", m.command},
         {"seed", m.seed},
         {"tool_version", tool_version},
         {"started_at", m.started_at},
         {"finished_at", m.finished_at},
         {"outputs", m.outputs}};
  j["config_hash"] = m.config_hash.empty() ? Json(nullptr) : Json(m.config_hash);
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace artcredit

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "artcredit/mechanism.hpp"
#include "artcredit/parallel.hpp"
#include "artcredit/rng.hpp"
#include "artcredit/strategy.hpp"
#include "artcredit/value_model.hpp"

namespace artcredit {

struct AgentSpec {
  double fair_share = 0.0;
  ValueDistribution dist = Uniform01{};
  Strategy strategy = Aggressive{};
};

struct ExperimentConfig {
  MechanismConfig mechanism;
  std::vector<AgentSpec> agents;
  std::optional<AgentId> focal_agent;
  int replications = 1;
  std::uint64_t base_seed = 0;
  int threads = 1;
};

inline std::vector<double> fair_shares(const ExperimentConfig& config) {
  std::vector<double> out;
  out.reserve(config.agents.size());
  for (const auto& a : config.agents) out.push_back(a.fair_share);
  return out;
}

// Throws std::invalid_argument / std::domain_error describing the first problem.
inline void validate(const ExperimentConfig& config) {
  if (config.agents.empty()) throw std::invalid_argument("at least one agent is required");
  if (config.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (config.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (config.focal_agent && *config.focal_agent >= config.agents.size()) {
    throw std::invalid_argument("focal agent " + std::to_string(*config.focal_agent) + " does not exist");
  }
  for (const auto& a : config.agents) {
    validate(a.dist);
    validate(a.strategy, config.agents.size());
  }
  Mechanism probe(config.mechanism, fair_shares(config));
}

struct AgentTally {
  std::int64_t wins = 0;
  std::int64_t requests = 0;   // raw requests from the strategy
  std::int64_t bids = 0;       // rounds in the bidder set
  std::int64_t forced = 0;     // rounds the minimum forced a bid
  std::int64_t suppressed = 0;  // rounds a request was dropped for budget
  double total_utility = 0.0;
  double spend = 0.0;
  std::int64_t tau = 0;        // first round after which the agent is barred, else T
  std::int64_t tau_prime = 0;  // first forced round, else T
  double ideal_utility = 0.0;  // v*(alpha_i)
  double realized_fraction = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::int64_t horizon = 0;
  std::vector<AgentTally> agents;
};

using TraceSink = std::function<void(const RoundRecord&)>;

namespace detail {

struct CoalitionGroup {
  Strategy strategy;
  std::vector<AgentId> members;
};

inline std::vector<CoalitionGroup> coalition_groups(const ExperimentConfig& config) {
  std::vector<CoalitionGroup> groups;
  for (AgentId i = 0; i < config.agents.size(); ++i) {
    const auto& s = config.agents[i].strategy;
    if (!is_coalition(s)) continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const CoalitionGroup& g) { return g.strategy == s; });
    if (it == groups.end()) {
      groups.push_back({s, {i}});
    } else {
      it->members.push_back(i);
    }
  }
  return groups;
}

}  // namespace detail

// Plays all T rounds with one rng stream. Per round the stream is consumed in
// a fixed order: values by agent id, strategy randomization by agent id, then
// the mechanism's draws.
inline RunResult run_one(const ExperimentConfig& config, std::uint64_t seed, const TraceSink* trace = nullptr) {
  const std::size_t n = config.agents.size();
  Mechanism mech(config.mechanism, fair_shares(config));
  std::vector<RequestPolicy> policies;
  policies.reserve(n);
  for (const auto& a : config.agents) policies.emplace_back(a.strategy, a.dist);
  const auto groups = detail::coalition_groups(config);

  const std::int64_t horizon = config.mechanism.horizon;
  RunResult result;
  result.seed = seed;
  result.horizon = horizon;
  result.agents.resize(n);
  for (auto& a : result.agents) {
    a.tau = horizon;
    a.tau_prime = horizon;
  }
  std::vector<bool> exhausted(n, false);
  std::vector<bool> triggered(n, false);
  const bool asymmetric = config.mechanism.kind == MechanismKind::AsymmetricFairShare;

  Rng rng(seed);
  std::vector<double> values(n);
  Bits requests(n);
  Bits coalition_pick(n);
  std::vector<double> live(n);
  RoundRecord rec;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) values[i] = sample_value(config.agents[i].dist, rng);

    for (std::size_t i = 0; i < n; ++i) live[i] = mech.spendable(i);
    std::fill(coalition_pick.begin(), coalition_pick.end(), 0);
    for (const auto& g : groups) {
      const CoalitionView view{g.members, live};
      for (AgentId j : coalition_bidders(g.strategy, view, t)) coalition_pick[j] = 1;
    }
    const auto cumulative = mech.cumulative_requests();
    for (std::size_t i = 0; i < n; ++i) {
      if (is_coalition(policies[i].strategy())) {
        requests[i] = coalition_pick[i];
      } else {
        const AgentView view{i, values[i], live[i], cumulative[i], t};
        requests[i] = policies[i].decide(view, nullptr, rng) ? 1 : 0;
      }
    }

    mech.step(requests, rng, rec);

    for (std::size_t i = 0; i < n; ++i) {
      auto& a = result.agents[i];
      a.requests += rec.raw_requests[i];
      a.forced += rec.forced[i];
      a.suppressed += rec.suppressed[i];
      if (rec.forced[i] && !triggered[i]) {
        triggered[i] = true;
        a.tau_prime = t;
      }
    }
    for (AgentId i : rec.bidders) ++result.agents[i].bids;
    if (rec.winner) {
      auto& w = result.agents[*rec.winner];
      ++w.wins;
      w.total_utility += values[*rec.winner];
      w.spend += rec.payment;
      const AgentId wi = *rec.winner;
      const bool now_exhausted =
          asymmetric ? mech.simulated_barred(*rec.inner_winner) : mech.barred(wi);
      if (now_exhausted && !exhausted[wi]) {
        exhausted[wi] = true;
        w.tau = t;
      }
    }
    if (trace != nullptr && *trace) (*trace)(rec);
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& a = result.agents[i];
    a.ideal_utility = ideal_utility(config.agents[i].dist, config.agents[i].fair_share);
    a.realized_fraction = a.ideal_utility > 0.0 ? a.total_utility / (static_cast<double>(horizon) * a.ideal_utility)
                                                : std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

// Mean with a normal-approximation 95% interval; no interval from one sample.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
};

inline Estimate estimate(std::span<const double> xs) {
  Estimate e;
  e.count = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  e.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  e.ci_low = e.mean - 1.96 * e.std_error;
  e.ci_high = e.mean + 1.96 * e.std_error;
  return e;
}

struct AgentSummary {
  double fair_share = 0.0;
  double ideal_utility = 0.0;
  Estimate realized_fraction;
  Estimate utility_per_round;
  Estimate wins;
  Estimate spend;
  Estimate tau;
  Estimate tau_prime;
  Estimate forced;
};

struct SimulationSummary {
  std::int64_t horizon = 0;
  std::uint64_t base_seed = 0;
  std::vector<RunResult> runs;  // replication-index order
  std::vector<AgentSummary> agents;
};

inline std::vector<AgentSummary> summarize(const ExperimentConfig& config, std::span<const RunResult> runs) {
  std::vector<AgentSummary> out(config.agents.size());
  std::vector<double> buf(runs.size());
  const auto column = [&](AgentId i, auto&& get) {
    for (std::size_t r = 0; r < runs.size(); ++r) buf[r] = get(runs[r].agents[i]);
    return estimate(buf);
  };
  const auto horizon = static_cast<double>(config.mechanism.horizon);
  for (AgentId i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    s.fair_share = config.agents[i].fair_share;
    s.ideal_utility = ideal_utility(config.agents[i].dist, s.fair_share);
    s.realized_fraction = column(i, [](const AgentTally& a) { return a.realized_fraction; });
    s.utility_per_round = column(i, [&](const AgentTally& a) { return a.total_utility / horizon; });
    s.wins = column(i, [](const AgentTally& a) { return static_cast<double>(a.wins); });
    s.spend = column(i, [](const AgentTally& a) { return a.spend; });
    s.tau = column(i, [](const AgentTally& a) { return static_cast<double>(a.tau); });
    s.tau_prime = column(i, [](const AgentTally& a) { return static_cast<double>(a.tau_prime); });
    s.forced = column(i, [](const AgentTally& a) { return static_cast<double>(a.forced); });
  }
  return out;
}

// Replication r uses seed base_seed + r. Results are folded in index order.
// The optional trace receives the rounds of replication 0 only.
inline SimulationSummary run_replicated(const ExperimentConfig& config, const TraceSink* trace = nullptr) {
  validate(config);
  const auto reps = static_cast<std::size_t>(config.replications);
  SimulationSummary summary;
  summary.horizon = config.mechanism.horizon;
  summary.base_seed = config.base_seed;
  summary.runs.resize(reps);
  parallel_for(reps, config.threads,
               [&](std::size_t r) { summary.runs[r] = run_one(config, config.base_seed + r, r == 0 ? trace : nullptr); });
  summary.agents = summarize(config, summary.runs);
  return summary;
}

// Focal agent's realized fraction of ideal utility against the configured
// opponents.
inline Estimate robustness_estimate(const ExperimentConfig& config) {
  if (!config.focal_agent) throw std::invalid_argument("robustness estimate needs a focal agent");
  return run_replicated(config).agents[*config.focal_agent].realized_fraction;
}

struct DeviationResult {
  AgentId focal = 0;
  double ideal_utility = 0.0;       // v*(alpha_focal), per round
  Estimate baseline_per_round;      // focal utility per round on the profile
  Estimate deviant_per_round;       // focal utility per round after deviating
  Estimate gain;                    // paired difference, same seeds
};

// Replaces the focal agent's strategy and compares per-round utility with the
// unmodified profile on identical seeds.
inline DeviationResult deviation_gain(const ExperimentConfig& config, const Strategy& deviation, AgentId focal) {
  validate(config);
  if (!enforces_minimum(config.mechanism.kind)) {
    throw std::invalid_argument("deviation probes need a mechanism with bidding minimums");
  }
  if (focal >= config.agents.size()) throw std::invalid_argument("focal agent does not exist");
  ExperimentConfig deviant = config;
  deviant.agents[focal].strategy = deviation;
  validate(deviant);

  const auto reps = static_cast<std::size_t>(config.replications);
  const auto horizon = static_cast<double>(config.mechanism.horizon);
  std::vector<double> base(reps), dev(reps), diff(reps);
  parallel_for(reps, config.threads, [&](std::size_t r) {
    const auto seed = config.base_seed + r;
    base[r] = run_one(config, seed).agents[focal].total_utility / horizon;
    dev[r] = run_one(deviant, seed).agents[focal].total_utility / horizon;
    diff[r] = dev[r] - base[r];
  });
  DeviationResult out;
  out.focal = focal;
  out.ideal_utility = ideal_utility(config.agents[focal].dist, config.agents[focal].fair_share);
  out.baseline_per_round = estimate(base);
  out.deviant_per_round = estimate(dev);
  out.gain = estimate(diff);
  return out;
}

}  // namespace artcredit

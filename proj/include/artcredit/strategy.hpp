#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "artcredit/mechanism.hpp"
#include "artcredit/rng.hpp"
#include "artcredit/value_model.hpp"

namespace artcredit {

// Bid on the top-beta quantile of values while budget is positive.
struct Aggressive {
  double beta = 0.0;
  bool operator==(const Aggressive&) const = default;
};

// Aggressive play for an agent holding k of m simulated shares: requests at
// rate 1 - (1 - 1/m)^k.
struct GroupAggressive {
  int k = 1;
  int m = 1;
  bool operator==(const GroupAggressive&) const = default;
};

// Coalition adversary: the k members with the highest remaining budget bid,
// until fewer than k members have budget left.
struct CoordinatedK {
  int k = 1;
  bool operator==(const CoordinatedK&) const = default;
};

// Coalition adversary: exactly one member with positive budget bids per round.
struct SingleBidderRotation {
  bool operator==(const SingleBidderRotation&) const = default;
};

// Requests with probability rho every round, ignoring value and budget.
struct FixedRate {
  double rho = 0.0;
  bool operator==(const FixedRate&) const = default;
};

// Same bidding rule as Aggressive(beta), used as an off-equilibrium probe.
struct ThresholdDeviation {
  double beta = 0.0;
  bool operator==(const ThresholdDeviation&) const = default;
};

using Strategy =
    std::variant<Aggressive, GroupAggressive, CoordinatedK, SingleBidderRotation, FixedRate, ThresholdDeviation>;

inline bool is_coalition(const Strategy& s) {
  return std::holds_alternative<CoordinatedK>(s) || std::holds_alternative<SingleBidderRotation>(s);
}

inline std::string strategy_name(const Strategy& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Aggressive>) {
          return "aggressive(" + std::to_string(v.beta) + ")";
        } else if constexpr (std::is_same_v<T, GroupAggressive>) {
          return "group_aggressive(" + std::to_string(v.k) + "/" + std::to_string(v.m) + ")";
        } else if constexpr (std::is_same_v<T, CoordinatedK>) {
          return "coordinated_k(" + std::to_string(v.k) + ")";
        } else if constexpr (std::is_same_v<T, SingleBidderRotation>) {
          return "single_bidder_rotation";
        } else if constexpr (std::is_same_v<T, FixedRate>) {
          return "fixed_rate(" + std::to_string(v.rho) + ")";
        } else {
          return "threshold_deviation(" + std::to_string(v.beta) + ")";
        }
      },
      s);
}

// Checks parameters; coalition sizes are checked against agent_count.
inline void validate(const Strategy& s, std::size_t agent_count) {
  std::visit(
      [agent_count](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Aggressive> || std::is_same_v<T, ThresholdDeviation>) {
          detail::require_probability(v.beta, "strategy beta");
        } else if constexpr (std::is_same_v<T, FixedRate>) {
          detail::require_probability(v.rho, "fixed rate rho");
        } else if constexpr (std::is_same_v<T, GroupAggressive>) {
          if (v.m < 1 || v.k < 1 || v.k > v.m) throw std::domain_error("group_aggressive needs 1 <= k <= m");
        } else if constexpr (std::is_same_v<T, CoordinatedK>) {
          if (v.k < 1 || static_cast<std::size_t>(v.k) + 1 > agent_count) {
            throw std::domain_error("coordinated_k needs 1 <= k <= n - 1, got k = " + std::to_string(v.k));
          }
        }
      },
      s);
}

// What one agent sees when deciding.
struct AgentView {
  AgentId id = 0;
  double value = 0.0;
  double budget = 0.0;
  std::int64_t cumulative_requests = 0;
  std::int64_t t = 1;
};

// Coalition members in ascending id order plus every agent's budget by id.
struct CoalitionView {
  std::span<const AgentId> members;
  std::span<const double> budgets;
};

// Members that request this round under a coalition strategy, ascending id.
inline std::vector<AgentId> coalition_bidders(const Strategy& s, const CoalitionView& view, std::int64_t t) {
  std::vector<AgentId> alive;
  for (AgentId j : view.members) {
    if (view.budgets[j] > 0.0) alive.push_back(j);
  }
  std::vector<AgentId> out;
  if (const auto* c = std::get_if<CoordinatedK>(&s)) {
    const auto k = static_cast<std::size_t>(c->k);
    if (alive.size() < k) return out;
    std::stable_sort(alive.begin(), alive.end(),
                     [&](AgentId a, AgentId b) { return view.budgets[a] > view.budgets[b]; });
    out.assign(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
  } else if (std::holds_alternative<SingleBidderRotation>(s)) {
    if (alive.empty()) return out;
    const auto idx = static_cast<std::size_t>((t - 1) % static_cast<std::int64_t>(alive.size()));
    out.push_back(alive[idx]);
  }
  return out;
}

// A strategy bound to one agent's value law, with its quantile rule cached.
class RequestPolicy {
 public:
  RequestPolicy(Strategy strategy, ValueDistribution dist) : strategy_(std::move(strategy)), dist_(std::move(dist)) {
    if (const auto* a = std::get_if<Aggressive>(&strategy_)) {
      rule_ = quantile_rule(dist_, a->beta);
    } else if (const auto* d = std::get_if<ThresholdDeviation>(&strategy_)) {
      rule_ = quantile_rule(dist_, d->beta);
    } else if (const auto* g = std::get_if<GroupAggressive>(&strategy_)) {
      rule_ = quantile_rule(dist_, group_request_rate(g->k, g->m));
    }
  }

  const Strategy& strategy() const { return strategy_; }
  const ValueDistribution& distribution() const { return dist_; }
  const QuantileRule& rule() const { return rule_; }

  // Individual strategies ignore the coalition view; coalition strategies
  // need it and ignore the value.
  bool decide(const AgentView& agent, const CoalitionView* coalition, Rng& rng) const {
    if (const auto* f = std::get_if<FixedRate>(&strategy_)) {
      if (f->rho >= 1.0) return true;
      if (f->rho <= 0.0) return false;
      return bernoulli(rng, f->rho);
    }
    if (is_coalition(strategy_)) {
      if (coalition == nullptr) throw std::invalid_argument("coalition strategy needs a coalition view");
      const auto chosen = coalition_bidders(strategy_, *coalition, agent.t);
      return std::binary_search(chosen.begin(), chosen.end(), agent.id);
    }
    return agent.budget > 0.0 && fires(rule_, agent.value, rng);
  }

 private:
  Strategy strategy_;
  ValueDistribution dist_;
  QuantileRule rule_{};
};

// Every agent plays the 1/n-aggressive strategy.
inline std::vector<Strategy> equilibrium_profile(std::size_t n, std::span<const ValueDistribution> dists) {
  if (n == 0) throw std::invalid_argument("equilibrium profile needs n >= 1");
  if (dists.size() != n) throw std::invalid_argument("one value distribution per agent is required");
  return std::vector<Strategy>(n, Aggressive{1.0 / static_cast<double>(n)});
}

}  // namespace artcredit

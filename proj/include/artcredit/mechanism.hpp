#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "artcredit/rng.hpp"

namespace artcredit {

using AgentId = std::size_t;
using Bits = std::vector<std::uint8_t>;

enum class MechanismKind { CompetitiveSubsidy, BiddingMinimum, AsymmetricFairShare, GeneralCost };

// p_k = b_bar * k / (k + 1) for k bidders.
struct SubsidySchedule {
  double b_bar = 8.0 / 3.0;
};

// p_1 .. p_n listed explicitly.
struct TableSchedule {
  std::vector<double> payments;
};

using PaymentSchedule = std::variant<SubsidySchedule, TableSchedule>;

inline double payment_for(const PaymentSchedule& schedule, std::size_t bidders) {
  if (bidders == 0) return 0.0;
  if (const auto* s = std::get_if<SubsidySchedule>(&schedule)) {
    const auto k = static_cast<double>(bidders);
    return s->b_bar * k / (k + 1.0);
  }
  const auto& table = std::get<TableSchedule>(schedule).payments;
  if (bidders > table.size()) {
    throw std::out_of_range("payment table has no entry for " + std::to_string(bidders) + " bidders");
  }
  return table[bidders - 1];
}

// Largest charge any single round can levy with up to max_bidders bidders.
inline double max_payment(const PaymentSchedule& schedule, std::size_t max_bidders) {
  double best = 0.0;
  for (std::size_t k = 1; k <= max_bidders; ++k) best = std::max(best, payment_for(schedule, k));
  return best;
}

// Box 0 < p1 <= 2e, p2 <= 4e, p3 <= 12e outside which aggressive play cannot
// be better than 1/2-robust. Violations are reported, never rejected.
inline std::vector<std::string> admissible_box_warnings(const TableSchedule& table) {
  const double e = std::exp(1.0);
  const double caps[3] = {2.0 * e, 4.0 * e, 12.0 * e};
  std::vector<std::string> out;
  if (!table.payments.empty() && table.payments[0] <= 0.0) out.emplace_back("p1 <= 0 lies outside the admissible box");
  for (std::size_t i = 0; i < 3 && i < table.payments.size(); ++i) {
    if (table.payments[i] > caps[i]) {
      out.push_back("p" + std::to_string(i + 1) + " = " + std::to_string(table.payments[i]) +
                    " exceeds admissible cap " + std::to_string(caps[i]));
    }
  }
  return out;
}

struct MechanismConfig {
  MechanismKind kind = MechanismKind::CompetitiveSubsidy;
  std::int64_t horizon = 1;
  PaymentSchedule payment = SubsidySchedule{};
  // Bidding-minimum slack in rounds; unset means sqrt(T ln T).
  std::optional<double> underbidding_allowance;
  // Asymmetric variant only: shares must be k_i / m.
  int common_denominator = 0;
};

inline double default_underbidding_allowance(std::int64_t horizon) {
  const auto t = static_cast<double>(horizon);
  return horizon > 1 ? std::sqrt(t * std::log(t)) : 0.0;
}

inline double underbidding_allowance(const MechanismConfig& config) {
  return config.underbidding_allowance.value_or(default_underbidding_allowance(config.horizon));
}

// P(Binomial(k, 1/m) >= 1): the request rate that makes k simulated agents
// bid i.i.d. Bernoulli(1/m).
inline double group_request_rate(int k, int m) {
  return 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(m), static_cast<double>(k));
}

inline bool enforces_minimum(MechanismKind kind) {
  return kind == MechanismKind::BiddingMinimum || kind == MechanismKind::AsymmetricFairShare;
}

// k i.i.d. Bernoulli(1/m) bits conditioned on at least one being 1. Bits are
// drawn left to right from their exact conditional laws: while no 1 has
// appeared and r bits remain, the next bit is 1 with probability
// (1/m) / (1 - (1 - 1/m)^r); after the first 1 the rest are unconditioned.
// Consumes exactly k uniforms.
inline void sample_conditioned_bernoulli(int k, int m, Rng& rng, Bits& out) {
  if (k < 1) throw std::invalid_argument("conditioned bernoulli needs k >= 1");
  if (m < k) throw std::invalid_argument("conditioned bernoulli needs k <= m");
  const double p = 1.0 / static_cast<double>(m);
  out.assign(static_cast<std::size_t>(k), 0);
  bool seen_one = false;
  for (int j = 0; j < k; ++j) {
    const double u = uniform01(rng);
    double prob = p;
    if (!seen_one) {
      const int remaining = k - j;
      prob = p / (1.0 - std::pow(1.0 - p, remaining));
    }
    if (u < prob) {
      out[static_cast<std::size_t>(j)] = 1;
      seen_one = true;
    }
  }
}

inline Bits sample_conditioned_bernoulli(int k, int m, Rng& rng) {
  Bits out;
  sample_conditioned_bernoulli(k, m, rng, out);
  return out;
}

// A budget at or below this fraction of its starting value counts as spent.
// Repeated subtraction of payments like 4/3 leaves rounding residue where
// exact arithmetic would land on zero.
inline constexpr double exhaustion_tolerance = 1e-9;

struct RoundRecord {
  std::int64_t t = 0;
  Bits raw_requests;
  Bits forced;      // turned on by the bidding minimum
  Bits suppressed;  // turned off by budget enforcement
  std::vector<AgentId> bidders;
  std::optional<AgentId> winner;
  double payment = 0.0;
  std::vector<double> budgets_after;
  // Asymmetric variant: simulated agents that entered the inner allocation.
  std::vector<std::size_t> inner_bidders;
  std::optional<std::size_t> inner_winner;
};

// One running instance of a mechanism. Single owner, stepped once per round.
class Mechanism {
 public:
  Mechanism(MechanismConfig config, std::vector<double> fair_shares)
      : config_(std::move(config)), shares_(std::move(fair_shares)) {
    validate_and_init();
  }

  const MechanismConfig& config() const { return config_; }
  std::size_t agent_count() const { return shares_.size(); }
  std::span<const double> fair_shares() const { return shares_; }
  std::int64_t horizon() const { return config_.horizon; }
  // Index of the next round to be played, starting at 1.
  std::int64_t round() const { return t_; }
  bool finished() const { return t_ > config_.horizon; }
  std::span<const double> budgets() const { return budgets_; }
  std::span<const std::int64_t> cumulative_requests() const { return cumulative_; }
  double minimum_rate(AgentId i) const { return minimum_rate_[i]; }
  double allowance() const { return allowance_; }
  bool barred(AgentId i) const { return budgets_[i] <= floor_[i]; }
  // Budget a strategy may plan with: zero once barred.
  double spendable(AgentId i) const { return barred(i) ? 0.0 : budgets_[i]; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Asymmetric variant internals; empty for the other kinds.
  std::span<const double> simulated_budgets() const { return sim_budgets_; }
  std::span<const AgentId> simulated_owner() const { return sim_owner_; }
  std::span<const int> group_sizes() const { return group_size_; }
  std::size_t group_offset(AgentId i) const { return group_offset_[i]; }
  bool simulated_barred(std::size_t s) const { return sim_budgets_[s] <= sim_floor_; }

  RoundRecord step(std::span<const std::uint8_t> requests, Rng& rng) {
    RoundRecord record;
    step(requests, rng, record);
    return record;
  }

  void step(std::span<const std::uint8_t> requests, Rng& rng, RoundRecord& out) {
    if (finished()) throw std::logic_error("mechanism stepped past its horizon");
    const std::size_t n = agent_count();
    if (requests.size() != n) throw std::invalid_argument("request vector length differs from agent count");

    out.t = t_;
    out.raw_requests.assign(requests.begin(), requests.end());
    out.forced.assign(n, 0);
    out.suppressed.assign(n, 0);
    out.bidders.clear();
    out.inner_bidders.clear();
    out.winner.reset();
    out.inner_winner.reset();
    out.payment = 0.0;

    const auto t = static_cast<double>(t_);
    const bool minimum = enforces_minimum(config_.kind);
    for (AgentId i = 0; i < n; ++i) {
      std::uint8_t r = requests[i] ? 1 : 0;
      if (minimum && static_cast<double>(cumulative_[i] + r) <= minimum_rate_[i] * t - allowance_) {
        if (!r) out.forced[i] = 1;
        r = 1;
      }
      cumulative_[i] += r;
      if (config_.kind == MechanismKind::AsymmetricFairShare) {
        if (r) out.bidders.push_back(i);
      } else if (r && barred(i)) {
        out.suppressed[i] = 1;
      } else if (r) {
        out.bidders.push_back(i);
      }
    }

    if (config_.kind == MechanismKind::AsymmetricFairShare) {
      allocate_simulated(rng, out);
    } else if (!out.bidders.empty()) {
      const auto idx = uniform_index(rng, out.bidders.size());
      const AgentId w = out.bidders[idx];
      out.winner = w;
      out.payment = payment_for(config_.payment, out.bidders.size());
      budgets_[w] -= out.payment;
    }
    out.budgets_after = budgets_;
    ++t_;
  }

 private:
  void validate_and_init() {
    if (config_.horizon < 1) throw std::invalid_argument("horizon T must be >= 1");
    if (shares_.empty()) throw std::invalid_argument("at least one agent is required");
    double total = 0.0;
    for (double s : shares_) {
      if (!(s > 0.0)) throw std::invalid_argument("fair shares must be positive");
      total += s;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("fair shares must sum to 1, got " + std::to_string(total));
    }
    allowance_ = underbidding_allowance(config_);
    if (!(allowance_ >= 0.0)) throw std::invalid_argument("underbidding allowance must be >= 0");

    const bool table = std::holds_alternative<TableSchedule>(config_.payment);
    if (table && config_.kind != MechanismKind::GeneralCost) {
      throw std::invalid_argument("payment tables are only accepted by the general cost mechanism");
    }
    if (const auto* s = std::get_if<SubsidySchedule>(&config_.payment); s && !(s->b_bar >= 0.0)) {
      throw std::invalid_argument("b_bar must be >= 0");
    }
    if (table) {
      const auto& tab = std::get<TableSchedule>(config_.payment);
      if (tab.payments.size() < shares_.size()) {
        throw std::invalid_argument("payment table must list p_1..p_n for every possible bidder count");
      }
      for (double p : tab.payments) {
        if (!(p >= 0.0)) throw std::invalid_argument("payments must be >= 0");
      }
      warnings_ = admissible_box_warnings(tab);
    }

    const std::size_t n = shares_.size();
    budgets_.resize(n);
    floor_.resize(n);
    cumulative_.assign(n, 0);
    minimum_rate_.assign(n, 0.0);
    const auto horizon = static_cast<double>(config_.horizon);
    for (std::size_t i = 0; i < n; ++i) {
      budgets_[i] = shares_[i] * horizon;
      floor_[i] = exhaustion_tolerance * budgets_[i];
      minimum_rate_[i] = shares_[i];
    }
    if (config_.kind == MechanismKind::AsymmetricFairShare) init_simulated(horizon);
  }

  void init_simulated(double horizon) {
    const int m = config_.common_denominator;
    if (m < 1) throw std::invalid_argument("asymmetric mechanism needs a common denominator m >= 1");
    const std::size_t n = shares_.size();
    group_size_.resize(n);
    group_offset_.resize(n);
    int sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double scaled = shares_[i] * m;
      const auto k = static_cast<int>(std::lround(scaled));
      if (k < 1 || std::abs(scaled - k) > 1e-9) {
        throw std::invalid_argument("fair share " + std::to_string(shares_[i]) + " is not a multiple of 1/" +
                                    std::to_string(m));
      }
      group_offset_[i] = static_cast<std::size_t>(sum);
      group_size_[i] = k;
      sum += k;
      minimum_rate_[i] = group_request_rate(k, m);
      for (int j = 0; j < k; ++j) sim_owner_.push_back(i);
    }
    if (sum != m) throw std::invalid_argument("group sizes k_i must sum to m");
    sim_budgets_.assign(static_cast<std::size_t>(m), horizon / m);
    sim_floor_ = exhaustion_tolerance * horizon / m;
  }

  void allocate_simulated(Rng& rng, RoundRecord& out) {
    const int m = config_.common_denominator;
    for (AgentId i : out.bidders) {
      sample_conditioned_bernoulli(group_size_[i], m, rng, scratch_bits_);
      for (int j = 0; j < group_size_[i]; ++j) {
        if (!scratch_bits_[static_cast<std::size_t>(j)]) continue;
        const std::size_t sim = group_offset_[i] + static_cast<std::size_t>(j);
        if (simulated_barred(sim)) {
          out.suppressed[i] = 1;
        } else {
          out.inner_bidders.push_back(sim);
        }
      }
    }
    if (out.inner_bidders.empty()) return;
    const auto idx = uniform_index(rng, out.inner_bidders.size());
    const std::size_t w = out.inner_bidders[idx];
    out.inner_winner = w;
    out.winner = sim_owner_[w];
    out.payment = payment_for(config_.payment, out.inner_bidders.size());
    sim_budgets_[w] -= out.payment;
    budgets_[sim_owner_[w]] -= out.payment;
  }

  MechanismConfig config_;
  std::vector<double> shares_;
  std::int64_t t_ = 1;
  double allowance_ = 0.0;
  std::vector<double> budgets_;
  std::vector<double> floor_;
  std::vector<std::int64_t> cumulative_;
  std::vector<double> minimum_rate_;
  std::vector<std::string> warnings_;

  std::vector<int> group_size_;
  std::vector<std::size_t> group_offset_;
  std::vector<AgentId> sim_owner_;
  std::vector<double> sim_budgets_;
  double sim_floor_ = 0.0;
  Bits scratch_bits_;
};

}  // namespace artcredit

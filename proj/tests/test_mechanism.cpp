#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "artcredit/mechanism.hpp"

using namespace artcredit;

namespace {

// Upper 1e-4 quantile of chi-square(df), Wilson-Hilferty approximation.
double chi2_critical(int df) {
  const double z = 3.719;
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

double chi2(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

MechanismConfig subsidy(std::int64_t horizon, double b_bar = 8.0 / 3.0) {
  MechanismConfig c;
  c.kind = MechanismKind::CompetitiveSubsidy;
  c.horizon = horizon;
  c.payment = SubsidySchedule{b_bar};
  return c;
}

MechanismConfig asymmetric(std::int64_t horizon, int m) {
  MechanismConfig c;
  c.kind = MechanismKind::AsymmetricFairShare;
  c.horizon = horizon;
  c.common_denominator = m;
  return c;
}

}  // namespace

TEST(MechanismInit, BudgetsStartAtFairShareTimesHorizon) {
  Mechanism mech(subsidy(100), {0.5, 0.5});
  EXPECT_EQ(mech.budgets()[0], 50.0);
  EXPECT_EQ(mech.budgets()[1], 50.0);
}

TEST(MechanismInit, AsymmetricSplitsIntoEqualSimulatedAgents) {
  Mechanism mech(asymmetric(400, 4), {0.25, 0.75});
  ASSERT_EQ(mech.simulated_budgets().size(), 4u);
  for (double b : mech.simulated_budgets()) EXPECT_EQ(b, 100.0);
  EXPECT_EQ(mech.group_sizes()[0], 1);
  EXPECT_EQ(mech.group_sizes()[1], 3);
  EXPECT_EQ(mech.simulated_owner()[0], 0u);
  EXPECT_EQ(mech.simulated_owner()[3], 1u);
  EXPECT_DOUBLE_EQ(mech.minimum_rate(1), 1.0 - std::pow(0.75, 3));
}

TEST(MechanismInit, RejectsInvalidSetups) {
  EXPECT_THROW(Mechanism(subsidy(100), {0.6, 0.6}), std::invalid_argument);
  EXPECT_THROW(Mechanism(subsidy(0), {1.0}), std::invalid_argument);
  EXPECT_THROW(Mechanism(subsidy(10), {}), std::invalid_argument);
  EXPECT_THROW(Mechanism(subsidy(10), {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(Mechanism(subsidy(10, -1.0), {1.0}), std::invalid_argument);
  EXPECT_THROW(Mechanism(asymmetric(10, 4), {0.3, 0.7}), std::invalid_argument);
  EXPECT_THROW(Mechanism(asymmetric(10, 0), {1.0}), std::invalid_argument);

  MechanismConfig table;
  table.kind = MechanismKind::GeneralCost;
  table.horizon = 10;
  table.payment = TableSchedule{{1.0, 2.0}};
  EXPECT_THROW(Mechanism(table, {0.25, 0.25, 0.5}), std::invalid_argument);
  table.kind = MechanismKind::CompetitiveSubsidy;
  EXPECT_THROW(Mechanism(table, {0.5, 0.5}), std::invalid_argument);
}

TEST(MechanismInit, TableOutsideAdmissibleBoxWarnsButRuns) {
  MechanismConfig c;
  c.kind = MechanismKind::GeneralCost;
  c.horizon = 10;
  c.payment = TableSchedule{{4.0 / 3.0, 16.0 / 9.0, 2.0}};
  EXPECT_TRUE(Mechanism(c, {0.25, 0.25, 0.5}).warnings().empty());
  c.payment = TableSchedule{{9.0, 0.5, 2.0}};
  Mechanism odd(c, {0.25, 0.25, 0.5});
  EXPECT_FALSE(odd.warnings().empty());
  Rng rng(1);
  const auto rec = odd.step(Bits{1, 0, 0}, rng);
  EXPECT_EQ(rec.payment, 9.0);
}

TEST(MechanismStep, SingleBidderPaysSubsidizedPrice) {
  Mechanism mech(subsidy(100), {0.5, 0.5});
  Rng rng(1);
  const auto rec = mech.step(Bits{1, 0}, rng);
  ASSERT_TRUE(rec.winner.has_value());
  EXPECT_EQ(*rec.winner, 0u);
  EXPECT_DOUBLE_EQ(rec.payment, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(mech.budgets()[0], 50.0 - 4.0 / 3.0);
  EXPECT_EQ(mech.budgets()[1], 50.0);
}

TEST(MechanismStep, EmptyRequestSetLeavesBudgets) {
  Mechanism mech(subsidy(100), {0.5, 0.5});
  Rng rng(1);
  const auto rec = mech.step(Bits{0, 0}, rng);
  EXPECT_FALSE(rec.winner.has_value());
  EXPECT_EQ(rec.payment, 0.0);
  EXPECT_EQ(mech.budgets()[0], 50.0);
  EXPECT_EQ(mech.budgets()[1], 50.0);
}

TEST(MechanismStep, ThreeBiddersWinUniformlyAndPayTwo) {
  const std::int64_t rounds = 300'000;
  Mechanism mech(subsidy(rounds), {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  Rng rng(17);
  std::vector<double> wins(3, 0.0);
  for (std::int64_t t = 0; t < rounds; ++t) {
    // Budgets of 10^5 each; total spend caps out at 2 * 10^5 per agent, so
    // keep only the rounds before anyone could be exhausted.
    if (t == 100'000) break;
    const auto rec = mech.step(Bits{1, 1, 1}, rng);
    ASSERT_DOUBLE_EQ(rec.payment, 2.0);
    wins[*rec.winner] += 1.0;
  }
  for (double w : wins) EXPECT_NEAR(w / 100'000.0, 1.0 / 3.0, 0.005);
  EXPECT_LT(chi2(wins, std::vector<double>(3, 100'000.0 / 3.0)), chi2_critical(2));
}

TEST(MechanismStep, ExhaustedAgentIsSuppressed) {
  Mechanism mech(subsidy(2), {0.5, 0.5});
  Rng rng(1);
  mech.step(Bits{1, 0}, rng);
  ASSERT_LE(mech.budgets()[0], 0.0);
  const auto rec = mech.step(Bits{1, 1}, rng);
  EXPECT_EQ(rec.suppressed[0], 1);
  ASSERT_EQ(rec.bidders.size(), 1u);
  EXPECT_EQ(rec.bidders[0], 1u);
  EXPECT_EQ(*rec.winner, 1u);
}

TEST(MechanismStep, StepPastHorizonAndBadLengthThrow) {
  Mechanism mech(subsidy(1), {1.0});
  Rng rng(1);
  EXPECT_THROW(mech.step(Bits{1, 1}, rng), std::invalid_argument);
  mech.step(Bits{0}, rng);
  EXPECT_TRUE(mech.finished());
  EXPECT_THROW(mech.step(Bits{0}, rng), std::logic_error);
}

TEST(MechanismStep, SameSeedReplaysExactly) {
  auto run = [] {
    Mechanism mech(subsidy(500), {0.2, 0.3, 0.5});
    Rng rng(99);
    Rng req(5);
    std::vector<std::optional<AgentId>> winners;
    while (!mech.finished()) {
      Bits r(3);
      for (auto& b : r) b = bernoulli(req, 0.6);
      winners.push_back(mech.step(r, rng).winner);
    }
    return winners;
  };
  EXPECT_EQ(run(), run());
}

TEST(MechanismStep, CreditsAreConservedAgainstPayments) {
  Mechanism mech(subsidy(2000), {0.2, 0.3, 0.5});
  Rng rng(4), req(8);
  // Ledger kept by the test: start at share * T, subtract each charge.
  std::vector<double> ledger = {0.2 * 2000, 0.3 * 2000, 0.5 * 2000};
  while (!mech.finished()) {
    Bits r(3);
    for (auto& b : r) b = bernoulli(req, 0.5);
    const auto rec = mech.step(r, rng);
    if (rec.winner) ledger[*rec.winner] -= rec.payment;
  }
  for (int i = 0; i < 3; ++i) EXPECT_EQ(mech.budgets()[i], ledger[i]);
}

TEST(BiddingMinimum, ForcesSilentAgentOnceBehindBySlack) {
  MechanismConfig c;
  c.kind = MechanismKind::BiddingMinimum;
  c.horizon = 20;
  c.underbidding_allowance = 3.0;
  Mechanism mech(c, {0.5, 0.5});
  Rng rng(1);
  // Agent 0 never asks: first forced when 0 <= t/2 - 3, i.e. t = 6.
  for (int t = 1; t <= 20; ++t) {
    const auto rec = mech.step(Bits{0, 1}, rng);
    if (t < 6) {
      EXPECT_EQ(rec.forced[0], 0) << t;
    }
    if (t == 6) {
      EXPECT_EQ(rec.forced[0], 1);
    }
    EXPECT_EQ(rec.forced[1], 0);
    EXPECT_GT(static_cast<double>(mech.cumulative_requests()[0]), 0.5 * t - 3.0 - 1.0);
  }
}

TEST(BiddingMinimum, ZeroSlackHandTrace) {
  MechanismConfig c;
  c.kind = MechanismKind::BiddingMinimum;
  c.horizon = 6;
  c.underbidding_allowance = 0.0;
  Mechanism mech(c, {0.5, 0.5});
  Rng rng(1);
  // Forced whenever cum <= t / 2 with no own request.
  const int expected[] = {1, 1, 0, 1, 0, 1};
  for (int t = 1; t <= 6; ++t) {
    const auto rec = mech.step(Bits{0, 0}, rng);
    EXPECT_EQ(rec.forced[0], expected[t - 1]) << "t = " << t;
    EXPECT_EQ(rec.forced[1], expected[t - 1]) << "t = " << t;
  }
}

TEST(BiddingMinimum, ForcedRequestStillBarredByEmptyBudget) {
  MechanismConfig c;
  c.kind = MechanismKind::BiddingMinimum;
  c.horizon = 20;
  c.underbidding_allowance = 0.0;
  c.payment = SubsidySchedule{8.0};
  Mechanism mech(c, {0.5, 0.5});
  Rng rng(1);
  int barred = 0;
  while (!mech.finished()) {
    const std::vector<double> before(mech.budgets().begin(), mech.budgets().end());
    const auto rec = mech.step(Bits{0, 0}, rng);
    for (AgentId i = 0; i < 2; ++i) {
      if (rec.forced[i] && before[i] <= 0.0) {
        ++barred;
        EXPECT_EQ(rec.suppressed[i], 1);
        for (AgentId b : rec.bidders) EXPECT_NE(b, i);
      }
    }
  }
  EXPECT_GT(barred, 0);
}

TEST(ConditionedBernoulli, DegenerateAndInvalid) {
  Rng rng(1);
  EXPECT_EQ(sample_conditioned_bernoulli(1, 1, rng), Bits{1});
  EXPECT_EQ(sample_conditioned_bernoulli(1, 7, rng), Bits{1});
  EXPECT_THROW(sample_conditioned_bernoulli(0, 3, rng), std::invalid_argument);
  EXPECT_THROW(sample_conditioned_bernoulli(4, 3, rng), std::invalid_argument);
}

TEST(ConditionedBernoulli, TwoOfTwoIsUniformOverNonzeroPatterns) {
  Rng rng(5);
  const int draws = 300'000;
  std::map<Bits, double> counts;
  for (int i = 0; i < draws; ++i) counts[sample_conditioned_bernoulli(2, 2, rng)] += 1.0;
  ASSERT_EQ(counts.size(), 3u);
  std::vector<double> obs;
  for (const auto& [bits, c] : counts) {
    EXPECT_NEAR(c / draws, 1.0 / 3.0, 0.005);
    obs.push_back(c);
  }
  EXPECT_LT(chi2(obs, std::vector<double>(3, draws / 3.0)), chi2_critical(2));
}

TEST(ConditionedBernoulli, JointLawMatchesConditionedIid) {
  const std::pair<int, int> cases[] = {{3, 4}, {4, 10}, {2, 5}, {5, 6}};
  Rng rng(23);
  const int draws = 400'000;
  for (auto [k, m] : cases) {
    const double p = 1.0 / m;
    const double z = 1.0 - std::pow(1.0 - p, k);
    std::vector<double> obs(static_cast<std::size_t>(1) << k, 0.0);
    for (int i = 0; i < draws; ++i) {
      const auto bits = sample_conditioned_bernoulli(k, m, rng);
      std::size_t code = 0;
      for (int j = 0; j < k; ++j) code |= static_cast<std::size_t>(bits[j]) << j;
      obs[code] += 1.0;
    }
    EXPECT_EQ(obs[0], 0.0);
    std::vector<double> o, e;
    for (std::size_t code = 1; code < obs.size(); ++code) {
      const int ones = __builtin_popcountll(code);
      o.push_back(obs[code]);
      e.push_back(draws * std::pow(p, ones) * std::pow(1.0 - p, k - ones) / z);
    }
    EXPECT_LT(chi2(o, e), chi2_critical(static_cast<int>(o.size()) - 1)) << k << " of " << m;
  }
}

// With each real agent requesting at its group rate, the simulated bid
// pattern is i.i.d. Bernoulli(1/m). Exact enumeration for m <= 4.
TEST(AsymmetricComposition, ExactEnumerationSmallDenominators) {
  const std::vector<std::vector<int>> splits = {{1, 1}, {1, 2}, {1, 3}, {2, 2}, {1, 1, 2}, {1, 1, 1, 1}};
  for (const auto& ks : splits) {
    int m = 0;
    for (int k : ks) m += k;
    const double p = 1.0 / m;
    for (std::size_t code = 0; code < (std::size_t{1} << m); ++code) {
      double composed = 1.0;
      int offset = 0;
      for (int k : ks) {
        const double beta = 1.0 - std::pow(1.0 - p, k);
        int ones = 0;
        for (int j = 0; j < k; ++j) ones += (code >> (offset + j)) & 1u;
        if (ones == 0) {
          composed *= 1.0 - beta;
        } else {
          composed *= beta * std::pow(p, ones) * std::pow(1.0 - p, k - ones) / beta;
        }
        offset += k;
      }
      const int total = __builtin_popcountll(code);
      EXPECT_NEAR(composed, std::pow(p, total) * std::pow(1.0 - p, m - total), 1e-15);
    }
  }
}

TEST(AsymmetricComposition, MechanismInnerPatternsAreIid) {
  struct Case {
    std::vector<double> shares;
    int m;
  };
  const Case cases[] = {{{0.25, 0.75}, 4}, {{0.3, 0.7}, 10}, {{0.2, 0.2, 0.6}, 5}};
  const std::int64_t rounds = 200'000;
  for (const auto& cs : cases) {
    // Huge horizon so no simulated budget runs dry within the sampled rounds.
    Mechanism mech(asymmetric(1'000'000'000, cs.m), cs.shares);
    Rng rng(31), req(37);
    std::vector<double> marginal(static_cast<std::size_t>(cs.m), 0.0);
    std::vector<double> count_hist(static_cast<std::size_t>(cs.m) + 1, 0.0);
    for (std::int64_t t = 0; t < rounds; ++t) {
      Bits r(cs.shares.size());
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = bernoulli(req, mech.minimum_rate(i));
      const auto rec = mech.step(r, rng);
      for (auto s : rec.inner_bidders) marginal[s] += 1.0;
      count_hist[rec.inner_bidders.size()] += 1.0;
    }
    const double p = 1.0 / cs.m;
    for (double c : marginal) EXPECT_NEAR(c / rounds, p, 4.0 * std::sqrt(p * (1 - p) / rounds));

    // Number of simulated bidders is Binomial(m, 1/m); pool the sparse tail.
    std::vector<double> o, e;
    double tail_o = 0.0, tail_e = 0.0;
    for (int j = 0; j <= cs.m; ++j) {
      const double pj = std::tgamma(cs.m + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(cs.m - j + 1.0)) *
                        std::pow(p, j) * std::pow(1 - p, cs.m - j);
      if (rounds * pj >= 20.0 && tail_e == 0.0) {
        o.push_back(count_hist[j]);
        e.push_back(rounds * pj);
      } else {
        tail_o += count_hist[j];
        tail_e += rounds * pj;
      }
    }
    if (tail_e > 0.0) {
      o.push_back(tail_o);
      e.push_back(tail_e);
    }
    EXPECT_LT(chi2(o, e), chi2_critical(static_cast<int>(o.size()) - 1)) << "m = " << cs.m;
  }
}

TEST(AsymmetricMechanism, WinnerOwnsInnerWinnerAndPaysBothLedgers) {
  Mechanism mech(asymmetric(40, 4), {0.25, 0.75});
  Rng rng(2);
  double ledger[2] = {0.25 * 40, 0.75 * 40};
  double paid = 0.0;
  while (!mech.finished()) {
    const auto rec = mech.step(Bits{1, 1}, rng);
    if (rec.inner_winner) {
      ASSERT_TRUE(rec.winner.has_value());
      EXPECT_EQ(mech.simulated_owner()[*rec.inner_winner], *rec.winner);
      EXPECT_DOUBLE_EQ(rec.payment, 8.0 / 3.0 * rec.inner_bidders.size() / (1.0 + rec.inner_bidders.size()));
      ledger[*rec.winner] -= rec.payment;
      paid += rec.payment;
    } else {
      EXPECT_FALSE(rec.winner.has_value());
    }
  }
  EXPECT_EQ(mech.budgets()[0], ledger[0]);
  EXPECT_EQ(mech.budgets()[1], ledger[1]);
  double sim_total = 0.0;
  for (double b : mech.simulated_budgets()) sim_total += b;
  EXPECT_NEAR(sim_total, 40.0 - paid, 1e-9);
}

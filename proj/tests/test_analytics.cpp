#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "artcredit/analytics.hpp"
#include "artcredit/value_model.hpp"

using namespace artcredit;

namespace {

// Pascal-triangle pmf, independent of the library's factorial-free recursion.
std::vector<long double> pascal_pmf(int trials, long double p) {
  std::vector<long double> row{1.0L};
  for (int t = 0; t < trials; ++t) {
    std::vector<long double> next(row.size() + 1, 0.0L);
    for (std::size_t i = 0; i < row.size(); ++i) {
      next[i] += row[i] * (1.0L - p);
      next[i + 1] += row[i] * p;
    }
    row.swap(next);
  }
  return row;
}

template <class F>
double pascal_expect(int trials, long double p, F f) {
  const auto pmf = pascal_pmf(trials, p);
  long double s = 0.0L;
  for (std::size_t i = 0; i < pmf.size(); ++i) s += pmf[i] * f(static_cast<int>(i));
  return static_cast<double>(s);
}

}  // namespace

TEST(BinomExpectations, TwoPlayerValues) {
  const auto e = binom_expectations(2);
  EXPECT_NEAR(e.inv_one_plus_x, 0.75, 1e-15);
  EXPECT_NEAR(e.inv_two_plus_x, 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(e.inv_two_plus_y, 0.5, 1e-15);
  EXPECT_NEAR(e.inv_three_plus_y, 1.0 / 3.0, 1e-15);
}

TEST(BinomExpectations, MatchPascalEnumeration) {
  for (int n = 2; n <= 30; ++n) {
    const auto e = binom_expectations(n);
    const long double p = 1.0L / n;
    EXPECT_NEAR(e.inv_one_plus_x, pascal_expect(n - 1, p, [](int x) { return 1.0L / (1 + x); }), 1e-12);
    EXPECT_NEAR(e.inv_two_plus_x, pascal_expect(n - 1, p, [](int x) { return 1.0L / (2 + x); }), 1e-12);
    EXPECT_NEAR(e.inv_two_plus_y, pascal_expect(n - 2, p, [](int y) { return 1.0L / (2 + y); }), 1e-12);
    EXPECT_NEAR(e.inv_three_plus_y, pascal_expect(n - 2, p, [](int y) { return 1.0L / (3 + y); }), 1e-12);
  }
  EXPECT_THROW(binom_expectations(1), std::domain_error);
}

TEST(RatioIdentities, HandValues) {
  EXPECT_NEAR(ratio_binom_identities(1, 1).share_of_positive, 1.0, 1e-15);
  EXPECT_NEAR(ratio_binom_identities(1, 2).share_of_positive, 3.0 / 8.0, 1e-15);
  EXPECT_THROW(ratio_binom_identities(0, 3), std::domain_error);
  EXPECT_THROW(ratio_binom_identities(4, 3), std::domain_error);
}

TEST(RatioIdentities, MatchJointEnumeration) {
  for (int m = 1; m <= 12; ++m) {
    const long double p = 1.0L / m;
    for (int k = 1; k <= m; ++k) {
      const auto px = pascal_pmf(k, p);
      const auto py = pascal_pmf(m - k, p);
      long double a = 0.0L, b = 0.0L;
      for (int x = 0; x <= k; ++x) {
        for (int y = 0; y <= m - k; ++y) {
          const long double w = px[x] * py[y];
          if (x > 0) a += w * x / static_cast<long double>(x + y);
          b += w * x / static_cast<long double>(1 + x + y);
        }
      }
      const auto r = ratio_binom_identities(k, m);
      EXPECT_NEAR(r.share_of_positive, static_cast<double>(a), 1e-12) << k << "/" << m;
      EXPECT_NEAR(r.share_plus_one, static_cast<double>(b), 1e-12) << k << "/" << m;
    }
  }
}

TEST(BinomialPmf, LogSpaceBranchAgreesWithPascal) {
  for (int trials : {10, 60, 61, 100, 300}) {
    for (double p : {0.01, 0.3, 0.5}) {
      const auto lib = binomial_pmf(trials, p);
      const auto ref = pascal_pmf(trials, p);
      double total = 0.0;
      for (int i = 0; i <= trials; ++i) {
        total += lib[i];
        EXPECT_NEAR(lib[i], static_cast<double>(ref[i]), 1e-13 + 1e-10 * static_cast<double>(ref[i]));
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(expect_binomial(4, 0.5, [](int x) { return static_cast<double>(x); }), 2.0, 1e-14);
}

TEST(RobustnessBound, HandValues) {
  EXPECT_NEAR(robustness_lower_bound(1e-12, 8.0 / 3.0).robustness, 0.625, 1e-9);
  EXPECT_NEAR(robustness_lower_bound(1.0, 8.0 / 3.0).robustness, 0.75, 1e-15);
  const auto r = robustness_lower_bound(0.25, 8.0 / 3.0);
  EXPECT_NEAR(r.case_no_exhaust, 1.0 - 3.0 * 0.75 / (2.75 * 8.0 / 3.0), 1e-15);
  EXPECT_NEAR(r.case_exhaust, 4.75 / (8.0 / 3.0 * 2.75), 1e-15);
  EXPECT_EQ(r.robustness, std::min(r.case_no_exhaust, r.case_exhaust));
  EXPECT_THROW(robustness_lower_bound(0.5, 1.5), std::domain_error);
  EXPECT_THROW(robustness_lower_bound(0.0, 3.0), std::domain_error);
}

TEST(RobustnessBound, EquilibriumConstantWithMatchingShareBeatsFiveOverThreeE) {
  const double floor = 5.0 / (3.0 * std::exp(1.0));
  for (int n = 2; n <= 2000; ++n) {
    EXPECT_GE(robustness_lower_bound(1.0 / n, equilibrium_payment_constant(n)).robustness, floor - 1e-12) << n;
  }
}

TEST(LpOracle, FourAgentsAtSubsidyConstant) {
  const auto r = lp_oracle(0.25, 8.0 / 3.0, 4);
  const auto b = robustness_lower_bound(0.25, 8.0 / 3.0);
  EXPECT_NEAR(r.value_case1, b.case_no_exhaust, 1e-9);
  EXPECT_NEAR(r.value_case2, b.case_exhaust, 1e-9);
  EXPECT_NEAR(r.value_case1, 0.693181818182, 1e-12);
  EXPECT_NEAR(r.value_case2, 0.647727272727, 1e-12);
}

TEST(LpOracle, OnlySoloAndPairSupportWhenTwoAgents) {
  const auto r = lp_oracle(0.5, 3.0, 2);
  EXPECT_LE(r.argmin_case1.k_high, 1);
  EXPECT_LE(r.argmin_case2.k_high, 1);
  EXPECT_THROW(lp_oracle(0.5, 3.0, 1), std::domain_error);
  EXPECT_THROW(lp_oracle(0.5, 1.9, 3), std::domain_error);
}

// Dense grid over the 3-simplex as an independent check of the vertex search.
TEST(LpOracle, GridSearchAgreesForThreeAgents) {
  for (double alpha : {0.2, 1.0 / 3.0, 0.6}) {
    for (double b : {2.0, 8.0 / 3.0, 4.0}) {
      const auto r = lp_oracle(alpha, b, 3);
      double best1 = 1e9, best2 = 1e9;
      const int steps = 400;
      for (int i = 0; i <= steps; ++i) {
        for (int j = 0; i + j <= steps; ++j) {
          const double x[3] = {static_cast<double>(i) / steps, static_cast<double>(j) / steps,
                               static_cast<double>(steps - i - j) / steps};
          double win = 0.0, pay = 0.0, spend = 0.0, share = 0.0;
          for (int k = 0; k < 3; ++k) {
            const double c = (1 - alpha) * k / (1.0 + k) + alpha * k / (2.0 + k);
            win += x[k] / (1.0 + k);
            pay += b * x[k] / (2.0 + k);
            spend += c * x[k];
            share += (1 - alpha) * x[k] / (2.0 + k);
          }
          if (b * spend <= 1 - alpha + 1e-12) best1 = std::min(best1, win);
          if (share >= spend - 1e-12) best2 = std::min(best2, win / pay);
        }
      }
      EXPECT_LE(r.value_case1, best1 + 1e-12);
      EXPECT_NEAR(r.value_case1, best1, 5e-3);
      EXPECT_LE(r.value_case2, best2 + 1e-12);
      EXPECT_NEAR(r.value_case2, best2, 5e-3);
    }
  }
}

TEST(EquilibriumConstant, ValuesAndLimit) {
  EXPECT_NEAR(equilibrium_payment_constant(2), 2.4, 1e-14);
  EXPECT_NEAR(equilibrium_payment_constant(2), 1.0 / (5.0 / 12.0), 1e-14);
  EXPECT_NEAR(equilibrium_payment_constant(1'000'000), std::exp(1.0), 1e-5);
  for (int n = 2; n <= 10'000; ++n) EXPECT_GE(equilibrium_payment_constant(n), 2.0);
  EXPECT_THROW(equilibrium_payment_constant(1), std::domain_error);
}

TEST(NashFraction, ValuesAndLimit) {
  EXPECT_EQ(nash_fraction(1), 1.0);
  EXPECT_NEAR(nash_fraction(5), 1.0 - std::pow(0.8, 5), 1e-15);
  EXPECT_NEAR(nash_fraction(5), 0.67232, 1e-12);
  EXPECT_NEAR(nash_fraction(10'000'000), 1.0 - std::exp(-1.0), 1e-7);
  EXPECT_THROW(nash_fraction(0), std::domain_error);
}

TEST(Rationalize, SmallestDenominatorMeetingTolerance) {
  const auto r = rationalize_shares({0.3, 0.7}, 0.05);
  EXPECT_EQ(r.m, 34);
  EXPECT_EQ(r.k, (std::vector<int>{10, 24}));
  const auto half = rationalize_shares({0.5, 0.5}, 0.1);
  EXPECT_EQ(half.m, 10);
  EXPECT_EQ(half.k, (std::vector<int>{5, 5}));
}

TEST(Rationalize, PostConditionsAndUtilityGuarantee) {
  Rng rng(21);
  const std::vector<ValueDistribution> laws = {Uniform01{}, Bernoulli{0.3},
                                               make_discrete({{1.0, 0.2}, {0.4, 0.3}, {0.1, 0.5}})};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 4);
    std::vector<double> s(n);
    double total = 0.0;
    for (auto& x : s) total += (x = 0.05 + uniform01(rng));
    for (auto& x : s) x /= total;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) sum += s[i];
    s.back() = 1.0 - sum;
    const double eps = 0.02 + 0.2 * uniform01(rng);
    const auto r = rationalize_shares(s, eps);
    const double lo = *std::min_element(s.begin(), s.end());
    EXPECT_GE(r.m, static_cast<int>(std::ceil(1.0 / (2.0 * lo * eps) - 1e-9)));
    int ksum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ksum += r.k[i];
      const double approx = static_cast<double>(r.k[i]) / r.m;
      EXPECT_LE(std::abs(approx - s[i]), s[i] * eps + 1e-15);
      for (const auto& d : laws) {
        EXPECT_GE(ideal_utility(d, std::min(1.0, approx)), (1.0 - eps) * ideal_utility(d, s[i]) - 1e-12);
      }
    }
    EXPECT_EQ(ksum, r.m);
  }
}

TEST(Rationalize, RejectsBadInput) {
  EXPECT_THROW(rationalize_shares({0.5, 0.5}, 0.0), std::domain_error);
  EXPECT_THROW(rationalize_shares({0.5, 0.5}, 1.0), std::domain_error);
  EXPECT_THROW(rationalize_shares({0.4, 0.4}, 0.1), std::domain_error);
  EXPECT_THROW(rationalize_shares({1e-6, 1.0 - 1e-6}, 1e-3, 1000), std::domain_error);
}

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "artcredit/analytics.hpp"
#include "artcredit/bound_optimizer.hpp"
#include "artcredit/mechanism.hpp"
#include "artcredit/sim_engine.hpp"

namespace artcredit {

// One row of a verification or reproduction table.
struct Check {
  std::string name;
  double measured = 0.0;
  double target = 0.0;
  std::string relation;  // "~" (|measured - target| <= tolerance), ">=" or "<="
  double tolerance = 0.0;
  bool passed = false;
};

inline Check check_close(std::string name, double measured, double target, double tol) {
  return {std::move(name), measured, target, "~", tol, std::abs(measured - target) <= tol};
}

inline Check check_at_least(std::string name, double measured, double target) {
  return {std::move(name), measured, target, ">=", 0.0, measured >= target};
}

inline Check check_at_most(std::string name, double measured, double target) {
  return {std::move(name), measured, target, "<=", 0.0, measured <= target};
}

inline bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

// Closed-form binomial identities against pmf enumeration, n, k, m <= 30.
inline std::vector<Check> verify_identities() {
  std::vector<Check> out;
  for (int n = 2; n <= 30; ++n) {
    const auto cf = binom_expectations(n);
    const double p = 1.0 / n;
    const double err = std::max({
        std::abs(cf.inv_one_plus_x - expect_binomial(n - 1, p, [](int x) { return 1.0 / (1 + x); })),
        std::abs(cf.inv_two_plus_x - expect_binomial(n - 1, p, [](int x) { return 1.0 / (2 + x); })),
        std::abs(cf.inv_two_plus_y - expect_binomial(n - 2, p, [](int y) { return 1.0 / (2 + y); })),
        std::abs(cf.inv_three_plus_y - expect_binomial(n - 2, p, [](int y) { return 1.0 / (3 + y); })),
    });
    out.push_back(check_close("binomial expectations n=" + std::to_string(n), err, 0.0, 1e-12));
  }
  for (int m = 1; m <= 30; ++m) {
    double err = 0.0;
    for (int k = 1; k <= m; ++k) {
      const auto cf = ratio_binom_identities(k, m);
      const auto px = binomial_pmf(k, 1.0 / m);
      const auto py = binomial_pmf(m - k, 1.0 / m);
      double e1 = 0.0, e2 = 0.0;
      for (int x = 0; x <= k; ++x) {
        for (int y = 0; y <= m - k; ++y) {
          const double w = px[static_cast<std::size_t>(x)] * py[static_cast<std::size_t>(y)];
          if (x > 0) e1 += w * x / static_cast<double>(x + y);
          e2 += w * x / static_cast<double>(1 + x + y);
        }
      }
      err = std::max({err, std::abs(cf.share_of_positive - e1), std::abs(cf.share_plus_one - e2)});
    }
    out.push_back(check_close("ratio identities m=" + std::to_string(m) + " (all k)", err, 0.0, 1e-12));
  }
  for (int n = 2; n <= 30; ++n) {
    const double e = expect_binomial(n - 1, 1.0 / n, [](int x) { return 1.0 / (2 + x); });
    out.push_back(check_close("payment calibration n=" + std::to_string(n), equilibrium_payment_constant(n) * e, 1.0,
                              1e-12));
  }
  for (int n = 1; n <= 30; ++n) {
    const double e = expect_binomial(n - 1, 1.0 / n, [](int x) { return 1.0 / (1 + x); });
    out.push_back(check_close("nash fraction n=" + std::to_string(n), nash_fraction(n), e, 1e-12));
  }
  return out;
}

// Robustness bound, program oracle and payment-constant checks.
inline std::vector<Check> verify_bounds() {
  std::vector<Check> out;
  const double e = std::exp(1.0);
  for (double alpha : {0.01, 0.1, 0.25, 0.5, 0.9}) {
    for (double b_bar : {2.0, 8.0 / 3.0, e}) {
      for (int n : {2, 3, 5, 10, 50}) {
        const auto cf = robustness_lower_bound(alpha, b_bar);
        const auto lp = lp_oracle(alpha, b_bar, n);
        const double err = std::max(std::abs(lp.value_case1 - cf.case_no_exhaust),
                                    std::abs(lp.value_case2 - cf.case_exhaust));
        const bool support_ok = lp.argmin_case1.k_low == 0 && lp.argmin_case1.k_high == 1 &&
                                lp.argmin_case2.k_low == 0 && lp.argmin_case2.k_high == 1;
        char name[96];
        std::snprintf(name, sizeof name, "program vs closed form alpha=%g b_bar=%.4f n=%d", alpha, b_bar, n);
        auto c = check_close(name, err, 0.0, 1e-9);
        c.passed = c.passed && support_ok;
        out.push_back(c);
      }
    }
  }
  double worst = 1.0;
  for (int n = 2; n <= 10000; ++n) {
    worst = std::min(worst, robustness_lower_bound(1.0 / n, equilibrium_payment_constant(n)).robustness);
  }
  out.push_back(check_at_least("min robustness at equilibrium constant, n=2..10000", worst, 5.0 / (3.0 * e)));
  double low_b = 1e300;
  for (int n = 2; n <= 100; ++n) low_b = std::min(low_b, equilibrium_payment_constant(n));
  out.push_back(check_at_least("equilibrium constant >= 2 for n=2..100", low_b, 2.0));
  out.push_back(check_close("equilibrium constant at n=1e6 vs e", equilibrium_payment_constant(1'000'000), e, 1e-5));
  double calib = 0.0;
  for (int n = 2; n <= 100; ++n) {
    const double ex = expect_binomial(n - 1, 1.0 / n, [](int x) { return 1.0 / (2 + x); });
    calib = std::max(calib, std::abs(equilibrium_payment_constant(n) * ex - 1.0));
  }
  out.push_back(check_close("payment calibration n=2..100", calib, 0.0, 1e-12));
  double worst_subsidy = 1.0;
  for (int i = 1; i <= 1000; ++i) {
    worst_subsidy = std::min(worst_subsidy, robustness_lower_bound(i / 1000.0, 8.0 / 3.0).robustness);
  }
  out.push_back(check_at_least("robustness at b_bar=8/3 over alpha grid", worst_subsidy, 0.625 - 1e-12));
  return out;
}

// Knobs for the reproduction experiments; unset values use the defaults.
struct ClaimOptions {
  std::optional<std::int64_t> horizon;
  std::optional<int> replications;
  std::uint64_t seed = 1;
  int threads = 1;
  int steps = 120;
  int refine = 2;
};

struct ClaimReport {
  std::string claim;
  std::vector<Check> checks;
  bool passed = false;
};

inline ExperimentConfig subsidy_robustness_config(const Strategy& adversary, std::int64_t horizon, int reps,
                                                  std::uint64_t seed) {
  ExperimentConfig c;
  c.mechanism.kind = MechanismKind::CompetitiveSubsidy;
  c.mechanism.horizon = horizon;
  c.mechanism.payment = SubsidySchedule{8.0 / 3.0};
  c.agents.push_back({0.25, Uniform01{}, Aggressive{0.25}});
  for (int j = 0; j < 3; ++j) c.agents.push_back({0.25, Uniform01{}, adversary});
  c.focal_agent = 0;
  c.replications = reps;
  c.base_seed = seed;
  return c;
}

inline ExperimentConfig bidding_minimum_equilibrium_config(std::int64_t horizon, int reps, std::uint64_t seed) {
  ExperimentConfig c;
  c.mechanism.kind = MechanismKind::BiddingMinimum;
  c.mechanism.horizon = horizon;
  c.mechanism.payment = SubsidySchedule{equilibrium_payment_constant(5)};
  const std::vector<ValueDistribution> dists{Uniform01{}, Bernoulli{0.5}, Bernoulli{0.1},
                                             make_discrete({{1.0, 0.1}, {0.5, 0.2}, {0.0, 0.7}}), Constant{0.4}};
  const auto profile = equilibrium_profile(dists.size(), dists);
  for (std::size_t i = 0; i < dists.size(); ++i) c.agents.push_back({0.2, dists[i], profile[i]});
  c.replications = reps;
  c.base_seed = seed;
  return c;
}

inline ExperimentConfig asymmetric_equilibrium_config(std::int64_t horizon, int reps, std::uint64_t seed) {
  ExperimentConfig c;
  c.mechanism.kind = MechanismKind::AsymmetricFairShare;
  c.mechanism.horizon = horizon;
  c.mechanism.common_denominator = 4;
  c.mechanism.payment = SubsidySchedule{equilibrium_payment_constant(4)};
  c.agents.push_back({0.25, Uniform01{}, GroupAggressive{1, 4}});
  c.agents.push_back({0.75, Uniform01{}, GroupAggressive{3, 4}});
  c.replications = reps;
  c.base_seed = seed;
  return c;
}

// Exact probability of a bit pattern (bit j of `mask` is simulated agent j)
// under k i.i.d. Bernoulli(1/m) bits conditioned on at least one 1.
inline double conditioned_pattern_probability(int k, int m, unsigned mask) {
  if (mask == 0) return 0.0;
  const double p = 1.0 / m;
  double w = 1.0;
  for (int j = 0; j < k; ++j) w *= (mask >> j) & 1u ? p : 1.0 - p;
  return w / (1.0 - std::pow(1.0 - p, k));
}

// Total variation distance between `draws` samples and the exact law.
inline double conditioned_sampler_tv(int k, int m, std::int64_t draws, std::uint64_t seed) {
  std::vector<std::int64_t> counts(std::size_t{1} << k, 0);
  Rng rng(seed);
  Bits bits;
  for (std::int64_t d = 0; d < draws; ++d) {
    sample_conditioned_bernoulli(k, m, rng, bits);
    unsigned mask = 0;
    for (int j = 0; j < k; ++j) mask |= static_cast<unsigned>(bits[static_cast<std::size_t>(j)]) << j;
    ++counts[mask];
  }
  double tv = 0.0;
  for (unsigned mask = 0; mask < counts.size(); ++mask) {
    tv += std::abs(static_cast<double>(counts[mask]) / static_cast<double>(draws) -
                   conditioned_pattern_probability(k, m, mask));
  }
  return tv / 2.0;
}

inline ClaimReport reproduce_thm1(const ClaimOptions& o) {
  ClaimReport r{"thm1", {}, false};
  const auto horizon = o.horizon.value_or(200'000);
  const int reps = o.replications.value_or(30);
  const std::vector<std::pair<std::string, Strategy>> adversaries{{"coordinated_k(1)", CoordinatedK{1}},
                                                                  {"coordinated_k(2)", CoordinatedK{2}},
                                                                  {"coordinated_k(3)", CoordinatedK{3}},
                                                                  {"fixed_rate(0)", FixedRate{0.0}}};
  for (const auto& [name, adv] : adversaries) {
    auto c = subsidy_robustness_config(adv, horizon, reps, o.seed);
    c.threads = o.threads;
    const auto est = robustness_estimate(c);
    r.checks.push_back(check_at_least("focal fraction vs " + name, est.mean, 0.625 - 0.04));
    if (name == "coordinated_k(1)") {
      r.checks.push_back(check_at_most("focal fraction vs " + name + " (near-tight)", est.mean, 0.70));
    }
  }
  r.passed = all_passed(r.checks);
  return r;
}

inline ClaimReport reproduce_thm2(const ClaimOptions& o) {
  ClaimReport r{"thm2", {}, false};
  const auto res = search({o.steps, o.refine, o.threads});
  r.checks.push_back(check_at_most("grid max of min_k mu", res.best_value, 0.625 + 0.01));
  const auto p = subsidy_point(8.0 / 3.0);
  const double at = mu(p, 1).mu;
  r.checks.push_back(check_close("mu at subsidy point, k=1", at, 0.625, 1e-3));
  r.checks.push_back(check_close("mu vs gamma sweep at subsidy point, k=1", at, sweep_mu(p, 1), 1e-3));
  r.passed = all_passed(r.checks);
  return r;
}

inline ClaimReport reproduce_thm3(const ClaimOptions& o) {
  ClaimReport r{"thm3", {}, false};
  auto c = bidding_minimum_equilibrium_config(o.horizon.value_or(100'000), o.replications.value_or(30), o.seed);
  c.threads = o.threads;
  const auto summary = run_replicated(c);
  const double target = nash_fraction(5) - 0.04;
  for (std::size_t i = 0; i < summary.agents.size(); ++i) {
    r.checks.push_back(check_at_least("equilibrium fraction agent " + std::to_string(i),
                                      summary.agents[i].realized_fraction.mean, target));
  }
  for (std::size_t i = 0; i < c.agents.size(); ++i) {
    for (const Strategy& dev : {Strategy{FixedRate{1.0}}, Strategy{ThresholdDeviation{0.1}}}) {
      const auto g = deviation_gain(c, dev, i);
      r.checks.push_back(check_at_most("gain of " + strategy_name(dev) + " for agent " + std::to_string(i),
                                       g.gain.mean, 0.02 * g.ideal_utility));
    }
  }
  r.passed = all_passed(r.checks);
  return r;
}

inline ClaimReport reproduce_thm4(const ClaimOptions& o) {
  ClaimReport r{"thm4", {}, false};
  auto c = asymmetric_equilibrium_config(o.horizon.value_or(100'000), o.replications.value_or(30), o.seed);
  c.threads = o.threads;
  const auto summary = run_replicated(c);
  const double target = nash_fraction(4) - 0.04;
  for (std::size_t i = 0; i < summary.agents.size(); ++i) {
    r.checks.push_back(check_at_least("group-aggressive fraction agent " + std::to_string(i),
                                      summary.agents[i].realized_fraction.mean, target));
  }
  r.checks.push_back(check_at_most("conditioned sampler k=4 m=4 total variation",
                                   conditioned_sampler_tv(4, 4, 1'000'000, o.seed), 0.005));
  r.passed = all_passed(r.checks);
  return r;
}

}  // namespace artcredit

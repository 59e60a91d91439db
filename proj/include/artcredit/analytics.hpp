#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace artcredit {

// Closed forms for X ~ Bin(n-1, 1/n) and Y ~ Bin(n-2, 1/n).
struct BinomExpectations {
  double inv_one_plus_x = 0.0;    // E[1/(1+X)]
  double inv_two_plus_x = 0.0;    // E[1/(2+X)]
  double inv_two_plus_y = 0.0;    // E[1/(2+Y)]
  double inv_three_plus_y = 0.0;  // E[1/(3+Y)]
};

namespace detail {

// (1 - 1/n)^e computed through log1p to stay accurate for huge n.
inline double keep_power(double n, double e) { return std::exp(e * std::log1p(-1.0 / n)); }

}  // namespace detail

inline BinomExpectations binom_expectations(int n) {
  if (n < 2) throw std::domain_error("binomial expectations need n >= 2");
  const auto nd = static_cast<double>(n);
  BinomExpectations e;
  e.inv_one_plus_x = 1.0 - detail::keep_power(nd, nd);
  e.inv_two_plus_x = (1.0 + nd * detail::keep_power(nd, nd + 1.0)) / (nd + 1.0);
  e.inv_two_plus_y = detail::keep_power(nd, nd - 1.0);
  e.inv_three_plus_y = nd / (nd + 1.0) * (1.0 - 2.0 * detail::keep_power(nd, nd));
  return e;
}

// Closed forms for X ~ Bin(k, 1/m), Y ~ Bin(m-k, 1/m) independent.
struct RatioBinomIdentities {
  double share_of_positive = 0.0;  // E[X/(X+Y) 1{X>0}]
  double share_plus_one = 0.0;     // E[X/(1+X+Y)]
};

inline RatioBinomIdentities ratio_binom_identities(int k, int m) {
  if (k < 1 || k > m) throw std::domain_error("ratio identities need 1 <= k <= m");
  const auto kd = static_cast<double>(k);
  const auto md = static_cast<double>(m);
  RatioBinomIdentities r;
  r.share_of_positive = kd / md * (1.0 - detail::keep_power(md, md));
  r.share_plus_one = kd / md * (1.0 + md * detail::keep_power(md, md + 1.0)) / (md + 1.0);
  return r;
}

// Binomial(trials, p) pmf as a vector; log-space beyond 60 trials.
inline std::vector<double> binomial_pmf(int trials, double p) {
  if (trials < 0) throw std::domain_error("binomial trials must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(trials) + 1, 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  if (trials <= 60) {
    double c = 1.0;  // C(trials, j)
    for (int j = 0; j <= trials; ++j) {
      pmf[static_cast<std::size_t>(j)] = c * std::pow(p, j) * std::pow(1.0 - p, trials - j);
      c = c * static_cast<double>(trials - j) / static_cast<double>(j + 1);
    }
    return pmf;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lg_n = std::lgamma(trials + 1.0);
  for (int j = 0; j <= trials; ++j) {
    const double lc = lg_n - std::lgamma(j + 1.0) - std::lgamma(trials - j + 1.0);
    pmf[static_cast<std::size_t>(j)] = std::exp(lc + j * lp + (trials - j) * lq);
  }
  return pmf;
}

// E[f(X)] for X ~ Binomial(trials, p) by summing the pmf.
inline double expect_binomial(int trials, double p, const std::function<double(int)>& f) {
  const auto pmf = binomial_pmf(trials, p);
  double s = 0.0;
  for (int j = 0; j <= trials; ++j) s += pmf[static_cast<std::size_t>(j)] * f(j);
  return s;
}

// Two-case robustness bound for an alpha-aggressive agent.
struct BoundReport {
  double alpha = 0.0;
  double b_bar = 0.0;
  double case_no_exhaust = 0.0;  // total payments stay below alpha T
  double case_exhaust = 0.0;     // payments reach alpha T
  double robustness = 0.0;
};

inline BoundReport robustness_lower_bound(double alpha, double b_bar) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
  if (!(b_bar >= 2.0)) {
    throw std::domain_error("robustness bound holds only for b_bar >= 2, got " + std::to_string(b_bar));
  }
  BoundReport r;
  r.alpha = alpha;
  r.b_bar = b_bar;
  r.case_no_exhaust = 1.0 - 3.0 * (1.0 - alpha) / ((3.0 - alpha) * b_bar);
  r.case_exhaust = (5.0 - alpha) / (b_bar * (3.0 - alpha));
  r.robustness = std::min(r.case_no_exhaust, r.case_exhaust);
  return r;
}

// A point of the simplex over other-bidder counts k = 0..n-1 with at most two
// nonzero coordinates.
struct SupportPoint {
  int k_low = 0;
  int k_high = 0;
  double weight_low = 1.0;
  double weight_high = 0.0;
};

struct LpOracleResult {
  double value_case1 = 0.0;
  double value_case2 = 0.0;
  SupportPoint argmin_case1;
  SupportPoint argmin_case2;
};

namespace detail {

// Minimizes num.x / den.x over the simplex in R^size subject to g.x <= h by
// enumerating its vertices: feasible unit vectors and points on edges where
// the constraint is tight. The objective is linear-fractional, so a vertex is
// optimal.
inline std::pair<double, SupportPoint> minimize_over_vertices(int size, const std::vector<double>& num,
                                                              const std::vector<double>& den,
                                                              const std::vector<double>& g, double h) {
  constexpr double feas_tol = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  SupportPoint arg;
  const auto consider = [&](int a, int b, double wa, double wb) {
    const auto ia = static_cast<std::size_t>(a);
    const auto ib = static_cast<std::size_t>(b);
    const double d = wa * den[ia] + wb * den[ib];
    if (!(d > 0.0)) return;
    const double v = (wa * num[ia] + wb * num[ib]) / d;
    if (v < best) {
      best = v;
      arg = SupportPoint{a, b, wa, wb};
    }
  };
  for (int a = 0; a < size; ++a) {
    if (g[static_cast<std::size_t>(a)] <= h + feas_tol) consider(a, a, 1.0, 0.0);
  }
  for (int a = 0; a < size; ++a) {
    for (int b = a + 1; b < size; ++b) {
      const double ga = g[static_cast<std::size_t>(a)];
      const double gb = g[static_cast<std::size_t>(b)];
      if (ga == gb) continue;
      const double wb = (h - ga) / (gb - ga);
      if (wb <= 0.0 || wb >= 1.0) continue;
      consider(a, b, 1.0 - wb, wb);
    }
  }
  if (!std::isfinite(best)) throw std::runtime_error("robustness program has no feasible vertex");
  return {best, arg};
}

}  // namespace detail

// Solves the two worst-case programs over x_k, the fraction of the focal
// agent's bids that meet k other bidders, k = 0..n-1.
//   case 1: min sum x_k/(1+k)  s.t.  b_bar sum c_k x_k <= 1 - alpha
//   case 2: min sum x_k/(1+k) / (b_bar sum x_k/(2+k))
//           s.t.  (1 - alpha) sum x_k/(2+k) >= sum c_k x_k
// with c_k = (1-alpha) k/(1+k) + alpha k/(2+k) the opponents' spend per bid.
inline LpOracleResult lp_oracle(double alpha, double b_bar, int n) {
  if (!(b_bar >= 2.0)) throw std::domain_error("robustness programs need b_bar >= 2");
  if (n < 2) throw std::domain_error("robustness programs need n >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
  const auto size = static_cast<std::size_t>(n);
  std::vector<double> c(size), win(size), ones(size, 1.0), pay(size), g1(size), g2(size);
  for (std::size_t k = 0; k < size; ++k) {
    const auto kd = static_cast<double>(k);
    c[k] = (1.0 - alpha) * kd / (1.0 + kd) + alpha * kd / (2.0 + kd);
    win[k] = 1.0 / (1.0 + kd);
    pay[k] = b_bar / (2.0 + kd);
    g1[k] = b_bar * c[k];
    g2[k] = c[k] - (1.0 - alpha) / (2.0 + kd);
  }
  LpOracleResult r;
  const auto [v1, a1] = detail::minimize_over_vertices(n, win, ones, g1, 1.0 - alpha);
  const auto [v2, a2] = detail::minimize_over_vertices(n, win, pay, g2, 0.0);
  r.value_case1 = v1;
  r.argmin_case1 = a1;
  r.value_case2 = v2;
  r.argmin_case2 = a2;
  return r;
}

// b_bar = (n+1)/(1 + n(1-1/n)^(n+1)) = 1/E[1/(2+X)], X ~ Bin(n-1, 1/n).
inline double equilibrium_payment_constant(int n) {
  if (n < 2) throw std::domain_error("equilibrium payment constant needs n >= 2");
  const auto nd = static_cast<double>(n);
  return (nd + 1.0) / (1.0 + nd * detail::keep_power(nd, nd + 1.0));
}

inline double nash_fraction(int n) {
  if (n < 1) throw std::domain_error("nash fraction needs n >= 1");
  const auto nd = static_cast<double>(n);
  return 1.0 - detail::keep_power(nd, nd);
}

struct RationalShares {
  int m = 0;
  std::vector<int> k;
};

// Smallest m >= ceil(1/(2 min_i alpha_i eps)) whose largest-remainder rounding
// k_i of alpha_i m sums to m with |k_i/m - alpha_i| <= alpha_i eps and k_i >= 1.
inline RationalShares rationalize_shares(const std::vector<double>& shares, double epsilon, int max_m = 1'000'000) {
  if (shares.empty()) throw std::domain_error("no shares to rationalize");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::domain_error("epsilon must lie in (0, 1)");
  double total = 0.0;
  double lo = 1.0;
  for (double s : shares) {
    if (!(s > 0.0)) throw std::domain_error("shares must be positive");
    total += s;
    lo = std::min(lo, s);
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::domain_error("shares must sum to 1");
  const double floor_m = std::ceil(1.0 / (2.0 * lo * epsilon) - 1e-9);
  if (floor_m > max_m) {
    throw std::domain_error("required denominator " + std::to_string(floor_m) + " exceeds cap " +
                            std::to_string(max_m));
  }
  const std::size_t n = shares.size();
  std::vector<int> k(n);
  std::vector<std::size_t> order(n);
  for (int m = std::max(1, static_cast<int>(floor_m)); m <= max_m; ++m) {
    int assigned = 0;
    std::vector<double> rem(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = shares[i] * m;
      k[i] = static_cast<int>(std::floor(x + 1e-12));
      rem[i] = x - k[i];
      assigned += k[i];
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (int extra = m - assigned, j = 0; extra > 0; --extra, ++j) ++k[order[static_cast<std::size_t>(j) % n]];
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      ok = k[i] >= 1 && std::abs(static_cast<double>(k[i]) / m - shares[i]) <= shares[i] * epsilon + 1e-15;
    }
    if (ok) return RationalShares{m, k};
  }
  throw std::domain_error("no denominator up to " + std::to_string(max_m) + " meets the tolerance");
}

}  // namespace artcredit

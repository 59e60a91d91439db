#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "artcredit/parallel.hpp"

namespace artcredit {

// First three entries of a payment table; later entries do not enter the bound.
struct PaymentPoint {
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  auto operator<=>(const PaymentPoint&) const = default;
};

inline double box_cap_p1() { return 2.0 * std::exp(1.0); }
inline double box_cap_p2() { return 4.0 * std::exp(1.0); }
inline double box_cap_p3() { return 12.0 * std::exp(1.0); }

inline PaymentPoint subsidy_point(double b_bar) { return {b_bar / 2.0, b_bar * 2.0 / 3.0, b_bar * 3.0 / 4.0}; }

enum class GammaSource { LowerBoundary, Crossing, UpperBoundary };

struct GammaCandidate {
  double gamma = 0.0;
  GammaSource source = GammaSource::LowerBoundary;
  double value = 0.0;
};

struct MuEvaluation {
  int k = 1;
  double gamma_low = 0.0;
  std::vector<GammaCandidate> candidates;
  double mu = 0.0;
  double argmax_gamma = 0.0;
};

namespace detail {

inline void check_mu_args(const PaymentPoint& p, int k) {
  if (!(p.p1 > 0.0)) throw std::domain_error("mu needs p1 > 0");
  if (k != 1 && k != 2) throw std::domain_error("mu is defined for k in {1, 2}");
}

inline double payment_k(const PaymentPoint& p, int k) { return k == 1 ? p.p1 : p.p2; }

// p_{k+1} / (k + 1)
inline double next_share(const PaymentPoint& p, int k) { return (k == 1 ? p.p2 : p.p3) / (k + 1.0); }

}  // namespace detail

// Focal utility ratio when opponents spend a gamma fraction of their budget
// on rounds with k other bidders and the rest bidding alone.
inline double mu_objective(const PaymentPoint& p, int k, double gamma) {
  detail::check_mu_args(p, k);
  const double a = detail::next_share(p, k);
  const double wins = gamma / (1.0 + k) + (1.0 - gamma);
  const double spend = a * gamma + p.p1 * (1.0 - gamma);
  return wins * (spend > 0.0 ? std::min(1.0, 1.0 / spend) : 1.0);
}

// min{1, max{1/p_k, p1/(p_k - p_{k+1}/(k+1) + p1)}}; a term with a
// non-positive denominator drops out.
inline double gamma_lower_bound(const PaymentPoint& p, int k) {
  detail::check_mu_args(p, k);
  const double pk = detail::payment_k(p, k);
  const double a = detail::next_share(p, k);
  double lb = -std::numeric_limits<double>::infinity();
  lb = pk > 0.0 ? std::max(lb, 1.0 / pk) : std::numeric_limits<double>::infinity();
  const double den = pk - a + p.p1;
  if (den > 0.0) lb = std::max(lb, p.p1 / den);
  return std::min(1.0, lb);
}

inline constexpr double gamma_feasibility_tol = 1e-9;

inline MuEvaluation mu(const PaymentPoint& p, int k) {
  detail::check_mu_args(p, k);
  MuEvaluation e;
  e.k = k;
  e.gamma_low = gamma_lower_bound(p, k);
  e.candidates.push_back({e.gamma_low, GammaSource::LowerBoundary, mu_objective(p, k, e.gamma_low)});
  // Where the two branches of the min meet: a gamma + p1 (1 - gamma) = 1.
  const double a = detail::next_share(p, k);
  if (a != p.p1) {
    const double g = (1.0 - p.p1) / (a - p.p1);
    if (g >= e.gamma_low - gamma_feasibility_tol && g <= 1.0 + gamma_feasibility_tol) {
      const double gc = std::clamp(g, e.gamma_low, 1.0);
      e.candidates.push_back({gc, GammaSource::Crossing, mu_objective(p, k, gc)});
    }
  }
  // gamma = 1 caps the objective at 1/(1+k); it only wins when mu <= 1/2.
  if (e.gamma_low < 1.0) e.candidates.push_back({1.0, GammaSource::UpperBoundary, mu_objective(p, k, 1.0)});
  e.mu = e.candidates.front().value;
  e.argmax_gamma = e.candidates.front().gamma;
  for (const auto& c : e.candidates) {
    if (c.value > e.mu) {
      e.mu = c.value;
      e.argmax_gamma = c.gamma;
    }
  }
  return e;
}

// Brute-force max of the objective over a uniform gamma grid on
// [gamma_low, 1], then a finer grid around the best sample.
inline double sweep_mu(const PaymentPoint& p, int k, int samples = 100000) {
  if (samples < 2) throw std::invalid_argument("sweep needs at least two samples");
  const double lo = gamma_lower_bound(p, k);
  const double step = (1.0 - lo) / (samples - 1);
  double best = -std::numeric_limits<double>::infinity();
  double best_gamma = lo;
  for (int i = 0; i < samples; ++i) {
    const double g = i + 1 == samples ? 1.0 : lo + step * i;
    const double v = mu_objective(p, k, g);
    if (v > best) {
      best = v;
      best_gamma = g;
    }
  }
  const double a = std::max(lo, best_gamma - step);
  const double b = std::min(1.0, best_gamma + step);
  for (int i = 0; i <= 1000; ++i) best = std::max(best, mu_objective(p, k, a + (b - a) * i / 1000.0));
  return best;
}

struct GridRow {
  PaymentPoint point;
  std::array<double, 2> gamma{};  // argmax gamma for k = 1, 2
  std::array<double, 2> mu{};
  double min_mu = 0.0;
};

inline GridRow evaluate_point(const PaymentPoint& p) {
  GridRow row;
  row.point = p;
  for (int k = 1; k <= 2; ++k) {
    const auto e = mu(p, k);
    row.gamma[static_cast<std::size_t>(k - 1)] = e.argmax_gamma;
    row.mu[static_cast<std::size_t>(k - 1)] = e.mu;
  }
  row.min_mu = std::min(row.mu[0], row.mu[1]);
  return row;
}

struct SearchOptions {
  int steps = 120;
  int refine = 2;
  int threads = 1;
};

struct SearchResult {
  PaymentPoint best_point;
  double best_value = -std::numeric_limits<double>::infinity();
  std::int64_t evaluated = 0;
};

namespace detail {

// Higher value wins; equal values go to the lexicographically smaller point.
inline bool improves(const GridRow& row, const SearchResult& inc) {
  if (row.min_mu != inc.best_value) return row.min_mu > inc.best_value;
  return row.point < inc.best_point;
}

inline void absorb(const GridRow& row, SearchResult& inc) {
  ++inc.evaluated;
  if (improves(row, inc)) {
    inc.best_value = row.min_mu;
    inc.best_point = row.point;
  }
}

}  // namespace detail

using GridSink = std::function<void(const GridRow&)>;

// Maximizes min_{k in {1,2}} mu over the uniform grid p1 = 2e i/steps
// (i = 1..steps), p2 = 4e j/steps, p3 = 12e l/steps (j, l = 0..steps), then
// polishes the incumbent with `refine` local 5x5x5 passes at halving spacing.
// Every evaluated point goes to the sink in a deterministic order.
inline SearchResult search(const SearchOptions& opt, const GridSink* sink = nullptr) {
  if (opt.steps < 1) throw std::invalid_argument("grid needs at least one step per axis");
  if (opt.refine < 0) throw std::invalid_argument("refinement passes must be >= 0");
  const int s = opt.steps;
  const double h1 = box_cap_p1() / s;
  const double h2 = box_cap_p2() / s;
  const double h3 = box_cap_p3() / s;
  const auto slab = static_cast<std::size_t>(s + 1) * static_cast<std::size_t>(s + 1);
  const bool keep_rows = sink != nullptr && *sink;

  SearchResult inc;
  const std::size_t block = static_cast<std::size_t>(std::max(opt.threads, 1));
  std::vector<SearchResult> partial(block);
  std::vector<std::vector<GridRow>> rows(keep_rows ? block : 0);
  for (std::size_t start = 1; start <= static_cast<std::size_t>(s); start += block) {
    const std::size_t count = std::min(block, static_cast<std::size_t>(s) + 1 - start);
    parallel_for(count, opt.threads, [&](std::size_t b) {
      const double p1 = h1 * static_cast<double>(start + b);
      SearchResult local;
      if (keep_rows) {
        rows[b].clear();
        rows[b].reserve(slab);
      }
      for (int j = 0; j <= s; ++j) {
        for (int l = 0; l <= s; ++l) {
          const auto row = evaluate_point({p1, h2 * j, h3 * l});
          detail::absorb(row, local);
          if (keep_rows) rows[b].push_back(row);
        }
      }
      partial[b] = local;
    });
    for (std::size_t b = 0; b < count; ++b) {
      inc.evaluated += partial[b].evaluated;
      GridRow best_row;
      best_row.point = partial[b].best_point;
      best_row.min_mu = partial[b].best_value;
      if (detail::improves(best_row, inc)) {
        inc.best_value = best_row.min_mu;
        inc.best_point = best_row.point;
      }
      if (keep_rows) {
        for (const auto& r : rows[b]) (*sink)(r);
      }
    }
  }

  double d1 = h1, d2 = h2, d3 = h3;
  for (int pass = 0; pass < opt.refine; ++pass) {
    d1 /= 2.0;
    d2 /= 2.0;
    d3 /= 2.0;
    const PaymentPoint center = inc.best_point;
    for (int a = -2; a <= 2; ++a) {
      for (int b = -2; b <= 2; ++b) {
        for (int c = -2; c <= 2; ++c) {
          PaymentPoint p{std::min(center.p1 + a * d1 / 2.0, box_cap_p1()),
                         std::clamp(center.p2 + b * d2 / 2.0, 0.0, box_cap_p2()),
                         std::clamp(center.p3 + c * d3 / 2.0, 0.0, box_cap_p3())};
          if (!(p.p1 > 0.0)) continue;
          const auto row = evaluate_point(p);
          detail::absorb(row, inc);
          if (keep_rows) (*sink)(row);
        }
      }
    }
  }
  return inc;
}

}  // namespace artcredit

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "artcredit/rng.hpp"

namespace artcredit {

// Per-round value laws. Every law is supported on [0, 1].

struct Bernoulli {
  double q = 0.5;  // P(V = 1); otherwise V = 0
};

struct Uniform01 {};

struct Atom {
  double value = 0.0;
  double probability = 0.0;
};

// Atoms are kept sorted by descending value with equal values merged; build
// through make_discrete() to get that normal form.
struct Discrete {
  std::vector<Atom> atoms;
};

struct Constant {
  double value = 0.0;
};

using ValueDistribution = std::variant<Bernoulli, Uniform01, Discrete, Constant>;

// Bid when V > threshold; at V == threshold bid with atom_bid_probability.
struct QuantileRule {
  double threshold = 1.0;
  double atom_bid_probability = 0.0;
};

namespace detail {

inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

inline void require_unit_value(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

// Sorted-descending atom view of a law with finite support. Uniform01 has none.
inline std::vector<Atom> atoms_of(const ValueDistribution& dist) {
  return std::visit(
      [](const auto& d) -> std::vector<Atom> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          std::vector<Atom> out;
          if (d.q > 0.0) out.push_back({1.0, d.q});
          if (d.q < 1.0) out.push_back({0.0, 1.0 - d.q});
          return out;
        } else if constexpr (std::is_same_v<T, Discrete>) {
          return d.atoms;
        } else if constexpr (std::is_same_v<T, Constant>) {
          return {Atom{d.value, 1.0}};
        } else {
          return {};
        }
      },
      dist);
}

}  // namespace detail

inline Bernoulli make_bernoulli(double q) {
  detail::require_probability(q, "bernoulli q");
  return Bernoulli{q};
}

inline Constant make_constant(double v) {
  detail::require_unit_value(v, "constant value");
  return Constant{v};
}

// Validates, drops zero-mass atoms, merges equal values and sorts descending.
inline Discrete make_discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) throw std::domain_error("discrete distribution needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    detail::require_unit_value(a.value, "atom value");
    detail::require_probability(a.probability, "atom probability");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::domain_error("discrete probabilities must sum to 1, got " + std::to_string(total));
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value > b.value; });
  Discrete out;
  for (const auto& a : atoms) {
    if (a.probability == 0.0) continue;
    if (!out.atoms.empty() && out.atoms.back().value == a.value) {
      out.atoms.back().probability += a.probability;
    } else {
      out.atoms.push_back(a);
    }
  }
  return out;
}

inline void validate(const ValueDistribution& dist) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          make_bernoulli(d.q);
        } else if constexpr (std::is_same_v<T, Constant>) {
          make_constant(d.value);
        } else if constexpr (std::is_same_v<T, Discrete>) {
          make_discrete(d.atoms);
        }
      },
      dist);
}

inline double mean(const ValueDistribution& dist) {
  if (std::holds_alternative<Uniform01>(dist)) return 0.5;
  double m = 0.0;
  for (const auto& a : detail::atoms_of(dist)) m += a.value * a.probability;
  return m;
}

// v*(beta): the best E[V rho(V)] over rho with E[rho(V)] <= beta. Finite laws
// are filled greedily from the top value down; Uniform01 is closed-form.
inline double ideal_utility(const ValueDistribution& dist, double beta) {
  detail::require_probability(beta, "beta");
  if (std::holds_alternative<Uniform01>(dist)) {
    const double rest = 1.0 - beta;
    return 0.5 * (1.0 - rest * rest);
  }
  if (const auto* b = std::get_if<Bernoulli>(&dist)) return std::min(b->q, beta);
  double remaining = beta;
  double total = 0.0;
  for (const auto& a : detail::atoms_of(dist)) {
    if (remaining <= 0.0) break;
    const double take = std::min(a.probability, remaining);
    total += take * a.value;
    remaining -= take;
  }
  return total;
}

// Threshold-form maximizer of the ideal-utility problem at share beta.
inline QuantileRule quantile_rule(const ValueDistribution& dist, double beta) {
  detail::require_probability(beta, "beta");
  if (std::holds_alternative<Uniform01>(dist)) {
    // atomless; the atom probability only matters on a null set
    return QuantileRule{1.0 - beta, beta > 0.0 ? 1.0 : 0.0};
  }
  const auto atoms = detail::atoms_of(dist);
  if (beta == 0.0) return QuantileRule{atoms.front().value, 0.0};
  double above = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& a = atoms[i];
    if (above + a.probability >= beta || i + 1 == atoms.size()) {
      const double p = std::clamp((beta - above) / a.probability, 0.0, 1.0);
      return QuantileRule{a.value, p};
    }
    above += a.probability;
  }
  return QuantileRule{atoms.back().value, 1.0};
}

// P(rule bids) under dist.
inline double bid_probability(const ValueDistribution& dist, const QuantileRule& rule) {
  if (std::holds_alternative<Uniform01>(dist)) return std::clamp(1.0 - rule.threshold, 0.0, 1.0);
  double p = 0.0;
  for (const auto& a : detail::atoms_of(dist)) {
    if (a.value > rule.threshold) {
      p += a.probability;
    } else if (a.value == rule.threshold) {
      p += a.probability * rule.atom_bid_probability;
    }
  }
  return p;
}

// E[V * 1{rule bids}] under dist.
inline double bid_value_mass(const ValueDistribution& dist, const QuantileRule& rule) {
  if (std::holds_alternative<Uniform01>(dist)) {
    const double c = std::clamp(rule.threshold, 0.0, 1.0);
    return 0.5 * (1.0 - c * c);
  }
  double m = 0.0;
  for (const auto& a : detail::atoms_of(dist)) {
    if (a.value > rule.threshold) {
      m += a.value * a.probability;
    } else if (a.value == rule.threshold) {
      m += a.value * a.probability * rule.atom_bid_probability;
    }
  }
  return m;
}

// Draws from rng only when the value sits exactly on a randomized cutoff atom.
inline bool fires(const QuantileRule& rule, double value, Rng& rng) {
  if (value > rule.threshold) return true;
  if (value < rule.threshold) return false;
  if (rule.atom_bid_probability >= 1.0) return true;
  if (rule.atom_bid_probability <= 0.0) return false;
  return bernoulli(rng, rule.atom_bid_probability);
}

inline double sample_value(const ValueDistribution& dist, Rng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return bernoulli(rng, d.q) ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Uniform01>) {
          return uniform01(rng);
        } else if constexpr (std::is_same_v<T, Constant>) {
          return d.value;
        } else {
          double u = uniform01(rng);
          for (const auto& a : d.atoms) {
            if (u < a.probability) return a.value;
            u -= a.probability;
          }
          return d.atoms.back().value;
        }
      },
      dist);
}

}  // namespace artcredit
